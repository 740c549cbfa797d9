"""Command-line harness: subcommands, exit codes, reproducibility."""

import json
import os

import numpy as np
import pytest

from nmshrink.cli import main


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def counts_csv(tmp_path):
    return write(tmp_path / "counts.csv", "3,0\n2,1\n0,4\n")


class TestEstimate:
    def test_umvu_round_trip(self, counts_csv, tmp_path, capsys):
        out = tmp_path / "est.csv"
        code = main(
            ["estimate", "--estimator", "umvu", "--r", "8", "--in", counts_csv,
             "--out", str(out)]
        )
        assert code == 0
        got = np.loadtxt(out, delimiter=",")
        np.testing.assert_allclose(
            got, [[3 / 12, 0], [2 / 12, 1 / 12], [0, 4 / 12]]
        )

    def test_all_zero_matrix(self, tmp_path, capsys):
        src = write(tmp_path / "z.csv", "0,0\n0,0\n")
        assert main(["estimate", "--estimator", "umvu", "--r", "8", "--in", src]) == 0
        outputs = capsys.readouterr().out
        assert np.loadtxt(outputs.splitlines(), delimiter=",").sum() == 0.0

    def test_seventeen_significant_digits(self, counts_csv, capsys):
        assert main(["estimate", "--estimator", "umvu", "--r", "8", "--in", counts_csv]) == 0
        line = capsys.readouterr().out.splitlines()[1]
        assert line.split(",")[0] == "0.16666666666666666"

    def test_ragged_csv_exit_2(self, tmp_path, capsys):
        src = write(tmp_path / "bad.csv", "1,2\n3\n")
        assert main(["estimate", "--estimator", "umvu", "--r", "8", "--in", src]) == 2
        assert "row 2" in capsys.readouterr().err

    def test_condition_violation_exit_4(self, tmp_path, capsys):
        src = write(tmp_path / "c.csv", "\n".join(["1,1"] * 7) + "\n")
        code = main(
            ["estimate", "--estimator", "hb", "--r", "2", "--alpha", "6", "--in", src]
        )
        assert code == 4

    def test_dry_run_validates_without_computing(self, counts_csv, capsys):
        code = main(
            ["estimate", "--estimator", "hb", "--r", "8", "--alpha", "6",
             "--in", counts_csv, "--dry-run"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["dry_run"] and doc["config"]["estimator"] == "hb"
        assert doc["config"]["shape"] == [3, 2]

    def test_posterior_mean_estimators(self, counts_csv, capsys):
        code = main(
            ["estimate", "--estimator", "dir-pm", "--r", "4", "--a0", "0",
             "--a", "1,1,1", "--in", counts_csv]
        )
        assert code == 0
        got = np.loadtxt(capsys.readouterr().out.splitlines(), delimiter=",")
        assert np.all(got > 0)


class TestKernelEval:
    def test_matches_library(self, tmp_path, capsys):
        from nmshrink.kernel import GChoice, log_kernel

        spec = {"alpha": 6, "beta": 1, "g": "g1", "xi0": 1, "xi": [3, 2, 4]}
        src = write(tmp_path / "k.json", json.dumps(spec))
        assert main(["kernel-eval", "--in", src]) == 0
        doc = json.loads(capsys.readouterr().out)
        want = log_kernel(6.0, 1.0, GChoice.constant_one(), 1.0, np.array([3.0, 2, 4]))
        assert doc["log_K"] == pytest.approx(want, abs=1e-12)
        assert doc["delta"] == pytest.approx(
            np.exp(doc["log_K_alpha_plus_1"] - doc["log_K"])
        )

    def test_komaki_spec(self, tmp_path, capsys):
        spec = {
            "alpha": 3, "beta": 0.5,
            "g": {"kind": "komaki", "c": 1.0, "kappa": 2.0},
            "xi0": 2, "xi": [1],
        }
        src = write(tmp_path / "k.json", json.dumps(spec))
        assert main(["kernel-eval", "--in", src]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["log_K"] == pytest.approx(-0.7919283094065629, abs=1e-9)

    def test_malformed_json_exit_2(self, tmp_path):
        src = write(tmp_path / "k.json", "{not json")
        assert main(["kernel-eval", "--in", src]) == 2


class TestAudit:
    def test_table1_pattern(self, capsys):
        assert main(["audit", "--table1"]) == 0
        rows = json.loads(capsys.readouterr().out)
        flags = [(r["EB0"], r["EB"], r["HB"]) for r in rows]
        assert flags == [(True, True, True), (False, False, True), (False, False, False)]

    def test_enforce_exit_4(self, tmp_path, capsys):
        scenario = {"kind": "eb", "m": 3, "r": 4}
        src = write(tmp_path / "s.json", json.dumps(scenario))
        assert main(["audit", "--in", src]) == 0
        assert main(["audit", "--in", src, "--enforce"]) == 4

    def test_verdict_renders_inequality_text(self, tmp_path, capsys):
        scenario = {"kind": "hb", "alpha": 14, "beta": 1, "r": 8, "m": 7, "n": 3}
        src = write(tmp_path / "s.json", json.dumps(scenario))
        assert main(["audit", "--in", src]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["holds"] is True
        assert "alpha+1=15" in doc["text"]

    def test_prior_kind(self, tmp_path, capsys):
        scenario = {
            "kind": "prior", "alpha": 6, "beta": 0, "a0": 1.0,
            "a": [1, 1, 1], "n_columns": 2, "r": 3,
        }
        src = write(tmp_path / "s.json", json.dumps(scenario))
        assert main(["audit", "--in", src]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["prior_proper"] is False
        assert "tail" in doc["reasons"]


class TestGibbsDiag:
    def test_report_fields(self, counts_csv, tmp_path, capsys):
        prior = {"alpha": 6, "beta": 1, "g": "g1", "a0": 0.5, "a": [1, 1, 1]}
        src = write(tmp_path / "prior.json", json.dumps(prior))
        code = main(
            ["gibbs-diag", "--counts", counts_csv, "--prior", src, "--r", "4",
             "--iters", "4000", "--burn-in", "1000", "--seed", "3"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {
            "posterior_mean_p", "posterior_mean_t", "ess_t", "delta_ss", "delta_kl",
        }
        assert doc["ess_t"] > 100
        assert len(doc["delta_kl"]) == 2
        assert np.asarray(doc["posterior_mean_p"]).shape == (3, 2)

    def test_improper_posterior_exit_4(self, counts_csv, tmp_path):
        prior = {"alpha": 6, "beta": 1, "g": "g1", "a0": -9.0, "a": [1, 1, 1]}
        src = write(tmp_path / "prior.json", json.dumps(prior))
        code = main(
            ["gibbs-diag", "--counts", counts_csv, "--prior", src, "--r", "4"]
        )
        assert code == 4


class TestRiskSim:
    def test_scenario_table(self, tmp_path):
        out = tmp_path / "t.csv"
        code = main(
            ["risk-sim", "--scenario", "iii", "--reps", "30", "--seed", "1",
             "--out", str(out)]
        )
        assert code == 0
        header = out.read_text().splitlines()[0].split(",")
        assert header[0] == "truth" and "HB_prial" in header

    def test_jobs_do_not_change_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["risk-sim", "--scenario", "iii", "--reps", "24", "--seed", "7"]
        assert main(base + ["--out", str(a)]) == 0
        assert main(base + ["--jobs", "2", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_custom_truth_kl(self, tmp_path):
        from nmshrink.model import ModelParams

        truth = ModelParams.from_matrix(5.0, np.full((9, 3), 1.0 / 18.0))
        src = write(tmp_path / "truth.json", truth.to_json())
        out = tmp_path / "kl.csv"
        code = main(
            ["risk-sim", "--truth", src, "--loss", "kl", "--reps", "20",
             "--seed", "2", "--estimators", "dir-pm,hb-pm", "--alpha", "5",
             "--a0", "-4", "--a", ",".join(["0.5"] * 9), "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("estimator,risk,se,prial_vs_dir-pm")
        assert len(lines) == 3

    def test_scenario_and_truth_are_exclusive(self, capsys):
        assert main(["risk-sim", "--scenario", "i", "--truth", "x.json"]) == 2


class TestRepro:
    def test_tables_and_manifest(self, tmp_path):
        out = tmp_path / "repro"
        code = main(
            ["repro", "tables", "--reps", "12", "--seed", "5", "--out", str(out)]
        )
        assert code == 0
        names = sorted(os.listdir(out))
        assert names == [
            "manifest.json", "table1.csv", "table2.csv", "table3.csv", "table4.csv",
        ]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5 and manifest["reps"] == 12
        assert (out / "table1.csv").read_text().splitlines()[1] == "i,+,+,+"

    def test_idempotent_tables(self, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert main(
                ["repro", "tables", "--reps", "8", "--seed", "3", "--out", str(out)]
            ) == 0
        for name in ("table1.csv", "table2.csv", "table3.csv", "table4.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_outdir_env_default(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("NMSHRINK_OUTDIR", str(tmp_path / "envout"))
        assert main(["repro", "tables", "--reps", "-1", "--dry-run"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["config"]["outdir"].endswith("envout")


class TestPersistedConfig:
    def test_replayed_run_is_bit_identical(self, counts_csv, tmp_path):
        direct = tmp_path / "direct.csv"
        replayed = tmp_path / "replayed.csv"
        argv = ["estimate", "--estimator", "eb", "--r", "8", "--in", counts_csv]
        assert main(argv + ["--out", str(direct)]) == 0
        cfg = write(
            tmp_path / "run.json",
            json.dumps({"argv": argv + ["--out", str(replayed)]}),
        )
        assert main(["--config", cfg]) == 0
        assert direct.read_bytes() == replayed.read_bytes()

    def test_bad_config_exit_2(self, tmp_path):
        cfg = write(tmp_path / "run.json", json.dumps({"args": []}))
        assert main(["--config", cfg]) == 2
        assert main(["--config", cfg, "extra"]) == 2
