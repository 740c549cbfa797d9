"""Command-line harness: estimate, risk-sim, audit, gibbs-diag, kernel-eval, repro.

Exit codes: 0 success, 2 malformed input, 3 numerical failure,
4 propriety/dominance condition violation.  Every subcommand accepts
--dry-run, which validates inputs and prints the resolved configuration
without computing.  The environment variable NMSHRINK_OUTDIR supplies the
default output directory for `repro`.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from importlib import metadata

import numpy as np

from . import audit as audit_mod
from .gibbs import ChainConfig, mcmc_delta_estimates, run_posterior
from .kernel import (
    ConditionError,
    GChoice,
    PriorSpec,
    QuadratureError,
    log_kernel,
    quadrature_settings,
)
from .model import read_counts_csv
from .risklab import case_table, compare, make_estimator

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NUMERIC = 3
EXIT_CONDITION = 4

_FLOAT_FMT = "%.17g"


def _version_string() -> str:
    try:
        version = metadata.version("nmshrink")
    except metadata.PackageNotFoundError:
        version = "unknown"
    q = quadrature_settings()
    return (
        f"nmshrink {version} (quadrature: {q['nodes_per_panel']}-node "
        f"Gauss-Legendre panels, {q['split_threshold_nats']:g}-nat split, "
        f"node cap {q['node_cap']}, {q['substitution']})"
    )


def _g_from_args(args) -> GChoice:
    if args.g == "g1":
        return GChoice.constant_one()
    return GChoice.komaki(args.g_c, args.g_kappa)


def _g_from_doc(doc) -> GChoice:
    if doc is None or doc == "g1" or doc == {"kind": "constant_one"}:
        return GChoice.constant_one()
    if isinstance(doc, dict):
        if doc.get("kind") in ("constant_one", "g1"):
            return GChoice.constant_one()
        if doc.get("kind") == "komaki":
            return GChoice.komaki(float(doc["c"]), float(doc["kappa"]))
    raise ValueError(f"unrecognized g specification: {doc!r}")


def _read_json(path: str | None):
    if path is None or path == "-":
        return json.load(sys.stdin)
    with open(path) as f:
        return json.load(f)


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _print_dry_run(config: dict) -> int:
    print(json.dumps({"dry_run": True, "config": config}, indent=2, default=str))
    return EXIT_OK


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise ValueError(f"bad vector {text!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _cmd_estimate(args) -> int:
    config = {
        "subcommand": "estimate",
        "estimator": args.estimator,
        "r": args.r,
        "alpha": args.alpha,
        "beta": args.beta,
        "g": args.g,
        "a0": args.a0,
        "a": args.a,
        "input": args.infile or "<stdin>",
        "output": args.out or "<stdout>",
        "header": args.header,
    }
    source = args.infile if args.infile else sys.stdin
    counts = read_counts_csv(source, header=args.header)
    if args.dry_run:
        config["shape"] = [counts.m, counts.n_columns]
        return _print_dry_run(config)

    kind = args.estimator
    g = _g_from_args(args)
    a = _parse_vector(args.a) if args.a else None
    if kind in ("hb", "hb-pm") and args.alpha is None:
        raise ValueError(f"--alpha is required for estimator {kind}")
    if kind in ("dir-pm", "hb-pm"):
        if args.a0 is None:
            raise ValueError(f"--a0 is required for estimator {kind}")
        if a is None:
            a = np.full(counts.m, 1.0)
    fn = make_estimator(kind, alpha=args.alpha, beta=args.beta, g=g, a0=args.a0, a=a)
    result = fn(counts, args.r)

    buf = io.StringIO()
    np.savetxt(buf, result, fmt=_FLOAT_FMT, delimiter=",")
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# risk-sim
# ---------------------------------------------------------------------------


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    for row in rows:
        writer.writerow(
            {
                k: (_FLOAT_FMT % v if isinstance(v, float) else v)
                for k, v in row.items()
            }
        )
    return buf.getvalue()


def _cmd_risk_sim(args) -> int:
    config = {
        "subcommand": "risk-sim",
        "scenario": args.scenario,
        "truth": args.truth,
        "reps": args.reps,
        "seed": args.seed,
        "loss": args.loss,
        "estimators": args.estimators,
        "n": args.n,
        "jobs": args.jobs,
        "output": args.out or "<stdout>",
    }
    if (args.scenario is None) == (args.truth is None):
        raise ValueError("give exactly one of --scenario or --truth")
    if args.dry_run:
        return _print_dry_run(config)

    if args.scenario is not None:
        rows = case_table(args.scenario, reps=args.reps, seed=args.seed, jobs=args.jobs)
        _write_text(args.out, _rows_to_csv(rows))
        return EXIT_OK

    from .model import ModelParams

    with open(args.truth) as f:
        truth = ModelParams.from_json(f.read())
    g = _g_from_args(args)
    a = _parse_vector(args.a) if args.a else np.full(truth.m, 1.0)
    names = [s.strip() for s in args.estimators.split(",") if s.strip()]
    fns = {
        name: make_estimator(
            name, alpha=args.alpha, beta=args.beta, g=g, a0=args.a0, a=a
        )
        for name in names
    }
    reference = names[0]
    reports = compare(
        fns,
        truth,
        loss=args.loss,
        n=args.n,
        reps=args.reps,
        seed=args.seed,
        reference=reference,
        jobs=args.jobs,
    )
    rows = [
        {
            "estimator": name,
            "risk": rep.risk,
            "se": rep.mc_stderr,
            "prial_vs_" + reference: rep.prial_vs_reference,
        }
        for name, rep in reports.items()
    ]
    _write_text(args.out, _rows_to_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------


def _audit_scenario(doc: dict) -> dict:
    kind = doc.get("kind")
    if kind == "prior":
        prior = PriorSpec(
            float(doc["alpha"]),
            float(doc["beta"]),
            _g_from_doc(doc.get("g")),
            float(doc["a0"]),
            np.asarray(doc["a"], dtype=float),
        )
        n_cols = int(doc["n_columns"])
        report = audit_mod.check_prior_propriety(prior, n_cols)
        out = {
            "kind": kind,
            "prior_proper": report.prior_proper,
            "reasons": report.reasons,
        }
        if "r" in doc:
            out["posterior_proper"] = report.posterior_proper_given_r(float(doc["r"]))
        return out
    if kind == "eb":
        m, r = int(doc["m"]), float(doc["r"])
        holds = audit_mod.check_eb_dominance(m, r)
        return {
            "kind": kind,
            "holds": holds,
            "conditions": {"m >= 7": m >= 7, "r >= 5/2": r >= 2.5},
            "text": f"m={m} {'>=' if m >= 7 else '<'} 7; r={r:g} "
            f"{'>=' if r >= 2.5 else '<'} 5/2",
        }
    if kind == "hb":
        alpha, beta = float(doc["alpha"]), float(doc["beta"])
        g = _g_from_doc(doc.get("g"))
        r, m, n = float(doc["r"]), int(doc["m"]), int(doc["n"])
        n_cols = int(doc.get("n_columns", n))
        holds = audit_mod.check_hb_dominance(alpha, beta, g, r, m, n, n_cols)
        bound = min(n * (m - 2), n * m / 2 + beta * r)
        return {
            "kind": kind,
            "holds": holds,
            "conditions": {
                "validity (r > m, or r = m with alpha > N)": r > m or r == m,
                "g nonincreasing": g.nonincreasing,
                "alpha + 1 <= min(n(m-2), nm/2 + beta r)": alpha + 1 <= bound,
            },
            "text": f"alpha+1={alpha + 1:g} vs min(n(m-2), nm/2+beta*r)={bound:g}",
        }
    if kind == "kl":
        alpha, beta = float(doc["alpha"]), float(doc["beta"])
        g = _g_from_doc(doc.get("g"))
        a0 = float(doc["a0"])
        a = np.asarray(doc["a"], dtype=float)
        r, n, n_cols = float(doc["r"]), int(doc["n"]), int(doc["n_columns"])
        holds = audit_mod.check_kl_dominance(alpha, beta, g, a0, a, r, n, n_cols)
        return {
            "kind": kind,
            "holds": holds,
            "conditions": {
                "posterior proper": r + a0 > 0
                or (r + a0 == 0 and alpha + g.small_t_exponent > n_cols),
                "g nonincreasing": g.nonincreasing,
                "a0 + a_dot + 1 >= 0": a0 + float(a.sum()) + 1 >= 0,
                "alpha + 1 <= n(-a0 - 2)": alpha + 1 <= n * (-a0 - 2),
            },
            "text": f"alpha+1={alpha + 1:g} vs n(-a0-2)={n * (-a0 - 2):g}",
        }
    raise ValueError(f"unknown audit kind {kind!r}; use prior|eb|hb|kl")


def _cmd_audit(args) -> int:
    config = {
        "subcommand": "audit",
        "table1": args.table1,
        "input": args.infile or "<stdin>",
        "enforce": args.enforce,
    }
    if args.table1:
        if args.dry_run:
            return _print_dry_run(config)
        rows = audit_mod.dominance_table()
        text = json.dumps(rows, indent=2)
        _write_text(args.out, text + "\n")
        if args.enforce and not all(
            row["EB0"] and row["EB"] and row["HB"] for row in rows
        ):
            return EXIT_CONDITION
        return EXIT_OK

    doc = _read_json(args.infile)
    if args.dry_run:
        config["scenario"] = doc
        return _print_dry_run(config)
    verdict = _audit_scenario(doc)
    _write_text(args.out, json.dumps(verdict, indent=2) + "\n")
    failed = verdict.get("holds") is False or verdict.get("prior_proper") is False
    if args.enforce and failed:
        return EXIT_CONDITION
    return EXIT_OK


# ---------------------------------------------------------------------------
# gibbs-diag
# ---------------------------------------------------------------------------


def _cmd_gibbs_diag(args) -> int:
    config = {
        "subcommand": "gibbs-diag",
        "counts": args.counts,
        "prior": args.prior,
        "r": args.r,
        "iters": args.iters,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "seed": args.seed,
    }
    counts = read_counts_csv(args.counts, header=args.header)
    doc = _read_json(args.prior)
    prior = PriorSpec(
        float(doc["alpha"]),
        float(doc["beta"]),
        _g_from_doc(doc.get("g")),
        float(doc["a0"]),
        np.asarray(doc["a"], dtype=float),
    )
    if args.dry_run:
        config["shape"] = [counts.m, counts.n_columns]
        return _print_dry_run(config)

    cfg = ChainConfig(
        n_iter=args.iters, burn_in=args.burn_in, seed=args.seed, thin=args.thin
    )
    chain = run_posterior(counts, args.r, prior, cfg)
    report = {
        "posterior_mean_p": chain.posterior_mean_p().tolist(),
        "posterior_mean_t": float(chain.t.mean()),
        "ess_t": chain.ess_t(),
        "delta_ss": mcmc_delta_estimates(chain, "ss"),
        "delta_kl": [
            mcmc_delta_estimates(chain, "kl", nu) for nu in range(counts.n_columns)
        ],
    }
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# kernel-eval
# ---------------------------------------------------------------------------


def _cmd_kernel_eval(args) -> int:
    doc = _read_json(args.infile)
    config = {"subcommand": "kernel-eval", "input": args.infile or "<stdin>"}
    if args.dry_run:
        config["spec"] = doc
        return _print_dry_run(config)
    alpha = float(doc["alpha"])
    beta = float(doc["beta"])
    g = _g_from_doc(doc.get("g"))
    xi0 = float(doc["xi0"])
    xi = np.asarray(doc["xi"], dtype=float)
    log_den = log_kernel(alpha, beta, g, xi0, xi)
    log_num = log_kernel(alpha + 1.0, beta, g, xi0, xi)
    out = {
        "log_K": log_den,
        "log_K_alpha_plus_1": log_num,
        "delta": float(np.exp(log_num - log_den)),
    }
    _write_text(args.out, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# repro
# ---------------------------------------------------------------------------


def _cmd_repro(args) -> int:
    outdir = args.out or os.environ.get("NMSHRINK_OUTDIR") or "."
    config = {
        "subcommand": "repro",
        "target": args.target,
        "reps": args.reps,
        "seed": args.seed,
        "jobs": args.jobs,
        "outdir": outdir,
    }
    if args.target != "tables":
        raise ValueError(f"unknown repro target {args.target!r}")
    if args.dry_run:
        return _print_dry_run(config)

    os.makedirs(outdir, exist_ok=True)
    started = time.time()

    table1 = audit_mod.dominance_table()
    with open(os.path.join(outdir, "table1.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["case", "EB0", "EB", "HB"])
        for row in table1:
            w.writerow(
                [row["case"]]
                + [("+" if row[k] else "-") for k in ("EB0", "EB", "HB")]
            )

    for idx, case in enumerate(("i", "ii", "iii"), start=2):
        rows = case_table(case, reps=args.reps, seed=args.seed, jobs=args.jobs)
        with open(os.path.join(outdir, f"table{idx}.csv"), "w") as f:
            f.write(_rows_to_csv(rows))

    manifest = {
        "target": "tables",
        "seed": args.seed,
        "reps": args.reps,
        "jobs": args.jobs,
        "runtime_seconds": round(time.time() - started, 3),
        "versions": {
            "nmshrink": _version_string(),
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "quadrature": quadrature_settings(),
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
    print(f"wrote table1..table4 and manifest to {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sp) -> None:
    sp.add_argument("--dry-run", action="store_true", help="validate and print config")
    sp.add_argument("--out", default=None, help="output path (default stdout)")


def _add_prior_flags(sp) -> None:
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--g", choices=["g1", "komaki"], default="g1")
    sp.add_argument("--g-c", type=float, default=0.0, help="komaki exponent c")
    sp.add_argument("--g-kappa", type=float, default=1.0, help="komaki kappa")
    sp.add_argument("--a0", type=float, default=None)
    sp.add_argument("--a", default=None, help="comma-separated positive reals")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmshrink",
        description="Shrinkage estimation for negative multinomial count matrices.",
        epilog='`nmshrink --config FILE` replays a saved {"argv": [...]} run.',
    )
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="estimate probabilities from a counts CSV")
    sp.add_argument(
        "--estimator",
        required=True,
        choices=["umvu", "eb0", "eb", "hb", "dir-pm", "hb-pm"],
    )
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--in", dest="infile", default=None, help="counts CSV (default stdin)")
    sp.add_argument("--header", action="store_true", help="counts CSV has a header row")
    _add_prior_flags(sp)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_estimate)

    sp = sub.add_parser("risk-sim", help="Monte Carlo risk comparison")
    sp.add_argument("--scenario", choices=["i", "ii", "iii"], default=None)
    sp.add_argument("--truth", default=None, help="ModelParams JSON file")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--loss", choices=["ss", "kl"], default="ss")
    sp.add_argument(
        "--estimators",
        default="umvu,eb0,eb",
        help="comma list; first is the improvement reference",
    )
    sp.add_argument("--n", type=int, default=None, help="columns entering the loss")
    sp.add_argument("--jobs", type=int, default=1)
    _add_prior_flags(sp)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_risk_sim)

    sp = sub.add_parser("audit", help="propriety and dominance condition checks")
    sp.add_argument("--in", dest="infile", default=None, help="scenario JSON (default stdin)")
    sp.add_argument("--table1", action="store_true", help="audit the benchmark cases")
    sp.add_argument(
        "--enforce", action="store_true", help="exit 4 when a condition fails"
    )
    _add_common(sp)
    sp.set_defaults(fn=_cmd_audit)

    sp = sub.add_parser("gibbs-diag", help="posterior Gibbs diagnostics")
    sp.add_argument("--counts", required=True, help="counts CSV")
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--prior", required=True, help="prior JSON {alpha,beta,g,a0,a}")
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--iters", type=int, default=100_000)
    sp.add_argument("--burn-in", type=int, default=50_000)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_gibbs_diag)

    sp = sub.add_parser("kernel-eval", help="evaluate log K and its ratio")
    sp.add_argument("--in", dest="infile", default=None, help="JSON (default stdin)")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_kernel_eval)

    sp = sub.add_parser("repro", help="rebuild the benchmark tables")
    sp.add_argument("target", choices=["tables"])
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--jobs", type=int, default=1)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_repro)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        # A persisted run configuration {"argv": [...]} replays bit-for-bit.
        if argv and argv[0] == "--config":
            if len(argv) != 2:
                raise ValueError("--config takes exactly one JSON file")
            argv = [str(a) for a in _read_json(argv[1])["argv"]]
        args = parser.parse_args(argv)
        return args.fn(args)
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConditionError as exc:
        print(f"condition violation: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
