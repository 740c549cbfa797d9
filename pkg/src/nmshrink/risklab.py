"""Loss functions, Monte Carlo risk estimation, and the benchmark scenarios.

Risk comparisons use common random numbers: every estimator sees the same
replication stream of count matrices, keyed by (seed, replication index)
through a counter-based generator, so results are bit-identical regardless
of execution order or parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Mapping

import numpy as np
from scipy.special import gammaln
from scipy.stats import nbinom

from . import estimators as est
from .kernel import GChoice
from .model import CountMatrix, ModelParams, ProbColumn, make_rng, nm_sample

__all__ = [
    "Scenario",
    "RiskReport",
    "HudsonReport",
    "loss_ss",
    "loss_kl",
    "prial",
    "sample_counts",
    "risk_mc",
    "compare",
    "hudson_check",
    "scenario_presets",
    "benchmark_scenarios",
    "case_table",
    "make_estimator",
]

Estimator = Callable[[CountMatrix, float], np.ndarray]


@dataclass(frozen=True)
class Scenario:
    """A named truth matrix with its sampling size and HB hyperparameter."""

    name: str
    params: ModelParams
    alpha_hb: float


@dataclass(frozen=True)
class RiskReport:
    estimator_name: str
    risk: float
    mc_stderr: float
    prial_vs_reference: float | None = None


@dataclass(frozen=True)
class HudsonReport:
    lhs: float
    rhs: float
    passed: bool


def loss_ss(d: np.ndarray, p: ModelParams, n: int) -> float:
    """Standardized squared error over the first n columns:
    sum (d - p)^2 / p."""
    d = np.asarray(d, dtype=float)
    mat = p.matrix
    if d.shape != mat.shape:
        raise ValueError("estimate and truth shapes differ")
    if not 1 <= n <= p.n_columns:
        raise ValueError("n out of range")
    block = (d[:, :n] - mat[:, :n]) ** 2 / mat[:, :n]
    return float(block.sum())


def loss_kl(d: np.ndarray, p: ModelParams, n: int) -> float:
    """Kullback-Leibler-type loss over the first n columns:
    sum (d - p - p log(d/p)).  Requires strictly positive estimates there."""
    d = np.asarray(d, dtype=float)
    mat = p.matrix
    if d.shape != mat.shape:
        raise ValueError("estimate and truth shapes differ")
    if not 1 <= n <= p.n_columns:
        raise ValueError("n out of range")
    block_d = d[:, :n]
    block_p = mat[:, :n]
    if np.any(block_d <= 0):
        raise ValueError("KL-type loss needs strictly positive estimates")
    block = block_d - block_p - block_p * np.log(block_d / block_p)
    return float(block.sum())


_LOSSES = {"ss": loss_ss, "kl": loss_kl}


def prial(risk_ref: float, risk: float) -> float:
    """Percentage relative improvement in average loss over a reference."""
    if not risk_ref > 0:
        raise ValueError("reference risk must be positive")
    return 100.0 * (risk_ref - risk) / risk_ref


def sample_counts(truth: ModelParams, rng: np.random.Generator) -> CountMatrix:
    """One count matrix with independent negative multinomial columns."""
    cols = [nm_sample(truth.r, c, rng) for c in truth.columns]
    return CountMatrix(np.column_stack(cols))


def _replication_losses(
    named: list[tuple[str, Estimator]],
    truth: ModelParams,
    loss: str,
    n: int,
    seed: int,
    rep_indices: range,
) -> np.ndarray:
    loss_fn = _LOSSES[loss]
    out = np.empty((len(rep_indices), len(named)))
    for row, rep in enumerate(rep_indices):
        x = sample_counts(truth, make_rng(seed, rep))
        for col, (name, fn) in enumerate(named):
            try:
                out[row, col] = loss_fn(fn(x, truth.r), truth, n)
            except Exception as exc:
                raise RuntimeError(
                    f"estimator {name!r} failed on replication {rep}: {exc}"
                ) from exc
    return out


def compare(
    estimator_fns: Mapping[str, Estimator],
    truth: ModelParams,
    loss: str = "ss",
    n: int | None = None,
    reps: int = 1000,
    seed: int = 0,
    reference: str | None = None,
    jobs: int = 1,
) -> dict[str, RiskReport]:
    """Monte Carlo risks of several estimators on a shared replication stream.

    Each replication's count matrix is keyed by (seed, index), so all
    estimators see identical data and reruns are bit-identical.  With
    `jobs` > 1 replications are split across processes; the result does not
    depend on jobs (estimator callables must then be picklable).
    """
    if reps < 2:
        raise ValueError("need at least 2 replications for a standard error")
    if loss not in _LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    if n is None:
        n = truth.n_columns
    named = list(estimator_fns.items())
    if jobs <= 1:
        losses = _replication_losses(named, truth, loss, n, seed, range(reps))
    else:
        chunks = [range(k, reps, jobs) for k in range(jobs)]
        losses = np.empty((reps, len(named)))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [
                pool.submit(_replication_losses, named, truth, loss, n, seed, ch)
                for ch in chunks
            ]
            for ch, fut in zip(chunks, futs):
                losses[list(ch), :] = fut.result()

    risks = losses.mean(axis=0)
    stderrs = losses.std(axis=0, ddof=1) / math.sqrt(reps)
    ref_risk = None
    if reference is not None:
        if reference not in estimator_fns:
            raise ValueError(f"reference {reference!r} not among the estimators")
        ref_risk = risks[[name for name, _ in named].index(reference)]
    reports = {}
    for k, (name, _) in enumerate(named):
        reports[name] = RiskReport(
            name,
            float(risks[k]),
            float(stderrs[k]),
            None if ref_risk is None else prial(float(ref_risk), float(risks[k])),
        )
    return reports


def risk_mc(
    estimator: Estimator,
    truth: ModelParams,
    loss: str = "ss",
    n: int | None = None,
    reps: int = 1000,
    seed: int = 0,
    name: str = "estimator",
    risk_ref: float | None = None,
) -> RiskReport:
    """Monte Carlo risk of one estimator; shares the stream of `compare`."""
    report = compare({name: estimator}, truth, loss, n, reps, seed)[name]
    if risk_ref is None:
        return report
    return RiskReport(name, report.risk, report.mc_stderr, prial(risk_ref, report.risk))


def make_estimator(
    kind: str,
    alpha: float | None = None,
    beta: float = 1.0,
    g: GChoice | None = None,
    a0: float | None = None,
    a: np.ndarray | None = None,
) -> Estimator:
    """Estimator callable (counts, r) -> matrix from a name and hyperparameters.

    Kinds: umvu | eb0 | eb | hb | dir-pm | hb-pm.
    """
    from .kernel import PriorSpec

    if kind == "umvu":
        return est.umvu
    if kind == "eb0":
        return est.eb0
    if kind == "eb":
        return est.eb
    if kind == "hb":
        if alpha is None:
            raise ValueError("hb needs alpha")
        return partial(est.hb, alpha=alpha, beta=beta, g=g or GChoice.constant_one())
    if kind == "dir-pm":
        if a0 is None or a is None:
            raise ValueError("dir-pm needs a0 and a")
        return partial(est.dirichlet_posterior_mean, a0=a0, a=np.asarray(a, dtype=float))
    if kind == "hb-pm":
        if alpha is None or a0 is None or a is None:
            raise ValueError("hb-pm needs alpha, a0 and a")
        prior = PriorSpec(alpha, beta, g or GChoice.constant_one(), a0, np.asarray(a, float))
        return partial(est.hb_posterior_mean, prior=prior)
    raise ValueError(f"unknown estimator kind {kind!r}")


# ---------------------------------------------------------------------------
# Benchmark scenarios
# ---------------------------------------------------------------------------


def _cols(*columns) -> np.ndarray:
    return np.column_stack([np.asarray(c, dtype=float) for c in columns])


def scenario_presets() -> list[Scenario]:
    """The nine benchmark truths, grouped in three cases.

    Case i:   (r, m, N) = (8, 7, 3), alpha = 14.
    Case ii:  (r, m, N) = (4, 3, 7), alpha = 6.
    Case iii: (r, m, N) = (2, 1, 7), alpha = 6 (negative binomial columns).
    """
    ones7 = np.ones(7)
    A = ones7 / 8.0
    B = np.array([1, 1, 1, 1, 2, 2, 2]) / 12.0
    C = np.array([2, 2, 2, 2, 1, 1, 1]) / 12.0
    D = np.ones(3) / 4.0
    E = np.array([1, 1, 2]) / 6.0
    F = np.array([2, 2, 1]) / 6.0
    half = np.array([0.5])
    third = np.array([1.0 / 3.0])
    two_thirds = np.array([2.0 / 3.0])

    presets = [
        ("i-1", 8.0, 14.0, _cols(A, A, A)),
        ("i-2", 8.0, 14.0, _cols(B, A, B)),
        ("i-3", 8.0, 14.0, _cols(B, A, C)),
        ("ii-1", 4.0, 6.0, _cols(*[D] * 7)),
        ("ii-2", 4.0, 6.0, _cols(E, E, D, D, D, E, E)),
        ("ii-3", 4.0, 6.0, _cols(E, E, D, D, D, F, F)),
        ("iii-1", 2.0, 6.0, _cols(*[half] * 7)),
        ("iii-2", 2.0, 6.0, _cols(third, third, half, half, half, third, third)),
        (
            "iii-3",
            2.0,
            6.0,
            _cols(third, third, half, half, half, two_thirds, two_thirds),
        ),
    ]
    return [
        Scenario(name, ModelParams.from_matrix(r, mat), alpha)
        for name, r, alpha, mat in presets
    ]


def benchmark_scenarios(case: str) -> list[Scenario]:
    """The three truths of one case ("i", "ii" or "iii")."""
    out = [s for s in scenario_presets() if s.name.split("-")[0] == case]
    if not out:
        raise ValueError(f"unknown case {case!r}")
    return out


def case_table(
    case: str, reps: int = 1000, seed: int = 0, jobs: int = 1
) -> list[dict]:
    """Risk-and-improvement table for one case: U, EB0, EB and HB estimators.

    One row per truth, with the unbiased estimator as reference for the
    improvement percentages.
    """
    rows = []
    for sc in benchmark_scenarios(case):
        fns = {
            "U": make_estimator("umvu"),
            "EB0": make_estimator("eb0"),
            "EB": make_estimator("eb"),
            "HB": make_estimator("hb", alpha=sc.alpha_hb, beta=1.0),
        }
        reports = compare(
            fns, sc.params, loss="ss", reps=reps, seed=seed, reference="U", jobs=jobs
        )
        row = {"truth": sc.name}
        for name in ("U", "EB0", "EB", "HB"):
            rep = reports[name]
            row[name] = rep.risk
            row[f"{name}_se"] = rep.mc_stderr
            if name != "U":
                row[f"{name}_prial"] = rep.prial_vs_reference
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Summation-by-parts identity checker
# ---------------------------------------------------------------------------


def _column_support(m: int, cap: int) -> np.ndarray:
    """All count vectors of length m with sum <= cap."""
    if m == 1:
        return np.arange(cap + 1, dtype=np.int64)[:, None]
    if m == 2:
        rows = [
            (x1, x2)
            for x1 in range(cap + 1)
            for x2 in range(cap + 1 - x1)
        ]
        return np.array(rows, dtype=np.int64)
    raise ValueError("enumeration supports m <= 2 only")


def _column_log_pmf(support: np.ndarray, r: float, col: ProbColumn) -> np.ndarray:
    totals = support.sum(axis=1)
    return (
        gammaln(r + totals)
        - gammaln(r)
        - gammaln(support + 1.0).sum(axis=1)
        + r * np.log(col.p0)
        + support @ np.log(col.p)
    )


def _h_values(h_kind: str, xi: np.ndarray, colsum: np.ndarray, r: float):
    """h(X) and h(X + e_{i,nu}) as functions of (X_{i,nu}, colsum_nu)."""
    if h_kind == "indicator":
        return (xi >= 1).astype(float), np.ones_like(xi, dtype=float)
    if h_kind == "linear-in-one-count":
        with np.errstate(invalid="ignore", divide="ignore"):
            h = np.where(xi >= 1, xi / (r + colsum - 1.0), 0.0)
        h_shift = (xi + 1.0) / (r + colsum)
        return h, h_shift
    if h_kind == "zero":
        return np.zeros_like(xi, dtype=float), np.zeros_like(xi, dtype=float)
    raise ValueError(f"unknown h_kind {h_kind!r}")


def _enumeration_caps(truth: ModelParams, i: int, nu: int, tol: float) -> list[int]:
    """Per-column support caps with total truncation error below tol/10."""
    r = truth.r
    cap = 16
    p_inu = float(truth.columns[nu].p[i])
    h_bound = max(1.0, 1.0 / r)
    while cap <= 2**22:
        bound = 0.0
        for k, col in enumerate(truth.columns):
            p0 = col.p0
            sf = float(nbinom.sf(cap, r, p0))
            mean = r * (1.0 - p0) / p0
            tail_mean = mean * float(nbinom.sf(cap - 1, r + 1.0, p0))
            # lhs tail: |h| <= h_bound and the 1/p factor
            bound += h_bound / p_inu * sf
            # rhs tail: (r + colsum_nu) grows linearly in the exceeded column
            if k == nu:
                bound += h_bound * (r * sf + tail_mean)
            else:
                bound += h_bound * (r + mean) * sf
        if bound < tol / 10.0:
            return [cap] * truth.n_columns
        cap *= 2
    raise RuntimeError("truncation bound unattainable at this tolerance")


def hudson_check(
    h_kind: str,
    r: float,
    p: ModelParams,
    i: int,
    nu: int,
    tol: float = 1e-8,
    mc_draws: int = 200_000,
    seed: int = 0,
) -> HudsonReport:
    """Check the summation-by-parts identity
    E[h(X)/p_{i,nu}] = E[(r + colsum_nu)/(X_{i,nu} + 1) h(X + e_{i,nu})].

    For m <= 2 and N <= 2 both sides are computed by truncated exact
    enumeration whose tail is analytically bounded below tol/10; otherwise a
    common-seed Monte Carlo estimate is used and `tol` should allow for the
    sampling noise.  `h_kind` selects a function vanishing at X_{i,nu} = 0:
    an indicator of X_{i,nu} >= 1, the unbiased-estimator entry, or zero.
    """
    truth = ModelParams(r, p.columns)
    m, n_cols = truth.m, truth.n_columns
    if not (0 <= i < m and 0 <= nu < n_cols):
        raise ValueError("index out of range")
    p_inu = float(truth.columns[nu].p[i])

    if m <= 2 and n_cols <= 2:
        caps = _enumeration_caps(truth, i, nu, tol)
        supports = [_column_support(m, caps[k]) for k in range(n_cols)]
        log_pmfs = [
            _column_log_pmf(supports[k], r, truth.columns[k]) for k in range(n_cols)
        ]
        if n_cols == 1:
            joint = np.exp(log_pmfs[0])
            xi = supports[0][:, i].astype(float)
            colsum = supports[0].sum(axis=1).astype(float)
        else:
            joint = np.exp(log_pmfs[0][:, None] + log_pmfs[1][None, :])
            xi_col = supports[nu][:, i].astype(float)
            cs_col = supports[nu].sum(axis=1).astype(float)
            if nu == 0:
                xi, colsum = xi_col[:, None], cs_col[:, None]
            else:
                xi, colsum = xi_col[None, :], cs_col[None, :]
        h, h_shift = _h_values(h_kind, xi, colsum, r)
        lhs = float((joint * h / p_inu).sum())
        rhs = float((joint * (r + colsum) / (xi + 1.0) * h_shift).sum())
    else:
        rng = make_rng(seed)
        draws = [
            nm_sample(r, truth.columns[k], rng, size=mc_draws) for k in range(n_cols)
        ]
        xi = draws[nu][:, i].astype(float)
        colsum = draws[nu].sum(axis=1).astype(float)
        h, h_shift = _h_values(h_kind, xi, colsum, r)
        lhs = float((h / p_inu).mean())
        rhs = float(((r + colsum) / (xi + 1.0) * h_shift).mean())

    return HudsonReport(lhs, rhs, abs(lhs - rhs) <= tol)
