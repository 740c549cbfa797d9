"""Fully conjugate Gibbs sampler for the hierarchical shrinkage prior.

The joint density over the probability columns p and a latent positive
scalar t is

    t^(alpha-1) e^(-beta t) prod_nu [ p0_nu^(t + a0 - 1) prod_i p_i,nu^(a_i,nu - 1) ],

whose two full conditionals are exactly a gamma draw for t and independent
Dirichlet draws for the columns:

    t | p  ~  Gamma(shape alpha, rate beta + sum_nu log(1/p0_nu))
    p | t  ~  prod_nu Dirichlet(t + a0, a_nu)

Conditioning on counts only shifts the parameters (a0 -> r + a0,
a_nu -> x_nu + a_nu), so the same step targets prior and posterior.  The
sampler is restricted to the constant mixing weight g = 1; other weights
break conjugacy and are covered by the deterministic kernel quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .kernel import ConditionError, PriorSpec, posterior_proper
from .model import CountMatrix, ProbColumn, make_rng

__all__ = [
    "ChainConfig",
    "GibbsState",
    "Chain",
    "gibbs_step",
    "prior_chain",
    "posterior_chain",
    "collect",
    "run_posterior",
    "ess",
    "mcmc_delta_estimates",
    "joint_prior_proper",
]


@dataclass(frozen=True)
class ChainConfig:
    """Length, warm-up, thinning and seed of one chain."""

    n_iter: int
    burn_in: int = 0
    seed: int = 0
    thin: int = 1

    def __post_init__(self) -> None:
        if not self.n_iter > self.burn_in >= 0:
            raise ValueError("need n_iter > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_kept(self) -> int:
        span = self.n_iter - self.burn_in
        return (span + self.thin - 1) // self.thin


@dataclass(frozen=True)
class GibbsState:
    """One (p, t) draw; p is an m x N matrix of valid probability columns."""

    p: np.ndarray
    t: float

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2:
            raise ValueError("p must be an m x N matrix")
        if np.any(p <= 0) or np.any(p.sum(axis=0) >= 1):
            raise ValueError("every column must lie in the open simplex interior")
        if not self.t > 0:
            raise ValueError("t must be positive")
        p = np.array(p, copy=True)
        p.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    def columns(self) -> tuple[ProbColumn, ...]:
        return tuple(ProbColumn(self.p[:, j]) for j in range(self.p.shape[1]))


@dataclass
class Chain:
    """Kept draws in array form, plus the bookkeeping delta estimates need."""

    t: np.ndarray
    p: np.ndarray  # (n_kept, m, N)
    r: float | None = None
    a0: float | None = None
    a_dot: float | None = None
    col_sums: np.ndarray | None = None

    def ess_t(self) -> float:
        return ess(self.t)

    def posterior_mean_p(self) -> np.ndarray:
        return self.p.mean(axis=0)


def joint_prior_proper(
    alpha: float, beta: float, a0: float, a_cols: np.ndarray
) -> bool:
    """Propriety of the joint (p, t) prior with per-column Dirichlet weights.

    Requires a0 >= 0 and min(max(a0, alpha - N), max(a_total - alpha, beta)) > 0,
    where a_total sums the Dirichlet weights over all columns.
    """
    a_cols = np.asarray(a_cols, dtype=float)
    n_cols = a_cols.shape[1]
    a_total = float(a_cols.sum())
    if a0 < 0:
        return False
    return min(max(a0, alpha - n_cols), max(a_total - alpha, beta)) > 0


def _draw_columns(
    rng: np.random.Generator, shape0: float, a_cols: np.ndarray
) -> np.ndarray:
    """Columnwise Dirichlet(shape0, a_cols[:, nu]) draws, returning the m x N
    matrix of non-leftover coordinates."""
    _, n_cols = a_cols.shape
    y0 = rng.gamma(shape0, size=n_cols)
    y = rng.gamma(a_cols)
    # Shape parameters near zero can underflow a coordinate to exact zero.
    bad = (y0 <= 0) | (y <= 0).any(axis=0)
    tries = 0
    while bad.any():
        tries += 1
        if tries > 100:
            raise RuntimeError("gibbs column draws kept degenerating")
        y0[bad] = rng.gamma(shape0, size=int(bad.sum()))
        y[:, bad] = rng.gamma(a_cols[:, bad])
        bad = (y0 <= 0) | (y <= 0).any(axis=0)
    return y / (y0 + y.sum(axis=0))[None, :]


def gibbs_step(
    state: GibbsState,
    alpha: float,
    beta: float,
    a0_eff: float,
    a_cols: np.ndarray,
    rng: np.random.Generator,
) -> GibbsState:
    """One systematic-scan update of (t, p).

    `a0_eff` is the effective leftover-mass exponent: the raw a0 for prior
    simulation, r + a0 for posterior simulation.  It must be nonnegative so
    every Dirichlet parameter t + a0_eff stays positive.
    """
    if a0_eff < 0:
        raise ConditionError("a0_eff must be nonnegative")
    a_cols = np.asarray(a_cols, dtype=float)
    if a_cols.shape != state.p.shape:
        raise ValueError("a_cols must match the shape of state.p")
    p0 = 1.0 - state.p.sum(axis=0)
    rate = beta + float(np.log(1.0 / p0).sum())
    t_new = float(rng.gamma(alpha, 1.0 / rate))
    while t_new <= 0.0:
        t_new = float(rng.gamma(alpha, 1.0 / rate))
    p_new = _draw_columns(rng, t_new + a0_eff, a_cols)
    return GibbsState(p_new, t_new)


def _run_chain(
    alpha: float,
    beta: float,
    a0_eff: float,
    a_cols: np.ndarray,
    cfg: ChainConfig,
) -> Iterator[GibbsState]:
    rng = make_rng(cfg.seed)
    m, n_cols = a_cols.shape
    t0 = alpha / (beta + 1.0)
    p0 = _draw_columns(rng, 1.0, np.ones((m, n_cols)))
    state = GibbsState(p0, t0)
    for i in range(cfg.n_iter):
        state = gibbs_step(state, alpha, beta, a0_eff, a_cols, rng)
        if i >= cfg.burn_in and (i - cfg.burn_in) % cfg.thin == 0:
            yield state


def prior_chain(
    alpha: float,
    beta: float,
    a0: float,
    a_cols: np.ndarray,
    cfg: ChainConfig,
) -> Iterator[GibbsState]:
    """Gibbs chain targeting the joint prior; refuses improper configurations."""
    a_cols = np.asarray(a_cols, dtype=float)
    if a_cols.ndim != 2 or np.any(a_cols <= 0):
        raise ValueError("a_cols must be a positive m x N matrix")
    if not joint_prior_proper(alpha, beta, a0, a_cols):
        raise ConditionError(
            "joint prior is improper: need a0 >= 0 and "
            "min(max(a0, alpha - N), max(a_total - alpha, beta)) > 0"
        )
    return _run_chain(alpha, beta, a0, a_cols, cfg)


def posterior_chain(
    x: CountMatrix, r: float, prior: PriorSpec, cfg: ChainConfig
) -> Iterator[GibbsState]:
    """Gibbs chain targeting the posterior given the count matrix.

    The conditionals use a0_eff = r + a0 and per-column weights x_nu + a.
    """
    if prior.m != x.m:
        raise ValueError("prior dimension does not match the count matrix")
    if prior.g.kind != "constant_one":
        raise ConditionError(
            "the sampler requires the constant mixing weight; other weights "
            "break conjugacy (use the kernel quadrature instead)"
        )
    if not posterior_proper(prior, x.n_columns, r):
        raise ConditionError("posterior is improper for this prior and r")
    a_cols = x.x.astype(float) + prior.a[:, None]
    return _run_chain(prior.alpha, prior.beta, r + prior.a0, a_cols, cfg)


def collect(states: Iterator[GibbsState], **meta) -> Chain:
    """Materialize a chain of states into arrays."""
    ts = []
    ps = []
    for s in states:
        ts.append(s.t)
        ps.append(s.p)
    if not ts:
        raise ValueError("empty chain")
    return Chain(np.array(ts), np.array(ps), **meta)


def run_posterior(
    x: CountMatrix, r: float, prior: PriorSpec, cfg: ChainConfig
) -> Chain:
    """Posterior chain with the metadata needed by mcmc_delta_estimates."""
    return collect(
        posterior_chain(x, r, prior, cfg),
        r=float(r),
        a0=prior.a0,
        a_dot=prior.a_dot,
        col_sums=np.array(x.col_sums),
    )


def ess(x: np.ndarray) -> float:
    """Effective sample size via the initial positive-sequence estimator.

    Pairwise autocorrelation sums are truncated at the first negative pair
    and forced nonincreasing before summation.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    v = x.var()
    if v == 0:
        return float(n)
    centered = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    rho = acov / acov[0]
    n_pairs = n // 2
    pair = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    pos = np.nonzero(pair <= 0)[0]
    if pos.size:
        pair = pair[: pos[0]]
    if pair.size == 0:
        return float(n)
    pair = np.minimum.accumulate(pair)
    tau = 2.0 * pair.sum() - 1.0
    tau = max(tau, 1.0 / n)
    return float(n / tau)


def mcmc_delta_estimates(
    chain: Chain, mode: str = "ss", nu: int | None = None
) -> float:
    """Monte Carlo estimate of a shrinkage amount from posterior draws of t.

    mode "ss": the posterior mean of t (valid for the constant mixing
    weight, where the column-sum shrinkage ratio equals E[t | X]).

    mode "kl": the ratio E[t w]/E[w] with w = 1/(t + r + a0 + z_nu + a_dot),
    matching the per-column kernel ratio for column `nu`.
    """
    t = np.asarray(chain.t, dtype=float)
    if t.size == 0:
        raise ValueError("empty chain")
    if mode == "ss":
        return float(t.mean())
    if mode == "kl":
        if nu is None:
            raise ValueError("mode 'kl' needs a column index nu")
        if chain.r is None or chain.a0 is None or chain.a_dot is None:
            raise ValueError("chain lacks posterior metadata (use run_posterior)")
        if chain.col_sums is None or not 0 <= nu < chain.col_sums.size:
            raise ValueError("nu out of range for this chain")
        w = 1.0 / (t + chain.r + chain.a0 + float(chain.col_sums[nu]) + chain.a_dot)
        return float((t * w).mean() / w.mean())
    raise ValueError(f"unknown mode: {mode!r}")
