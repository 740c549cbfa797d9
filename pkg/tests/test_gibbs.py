"""Gibbs sampler: conditionals, stationarity, propriety guards, diagnostics."""

import math

import numpy as np
import pytest
from scipy.stats import gamma as gamma_dist

from nmshrink.gibbs import (
    Chain,
    ChainConfig,
    GibbsState,
    collect,
    ess,
    gibbs_step,
    joint_prior_proper,
    mcmc_delta_estimates,
    posterior_chain,
    prior_chain,
    run_posterior,
)
from nmshrink.kernel import ConditionError, GChoice, PriorSpec, delta_hb
from nmshrink.model import (
    CountMatrix,
    ProbColumn,
    gen_dirichlet_log_pdf,
    make_rng,
    nm_sample,
)

G1 = GChoice.constant_one()


def joint_log_density(p, t, alpha, beta, a0, a_cols):
    p0 = 1.0 - p.sum(axis=0)
    return (
        (alpha - 1) * math.log(t)
        - beta * t
        + float(((t + a0 - 1.0) * np.log(p0)).sum())
        + float(((a_cols - 1.0) * np.log(p)).sum())
    )


class TestConfigAndState:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChainConfig(n_iter=10, burn_in=10)
        with pytest.raises(ValueError):
            ChainConfig(n_iter=10, burn_in=2, thin=0)
        assert ChainConfig(n_iter=10, burn_in=2, thin=4).n_kept == 2

    def test_state_validation(self):
        with pytest.raises(ValueError):
            GibbsState(np.array([[0.5], [0.5]]), 1.0)
        with pytest.raises(ValueError):
            GibbsState(np.array([[0.4], [0.4]]), 0.0)
        GibbsState(np.array([[0.4], [0.4]]), 1.0)


class TestConditionals:
    def test_t_conditional_is_gamma(self):
        # log joint(p, t) - log Gamma(t | alpha, rate) must not depend on t
        rng = make_rng(4)
        alpha, beta, a0 = 3.0, 1.5, 2.0
        a_cols = np.array([[1.0, 2.0], [0.5, 1.5]])
        p = np.array([[0.2, 0.1], [0.3, 0.4]])
        rate = beta + float(np.log(1.0 / (1.0 - p.sum(axis=0))).sum())
        diffs = []
        for t in rng.uniform(0.1, 5.0, size=6):
            diffs.append(
                joint_log_density(p, t, alpha, beta, a0, a_cols)
                - gamma_dist.logpdf(t, alpha, scale=1.0 / rate)
            )
        assert np.ptp(diffs) < 1e-10

    def test_p_conditional_is_dirichlet_product(self):
        rng = make_rng(5)
        alpha, beta, a0, t = 3.0, 1.5, 2.0, 0.8
        a_cols = np.array([[1.0, 2.0], [0.5, 1.5]])
        diffs = []
        for _ in range(6):
            raw = rng.dirichlet(np.ones(3), size=2).T  # (3, 2); take 2 rows
            p = raw[:2, :] * 0.9
            log_dir = sum(
                gen_dirichlet_log_pdf(ProbColumn(p[:, j]), t + a0, a_cols[:, j])
                for j in range(2)
            )
            diffs.append(joint_log_density(p, t, alpha, beta, a0, a_cols) - log_dir)
        assert np.ptp(diffs) < 1e-10


class TestStepMechanics:
    def test_seeded_determinism(self):
        x = CountMatrix(np.array([[3, 1], [2, 4]]))
        prior = PriorSpec(3.0, 1.0, G1, 0.5, np.ones(2))
        cfg = ChainConfig(n_iter=50, burn_in=10, seed=12)
        a = collect(posterior_chain(x, 2.5, prior, cfg))
        b = collect(posterior_chain(x, 2.5, prior, cfg))
        np.testing.assert_array_equal(a.t, b.t)
        np.testing.assert_array_equal(a.p, b.p)

    def test_chain_length_bookkeeping(self):
        x = CountMatrix(np.array([[3, 1], [2, 4]]))
        prior = PriorSpec(3.0, 1.0, G1, 0.5, np.ones(2))
        cfg = ChainConfig(n_iter=100, burn_in=40, thin=3, seed=1)
        chain = collect(posterior_chain(x, 2.5, prior, cfg))
        assert chain.t.size == cfg.n_kept == 20
        assert chain.p.shape == (20, 2, 2)

    def test_negative_a0_eff_rejected(self):
        state = GibbsState(np.array([[0.4], [0.4]]), 1.0)
        with pytest.raises(ConditionError):
            gibbs_step(state, 2.0, 1.0, -0.5, np.ones((2, 1)), make_rng(0))

    def test_prior_chain_refuses_improper(self):
        # alpha <= N with a0 = 0 fails the joint propriety triple
        assert not joint_prior_proper(2.0, 1.0, 0.0, np.ones((2, 3)))
        with pytest.raises(ConditionError):
            prior_chain(2.0, 1.0, 0.0, np.ones((2, 3)), ChainConfig(n_iter=10))
        # beta = 0 with alpha >= total weight fails the tail part
        assert not joint_prior_proper(7.0, 0.0, 1.0, np.ones((2, 3)))
        with pytest.raises(ConditionError):
            prior_chain(7.0, 0.0, 1.0, np.ones((2, 3)), ChainConfig(n_iter=10))

    def test_posterior_chain_refuses_improper(self):
        x = CountMatrix(np.array([[3, 1], [2, 4]]))
        prior = PriorSpec(3.0, 1.0, G1, -4.0, np.ones(2))
        with pytest.raises(ConditionError):
            posterior_chain(x, 2.5, prior, ChainConfig(n_iter=10))

    def test_posterior_chain_requires_constant_weight(self):
        x = CountMatrix(np.array([[3, 1], [2, 4]]))
        prior = PriorSpec(3.0, 1.0, GChoice.komaki(1.0, 1.0), 0.5, np.ones(2))
        with pytest.raises(ConditionError, match="conjugacy"):
            posterior_chain(x, 2.5, prior, ChainConfig(n_iter=10))


class TestStationarity:
    def test_posterior_mean_t_matches_quadrature(self):
        # Long-run mean of t against the deterministic kernel ratio, within
        # 3 Monte Carlo standard errors (ESS-based).
        x = CountMatrix(np.array([[2, 1, 3], [1, 0, 2], [4, 2, 1]]))
        r, alpha, beta = 4.0, 6.0, 1.0
        prior = PriorSpec(alpha, beta, G1, -3.0, np.ones(3))
        chain = run_posterior(
            x, r, prior, ChainConfig(n_iter=40_000, burn_in=5_000, seed=9)
        )
        target = delta_hb(alpha, beta, G1, r, 3, x.col_sums)
        se = chain.t.std() / math.sqrt(chain.ess_t())
        assert abs(chain.t.mean() - target) < 3 * se

    def test_prior_marginal_matches_direct_mixture_sampling(self):
        # Draw t from its prior marginal by grid inversion, then columns from
        # the conditional Dirichlet; first/second moments of p must match the
        # Gibbs chain within 4 combined standard errors.
        alpha, beta, a0 = 5.0, 2.0, 1.0
        m, n_cols = 2, 2
        a_cols = np.array([[1.0, 2.0], [0.5, 1.5]])

        grid = np.linspace(1e-6, 60.0, 400_001)
        from scipy.special import gammaln

        log_w = (
            (alpha - 1) * np.log(grid)
            - beta * grid
            + (n_cols * gammaln(grid + a0)
               - gammaln(grid[:, None] + a0 + a_cols.sum(axis=0)[None, :]).sum(axis=1))
        )
        w = np.exp(log_w - log_w.max())
        cdf = np.cumsum(w)
        cdf /= cdf[-1]

        rng = make_rng(77)
        n_draws = 40_000
        ts = np.interp(rng.uniform(size=n_draws), cdf, grid)
        direct = np.empty((n_draws, m, n_cols))
        for k in range(n_draws):
            for j in range(n_cols):
                y = rng.gamma(np.concatenate(([ts[k] + a0], a_cols[:, j])))
                direct[k, :, j] = y[1:] / y.sum()

        chain = collect(
            prior_chain(
                alpha, beta, a0, a_cols,
                ChainConfig(n_iter=50_000, burn_in=10_000, seed=6),
            )
        )
        for moment in (lambda v: v, lambda v: v**2):
            md, mg = moment(direct), moment(chain.p)
            se = np.sqrt(
                md.std(axis=0) ** 2 / n_draws + mg.std(axis=0) ** 2 / (chain.t.size / 8)
            )
            assert np.all(np.abs(md.mean(axis=0) - mg.mean(axis=0)) < 4 * se)

    def test_huge_beta_degenerates_to_dirichlet_posterior(self):
        # With beta enormous, t is pinned near zero and the posterior mean of
        # p collapses to the plain Dirichlet posterior mean.
        from nmshrink.estimators import dirichlet_posterior_mean

        x = CountMatrix(np.array([[3, 1], [2, 4]]))
        r, a0 = 3.0, 0.0
        a = np.ones(2)
        prior = PriorSpec(1.0, 1e7, G1, a0, a)
        chain = run_posterior(
            x, r, prior, ChainConfig(n_iter=30_000, burn_in=5_000, seed=2)
        )
        plain = dirichlet_posterior_mean(x, r, a0, a)
        assert np.max(np.abs(chain.posterior_mean_p() - plain)) < 0.01


class TestDeltaEstimates:
    def test_constant_chain_passthrough(self):
        chain = Chain(
            t=np.full(100, 1.7),
            p=np.full((100, 1, 2), 0.3),
            r=2.0,
            a0=0.0,
            a_dot=1.0,
            col_sums=np.array([3, 4]),
        )
        assert mcmc_delta_estimates(chain, "ss") == pytest.approx(1.7)
        # With constant t, the weighted ratio collapses to t as well
        assert mcmc_delta_estimates(chain, "kl", 0) == pytest.approx(1.7)

    def test_mode_validation(self):
        chain = Chain(t=np.array([1.0, 2.0]), p=np.zeros((2, 1, 1)) + 0.2)
        with pytest.raises(ValueError):
            mcmc_delta_estimates(chain, "kl")  # nu missing
        with pytest.raises(ValueError):
            mcmc_delta_estimates(chain, "bogus")
        with pytest.raises(ValueError):
            mcmc_delta_estimates(Chain(t=np.array([]), p=np.empty((0, 1, 1))), "ss")


class TestEss:
    def test_iid_series(self):
        x = make_rng(3).normal(size=20_000)
        assert ess(x) > 10_000

    def test_correlated_series_is_discounted(self):
        rng = make_rng(4)
        x = np.empty(20_000)
        x[0] = 0.0
        noise = rng.normal(size=20_000)
        for k in range(1, x.size):
            x[k] = 0.95 * x[k - 1] + noise[k]
        # AR(1) with rho = 0.95 has ESS about n/39
        assert ess(x) < 3_000

    def test_degenerate_series(self):
        assert ess(np.full(50, 2.0)) == 50.0
