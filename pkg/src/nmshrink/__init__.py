"""Shrinkage estimation for negative multinomial count matrices.

Subpackages by responsibility:

* ``model``      -- domain types, pmf/moments, samplers, CSV/JSON round trips
* ``kernel``     -- the gamma-mixing kernel integral and its shrinkage ratios
* ``estimators`` -- unbiased, empirical Bayes, and hierarchical Bayes rules
* ``audit``      -- analytic propriety and dominance condition checkers
* ``gibbs``      -- the fully conjugate Gibbs sampler and chain diagnostics
* ``risklab``    -- losses, Monte Carlo risk comparisons, benchmark scenarios
* ``cli``        -- the ``nmshrink`` command-line harness
"""

from .estimators import (
    dirichlet_posterior_mean,
    eb,
    eb0,
    eb_delta_rule,
    hb,
    hb_posterior_mean,
    shrink_general,
    umvu,
)
from .kernel import (
    ConditionError,
    GChoice,
    PriorSpec,
    QuadratureError,
    delta_hb,
    delta_nu,
    log_kernel,
)
from .model import (
    CountMatrix,
    GeneralizedDirichlet,
    ModelParams,
    ProbColumn,
    gen_dirichlet_sample,
    make_rng,
    nm_log_pmf,
    nm_moments,
    nm_sample,
)
from .risklab import (
    RiskReport,
    Scenario,
    compare,
    hudson_check,
    loss_kl,
    loss_ss,
    prial,
    risk_mc,
    scenario_presets,
)

__all__ = [
    "CountMatrix",
    "ConditionError",
    "GChoice",
    "GeneralizedDirichlet",
    "ModelParams",
    "PriorSpec",
    "ProbColumn",
    "QuadratureError",
    "RiskReport",
    "Scenario",
    "compare",
    "delta_hb",
    "delta_nu",
    "dirichlet_posterior_mean",
    "eb",
    "eb0",
    "eb_delta_rule",
    "gen_dirichlet_sample",
    "hb",
    "hb_posterior_mean",
    "hudson_check",
    "log_kernel",
    "loss_kl",
    "loss_ss",
    "make_rng",
    "nm_log_pmf",
    "nm_moments",
    "nm_sample",
    "prial",
    "risk_mc",
    "scenario_presets",
    "shrink_general",
    "umvu",
]
