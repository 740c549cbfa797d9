"""Negative multinomial basics: pmf, moments, and the gamma-Poisson sampler.

Run:  python demos/01_model_sampling.py
"""

import numpy as np

from nmshrink import ProbColumn, make_rng, nm_log_pmf, nm_moments, nm_sample

# A single parameter column: three category probabilities, leftover mass p0.
col = ProbColumn(np.array([0.2, 0.3, 0.1]))
print(f"p = {col.p},  p0 = {col.p0:.2f}")

# Log mass at a few count vectors; exponentiating over everything sums to 1.
for x in ([0, 0, 0], [1, 2, 0], [4, 1, 3]):
    print(f"log pmf at {x}: {nm_log_pmf(np.array(x), 2.5, col):+.4f}")

# Moments and a large seeded sample drawn through the mixture representation:
# v ~ Gamma(r), then independent Poisson counts with rates (p_i/p0) v.
mean, cov = nm_moments(2.5, col)
draws = nm_sample(2.5, col, make_rng(0), size=200_000)
print("\nanalytic mean:", np.round(mean, 3))
print("sample mean:  ", np.round(draws.mean(axis=0), 3))
print("analytic covariance diagonal:", np.round(np.diag(cov), 3))
print("sample covariance diagonal:  ", np.round(draws.var(axis=0), 3))

# The same seed always reproduces the same draws.
again = nm_sample(2.5, col, make_rng(0), size=5)
print("\nfirst five draws, twice with seed 0:")
print(nm_sample(2.5, col, make_rng(0), size=5))
print(again)
