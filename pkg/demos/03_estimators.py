"""All point estimators side by side on one count matrix.

Run:  python demos/03_estimators.py
"""

import numpy as np

from nmshrink import (
    CountMatrix,
    GChoice,
    PriorSpec,
    dirichlet_posterior_mean,
    eb,
    eb0,
    hb,
    hb_posterior_mean,
    umvu,
)
from nmshrink.audit import jeffreys_prior

r = 8.0
x = CountMatrix(np.array([
    [12,  7,  9],
    [ 4,  0, 11],
    [ 9,  8,  6],
    [ 7, 13,  0],
    [10,  6,  8],
    [ 5,  9, 12],
    [ 8, 11,  7],
]))
print("counts (column sums", x.col_sums, "grand total", x.grand_sum, ")")

g1 = GChoice.constant_one()

# Squared-error family: zero counts stay exactly zero, everything else is
# shrunk by progressively larger denominators.
rules = {
    "unbiased": umvu(x, r),
    "eb (columnwise)": eb0(x, r),
    "eb (pooled)": eb(x, r),
    "hierarchical": hb(x, r, alpha=14.0, beta=1.0, g=g1),
}
for name, d in rules.items():
    print(f"\n{name}: column sums of estimates = {np.round(d.sum(axis=0), 4)}")
    print(np.round(d, 4))

# Posterior-mean family for the positive-estimate loss; with the
# information-based default Dirichlet weights.
jp = jeffreys_prior(x.m)
plain = dirichlet_posterior_mean(x, r, jp.a0, jp.a)
prior = PriorSpec(5.0, 1.0, g1, jp.a0, jp.a)
shrunk = hb_posterior_mean(x, r, prior)
print("\nposterior means (plain vs hierarchical), first column:")
print(np.column_stack([plain[:, 0], shrunk[:, 0]]).round(4))
print("hierarchical entries are strictly smaller:", bool(np.all(shrunk < plain)))
