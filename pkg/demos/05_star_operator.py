"""The star-graph operator and its fixed point.

The return process of the self-similar model at the root is reproduced by
the star-graph particle system when each leaf of the star is fed an
independent copy of that same return process.  This script estimates the
return process by simulation, feeds the sample through the operator, and
compares the mean counts at each time.  It also applies the operator to
the empty process and to the dominated decomposition.

    python demos/05_star_operator.py
"""

import numpy as np

from froglab import engine as E
from froglab import recurrence as rec
from froglab.rng import trial_rng
from froglab.tree import TreeKind

if __name__ == "__main__":
    d, mu, T = 2, 21.0, 12
    cfg = E.SimConfig(TreeKind.rooted(d), E.Variant.SELF_SIMILAR, E.InitLaw.poisson(mu), T, seed=1, observe_depth=0)
    theta = E.run_trials(cfg, 5000).returns
    A_theta = E.star_A_counts(theta, d, mu, 20_000, trial_rng(1, 1), T)
    print("  t   E[theta(t)]   E[A theta(t)]")
    for t in range(2, T + 1, 2):
        print(f" {t:2d}   {theta[:, t].mean():10.3f}   {A_theta[:, t].mean():12.3f}")

    empty = E.star_A_counts(np.zeros((0, T + 1), np.int64), d, mu, 100_000, trial_rng(1, 2), T)
    print(f"\nA(empty): mean count at 2 = {empty[:, 2].mean():.3f} (mu/(d+1) = {mu / (d + 1):g}), other times {int(empty.sum() - empty[:, 2].sum())}")

    lam = list(rec.compute_tables(d, mu, 6).lam)
    rhs = E.sample_rhs_dominated_counts(lam, d, mu, 100_000, trial_rng(1, 3), T)
    means = E.rhs_dominated_means(lam, d, mu, T)
    print("\ndominated decomposition, empirical vs exact mean")
    for t in range(2, T + 1, 2):
        print(f" {t:2d}   {rhs[:, t].mean():8.3f}   {means[t]:8.3f}")
