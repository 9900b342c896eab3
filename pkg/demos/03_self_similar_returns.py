"""Returns to the root in the self-similar frog model.

With d = 2 and mu = 21 the return process should dominate a Poisson process
of intensity alpha = mu/(d+1) - 3d = 1 on the even times.  This script
runs a few thousand copies, prints the mean return count per time, the
void probability of {2, ..., 16} and the passage times along the ray
through the first child visited.

    python demos/03_self_similar_returns.py
"""

import math

import numpy as np

from froglab import engine as E
from froglab.tree import TreeKind

if __name__ == "__main__":
    d, mu, T, trials = 2, 21.0, 16, 5000
    alpha = mu / (d + 1) - 3 * d
    cfg = E.SimConfig(TreeKind.rooted(d), E.Variant.SELF_SIMILAR, E.InitLaw.poisson(mu), T, seed=7, observe_depth=0)
    batch = E.run_trials(cfg, trials)
    print(f"{trials} runs, d={d}, mu={mu:g}, alpha={alpha:g}")
    print("  t   mean returns at t")
    for t in range(2, T + 1, 2):
        print(f"  {t:2d}  {batch.returns[:, t].mean():8.3f}")
    window = batch.returns[:, 2 : T + 1].sum(axis=1)
    print(f"mean returns on [2, {T}]: {window.mean():.2f}   (Poisson({alpha:g}) mean {alpha * T / 2:g})")
    print(f"runs with no return on [2, {T}]: {int(np.sum(window == 0))}   (Poisson void probability {math.exp(-alpha * T / 2):.2e})")

    # passage times need frogs a few levels below the root
    cfg = cfg.replace(observe_depth=3)
    batch = E.run_trials(cfg, 2000, ray=E.InitialRay(2))
    tau = batch.tau
    beta = mu / (d * (d + 1)) - 3
    print(f"\npassage time tau_1 along the initial ray (beta = {beta:g}):")
    for t in range(1, 7):
        frac = np.mean((tau[:, 1] < 0) | (tau[:, 1] > 2 * t - 1))
        print(f"  P[tau_1 > {2 * t - 1:2d}] = {frac:.4f}   bound {math.exp(-beta * t):.4f}")
