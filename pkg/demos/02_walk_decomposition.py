"""Building a simple random walk from a nonbacktracking spine.

Samples a root-biased nonbacktracking spine on the binary tree, inserts
geometric numbers of excursions, and shows the resulting walk, the inserted
lengths and the dilated spine times.  Then compares the 4-step path law of
composed walks with the exact simple-random-walk law.

    python demos/02_walk_decomposition.py
"""

import numpy as np

from froglab import walks as W
from froglab.rng import trial_rng
from froglab.tree import ROOT, TreeKind, to_string


def fmt(path) -> str:
    return " ".join(to_string(v) or "o" for v in path)


if __name__ == "__main__":
    tree = TreeKind.rooted(2)
    rng = np.random.default_rng(2024)
    spine = W.sample_walk(W.spine_kernel(tree), tree, ROOT, 6, rng)
    composed = W.compose_srw(spine, tree, rng)
    times = W.dilate_times(range(len(spine)), composed.insertions)
    print("spine      :", fmt(spine))
    print("insertions :", composed.insertions)
    print("walk       :", fmt(composed.walk))
    print("spine times in the walk:", times)
    print()

    steps, samples = 4, 200_000
    for name, kind in (("homogeneous", TreeKind.homogeneous(2)), ("rooted", tree), ("height 3", TreeKind.finite(2, 3))):
        codes, _ = W.composed_path_codes(kind, ROOT, steps, samples, trial_rng(0, 1))
        tv = W.tv_distance(W.empirical_law(codes), W.srw_path_law(kind, ROOT, steps))
        print(f"{name:12s} 4-step path law, TV to simple random walk: {tv:.4f}  ({samples} samples)")

    rep = W.spine_and_J_law_check(2, 3, samples, trial_rng(0, 2))
    print(f"joint (path, spine index) law on the homogeneous tree: worst deviation {rep.max_se_deviation:.2f} SE")

    ell = W.insertion_samples(tree, spine, samples, trial_rng(0, 3))
    print("\nP[ell_j >= t+2] for the spine above, against the dilation bound")
    for t in range(0, 21, 4):
        freqs = " ".join(f"{np.mean(ell[:, j] >= t + 2):.4f}" for j in range(ell.shape[1]))
        print(f"  t={t:2d}  bound {W.dilation_tail_bound(t):.4f}   per j: {freqs}")
