"""Reproducible random streams.

Every trial draws from its own Philox generator keyed by
``(master_seed, trial)``.  Changing the number of trials never perturbs
the streams of earlier trials, and trials can run in any order.
"""

from __future__ import annotations

import numpy as np


def trial_rng(master_seed: int, trial: int, *extra: int) -> np.random.Generator:
    """Generator for one trial, optionally split further by ``extra`` keys."""
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(trial), *map(int, extra)])
    return np.random.Generator(np.random.Philox(seq))


def as_rng(rng=None) -> np.random.Generator:
    """Accept a Generator, an integer seed or ``None``."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
