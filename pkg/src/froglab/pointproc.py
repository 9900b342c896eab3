"""Integer-time point patterns, Poisson sampling, thinning and shifts.

A :class:`PointPattern` is an immutable multiset of nonnegative integer
times.  For Monte Carlo work the same operations also exist on *count
matrices*: integer arrays of shape ``(samples, horizon + 1)`` whose entry
``[s, t]`` is the multiplicity of time ``t`` in sample ``s``.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .concentration import binomial_lower_ci, binomial_upper_ci

INF = math.inf


@dataclass(frozen=True)
class PointPattern:
    """Sorted ``(time, multiplicity)`` pairs with strictly increasing times."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple((int(t), int(m)) for t, m in self.atoms)
        for (t0, _), (t1, _) in zip(atoms, atoms[1:]):
            if t1 <= t0:
                raise ValueError("atom times must be strictly increasing")
        for t, m in atoms:
            if t < 0 or m <= 0:
                raise ValueError(f"bad atom ({t}, {m})")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_times(cls, times: Iterable[int]) -> "PointPattern":
        c = Counter(int(t) for t in times)
        return cls(tuple(sorted(c.items())))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "PointPattern":
        """Pattern whose multiplicity at time ``t`` is ``counts[t]``."""
        counts = np.asarray(counts)
        nz = np.flatnonzero(counts)
        return cls(tuple((int(t), int(counts[t])) for t in nz))

    @property
    def total(self) -> int:
        return sum(m for _, m in self.atoms)

    @property
    def times(self) -> list:
        """Flat sorted list of times, with repeats."""
        return [t for t, m in self.atoms for _ in range(m)]

    def multiplicity(self, t: int) -> int:
        for s, m in self.atoms:
            if s == t:
                return m
        return 0

    def count(self, lo: int = 0, hi: float = INF) -> int:
        """Number of points with ``lo <= time <= hi``."""
        return sum(m for t, m in self.atoms if lo <= t <= hi)

    def count_in(self, times: Iterable[int]) -> int:
        times = set(times)
        return sum(m for t, m in self.atoms if t in times)

    def is_void(self, lo: int = 0, hi: float = INF) -> bool:
        return self.count(lo, hi) == 0

    def to_counts(self, horizon: int) -> np.ndarray:
        out = np.zeros(horizon + 1, dtype=np.int64)
        for t, m in self.atoms:
            if t <= horizon:
                out[t] = m
        return out

    def to_dict(self) -> dict:
        return {"atoms": [[t, m] for t, m in self.atoms]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "PointPattern":
        return cls(tuple(tuple(a) for a in obj["atoms"]))

    @classmethod
    def from_json(cls, text: str) -> "PointPattern":
        return cls.from_dict(json.loads(text))

    def __len__(self) -> int:
        return self.total


EMPTY = PointPattern()


@dataclass(frozen=True)
class IntensityOnEvens:
    """Intensity ``lam[k-1]`` at time ``2k`` for ``k = 1..n``."""

    lam: tuple = field(default=())

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lam)
        if any(not (x >= 0 and math.isfinite(x)) for x in lam):
            raise ValueError("intensities must be finite and nonnegative")
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return len(self.lam)

    @property
    def horizon(self) -> int:
        return 2 * self.n

    def prefix_mass(self, k: int) -> float:
        return math.fsum(self.lam[:k])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lam, dtype=float)


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")


def sample_poisson_pp(intensity: IntensityOnEvens, rng: np.random.Generator) -> PointPattern:
    counts = rng.poisson(intensity.as_array())
    return PointPattern(tuple((2 * (k + 1), int(c)) for k, c in enumerate(counts) if c))


def thin(pattern: PointPattern, p: float, rng: np.random.Generator) -> PointPattern:
    """Keep each point independently with probability ``p``."""
    _check_prob(p)
    if not pattern.atoms:
        return pattern
    times = np.array([t for t, _ in pattern.atoms])
    kept = rng.binomial(np.array([m for _, m in pattern.atoms]), p)
    return PointPattern(tuple((int(t), int(m)) for t, m in zip(times, kept) if m))


def shift(pattern: PointPattern, t) -> PointPattern:
    """Translate every point by ``t``; an infinite shift empties the pattern."""
    if t == INF:
        return EMPTY
    if t < 0:
        raise ValueError("shift must be nonnegative")
    t = int(t)
    return PointPattern(tuple((s + t, m) for s, m in pattern.atoms))


def superpose(patterns: Iterable[PointPattern]) -> PointPattern:
    c: Counter = Counter()
    for pat in patterns:
        for t, m in pat.atoms:
            c[t] += m
    return PointPattern(tuple(sorted(c.items())))


def delay_pmf(mu: float, d: int, lam_seq: Sequence[float]) -> np.ndarray:
    """Law of the delay ``S`` as ``[P(S=0), ..., P(S=n), P(S=inf)]``.

    ``S = 0`` with probability ``1 - exp(-mu/(d+1))``; given ``S >= k`` it
    equals ``k`` with probability ``1 - exp(-lam_k/d)``; what remains sits
    at infinity.
    """
    lam = np.asarray(lam_seq, dtype=float)
    if np.any(lam < 0):
        raise ValueError("intensities must be nonnegative")
    hazards = np.concatenate([[-math.expm1(-mu / (d + 1))], -np.expm1(-lam / d)])
    survive = np.concatenate([[1.0], np.cumprod(1 - hazards)])
    return np.concatenate([survive[:-1] * hazards, [survive[-1]]])


def sample_S(mu: float, d: int, lam_seq: Sequence[float], rng: np.random.Generator):
    """One draw of the delay ``S``; returns ``math.inf`` for the mass at infinity."""
    if any(x < 0 for x in lam_seq):
        raise ValueError("intensities must be nonnegative")
    if rng.random() < -math.expm1(-mu / (d + 1)):
        return 0
    for k, lam in enumerate(lam_seq, start=1):
        if rng.random() < -math.expm1(-lam / d):
            return k
    return INF


def sample_S_batch(mu: float, d: int, lam_seq: Sequence[float], size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` draws of ``S`` as floats (``inf`` for the mass at infinity)."""
    pmf = delay_pmf(mu, d, lam_seq)
    idx = np.searchsorted(np.cumsum(pmf[:-1]), rng.random(size), side="right")
    out = idx.astype(float)
    out[idx >= len(pmf) - 1] = INF
    return out


# ---------------------------------------------------------------------------
# count-matrix versions for large Monte Carlo batches


def poisson_counts(intensity: IntensityOnEvens, size: int, rng: np.random.Generator, horizon: int | None = None) -> np.ndarray:
    horizon = intensity.horizon if horizon is None else horizon
    out = np.zeros((size, horizon + 1), dtype=np.int64)
    for k, lam in enumerate(intensity.lam, start=1):
        if 2 * k <= horizon:
            out[:, 2 * k] = rng.poisson(lam, size)
    return out


def thin_counts(counts: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    _check_prob(p)
    return rng.binomial(counts, p)


def shift_counts(counts: np.ndarray, shifts, horizon: int | None = None) -> np.ndarray:
    """Shift each row by its own amount; infinite shifts give empty rows.

    Points pushed past ``horizon`` are dropped.
    """
    counts = np.atleast_2d(counts)
    n_rows, width = counts.shape
    horizon = width - 1 if horizon is None else horizon
    shifts = np.broadcast_to(np.asarray(shifts, dtype=float), (n_rows,))
    if np.any(shifts < 0):
        raise ValueError("shifts must be nonnegative")
    out = np.zeros((n_rows, horizon + 1), dtype=counts.dtype)
    finite = np.isfinite(shifts)
    for s in np.unique(shifts[finite]).astype(np.int64):
        rows = np.flatnonzero(shifts == s)
        span = max(0, min(width, horizon + 1 - s))
        if span:
            out[rows, s : s + span] = counts[rows, :span]
    return out


def void_fraction(counts: np.ndarray, lo: int, hi: int) -> tuple:
    """``(number of void rows, number of rows)`` on the window ``[lo, hi]``."""
    window = counts[:, lo : hi + 1]
    voids = int(np.count_nonzero(window.sum(axis=1) == 0))
    return voids, counts.shape[0]


def patterns_to_counts(samples: Sequence[PointPattern], horizon: int) -> np.ndarray:
    out = np.zeros((len(samples), horizon + 1), dtype=np.int64)
    for i, pat in enumerate(samples):
        for t, m in pat.atoms:
            if t <= horizon:
                out[i, t] = m
    return out


# ---------------------------------------------------------------------------
# dominance diagnostics


@dataclass
class DominanceReport:
    """Per-check records from :func:`dominance_report`.

    The void-probability and mean checks are necessary consequences of
    stochastic dominance.  Passing them certifies consistency with
    dominance at the stated confidence, not dominance itself.
    """

    samples: int
    confidence: float
    records: list

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.records)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "confidence": self.confidence,
            "tested": "void probabilities on prefixes and per-atom means (necessary conditions only)",
            "passed": self.passed,
            "records": self.records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def dominance_report(samples, target: IntensityOnEvens, confidence: float = 0.99) -> DominanceReport:
    """Check samples for consistency with dominating a Poisson pattern.

    If a point process dominates the Poisson pattern with intensity
    ``lam_k`` at ``2k``, then for every prefix ``{2, ..., 2k}`` its void
    probability is at most ``exp(-(lam_1 + ... + lam_k))`` and its mean
    count at ``2k`` is at least ``lam_k``.

    A void check fails only when the exact one-sided lower confidence bound
    on the void probability exceeds the Poisson value, so a process that
    matches the target exactly passes with probability at least
    ``confidence``.  The exact upper bound is reported alongside.  The mean
    check allows a normal-quantile margin of the sample standard error.

    Parameters
    ----------
    samples : sequence of PointPattern or ndarray
        I.i.d. draws, or a count matrix with one row per draw.
    target : IntensityOnEvens
    confidence : float
    """
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    horizon = target.horizon
    if isinstance(samples, np.ndarray):
        counts = samples
        if counts.shape[1] <= horizon:
            counts = np.pad(counts, ((0, 0), (0, horizon + 1 - counts.shape[1])))
    else:
        counts = patterns_to_counts(list(samples), horizon)
    n_samples = counts.shape[0]
    if n_samples == 0:
        raise ValueError("no samples")

    records = []
    z = float(stats.norm.ppf(confidence))
    nonvoid_cum = np.zeros(n_samples, dtype=bool)
    for k in range(1, target.n + 1):
        nonvoid_cum |= counts[:, 2 * k] > 0
        voids = int(n_samples - np.count_nonzero(nonvoid_cum))
        bound = math.exp(-target.prefix_mass(k))
        lower = binomial_lower_ci(voids, n_samples, confidence)
        upper = binomial_upper_ci(voids, n_samples, confidence)
        records.append(
            {
                "name": f"void_prefix_{k}",
                "window": [2, 2 * k],
                "statistic": voids / n_samples,
                "bound": bound,
                "ci_lower": lower,
                "ci_upper": upper,
                "margin": bound - lower,
                "pass": lower <= bound,
            }
        )
    for k in range(1, target.n + 1):
        col = counts[:, 2 * k].astype(float)
        mean = float(col.mean())
        se = float(col.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
        lam = target.lam[k - 1]
        records.append(
            {
                "name": f"mean_atom_{2 * k}",
                "statistic": mean,
                "bound": lam,
                "se": se,
                "margin": mean + z * se - lam,
                "pass": mean + z * se >= lam,
            }
        )
    return DominanceReport(n_samples, confidence, records)
