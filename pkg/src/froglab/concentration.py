"""Tail inequalities and exact binomial confidence bounds."""

from __future__ import annotations

import math

from scipy import stats


def poisson_tail_bound(lam: float, alpha: float, side: str) -> float:
    """Chernoff-type bound on a Poisson tail.

    Parameters
    ----------
    lam : float
        Poisson mean, positive.
    alpha : float
        Threshold as a multiple of ``lam``.  Must lie in (0, 1) for
        ``side="lower"`` and exceed 1 for ``side="upper"``.
    side : {"lower", "upper"}
        ``"lower"`` bounds ``P[X <= alpha*lam]``, ``"upper"`` bounds
        ``P[X >= alpha*lam]``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if side == "lower":
        if not 0 < alpha < 1:
            raise ValueError("lower-tail bound needs 0 < alpha < 1")
        return math.exp(-((1 - alpha) ** 2) * lam / 2)
    if side == "upper":
        if not alpha > 1:
            raise ValueError("upper-tail bound needs alpha > 1")
        return math.exp(-(alpha - 1) * lam / (2 / 3 + 2 / (alpha - 1)))
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def exp_sum_constant(C: float, b: float, b_prime: float) -> float:
    """Multiplier ``C'`` with ``P[X_1 + ... + X_n >= C'n] <= exp(-b'n)``.

    Valid for independent nonnegative ``X_i`` with ``P[X_i >= l] <= C exp(-b l)``.
    """
    if C < 0:
        raise ValueError("C must be nonnegative")
    if not b > 0:
        raise ValueError("b must be positive")
    if not b_prime > 0:
        raise ValueError("b' must be positive")
    return 2 * (b_prime + C) / b


def binomial_upper_ci(successes: int, trials: int, confidence: float = 0.99) -> float:
    """Exact one-sided upper confidence bound on a binomial success probability."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if successes == trials:
        return 1.0
    if successes == 0:
        # closed form, also avoids ppf round-off near 0
        return 1.0 - (1.0 - confidence) ** (1.0 / trials)
    return float(stats.beta.ppf(confidence, successes + 1, trials - successes))


def binomial_lower_ci(successes: int, trials: int, confidence: float = 0.99) -> float:
    """Exact one-sided lower confidence bound, by symmetry with the upper one."""
    return 1.0 - binomial_upper_ci(trials - successes, trials, confidence)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)
