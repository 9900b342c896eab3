"""The deterministic sequences behind the return-process lower bound.

For a branching number ``d`` and sleeper density ``mu`` let
``a = exp(-mu/(d+1))``.  The sequence ``P_n`` starts from ``P_0 = 1``,
``P_1 = a**(1/d)`` and obeys

    P_{n+1} = P_1 [ (1-a) P_n + a ( sum_{i=1}^{n-1} (P_{i-1} - P_i) P_{n-i} + P_{n-1} ) ].

The ratios ``p_n = P_n / P_{n-1}`` (with ``p_0 = a``) and the intensities
``lambda_n = -d log p_n`` are what the rest of the package consumes.
``P_n`` decays geometrically and underflows long before ``n = 500`` for
large ``mu``, so the tables are built from the ratio recurrence with all
products kept as log-cumulative sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MONOTONE_SLACK = 1e-14


class RangeError(ArithmeticError):
    """Raised when a quantity leaves the representable floating-point range."""

    def __init__(self, message: str, largest_valid_n: int):
        super().__init__(f"{message} (largest valid n = {largest_valid_n})")
        self.largest_valid_n = largest_valid_n


@dataclass(frozen=True)
class SequenceTables:
    """Sequence values for fixed ``(d, mu)``.

    Attributes
    ----------
    log_P : ndarray
        ``log P_1, ..., log P_n`` (the primary representation).
    p : ndarray
        ``p_0, ..., p_n``.
    lam : ndarray
        ``lambda_1, ..., lambda_n``.
    """

    d: int
    mu: float
    n: int
    a: float
    log_P: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)

    @property
    def P(self) -> np.ndarray:
        """``P_1, ..., P_n``; entries may underflow to 0."""
        return np.exp(self.log_P)

    def P_at(self, k: int) -> float:
        return 1.0 if k == 0 else float(np.exp(self.log_P[k - 1]))

    def log_P_at(self, k: int) -> float:
        return 0.0 if k == 0 else float(self.log_P[k - 1])

    def truncated(self, n: int) -> "SequenceTables":
        if not 1 <= n <= self.n:
            raise IndexError(n)
        return SequenceTables(self.d, self.mu, n, self.a, self.log_P[:n], self.p[: n + 1], self.lam[:n])


def _check_params(d: int, mu: float, n: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError("d must be an integer >= 2")
    if not (mu > 0 and math.isfinite(mu)):
        raise ValueError("mu must be positive and finite")
    if n < 1:
        raise ValueError("n must be >= 1")


def compute_tables(d: int, mu: float, n: int) -> SequenceTables:
    """Build the sequences up to index ``n`` from the ratio recurrence.

    With ``L_k = log P_k`` every convolution term is rescaled by
    ``exp(-L_{m-1})`` before summing, which keeps all exponents
    nonpositive, and the sums are compensated (``math.fsum``).
    """
    _check_params(d, mu, n)
    log_a = -mu / (d + 1)
    a = math.exp(log_a)
    log_p1 = log_a / d
    p1 = math.exp(log_p1)
    if p1 == 0.0 or a == 0.0:
        raise RangeError("exp(-mu/(d+1)) underflows", 0)

    log_p = np.empty(n + 1)   # log p_0 .. log p_n
    one_minus_p = np.empty(n + 1)
    L = np.zeros(n + 1)       # L_0 .. L_n
    log_p[0] = log_a
    one_minus_p[0] = -math.expm1(log_a)
    log_p[1] = log_p1
    one_minus_p[1] = -math.expm1(log_p1)
    L[1] = log_p1
    if n >= 2:
        p2 = one_minus_p[0] * p1 + a
        log_p[2] = math.log(p2)
        one_minus_p[2] = (1 - a) * (1 - p1)
        L[2] = L[1] + log_p[2]

    for m in range(2, n):
        # p_{m+1} = N_m / N_{m-1}, both scaled by exp(-L_{m-1})
        i = np.arange(1, m)
        num_terms = one_minus_p[i] * np.exp(L[i - 1] + L[m - i] - L[m - 1])
        numerator = math.fsum([(1 - a) * math.exp(log_p[m]), a * math.fsum(num_terms), a])
        j = np.arange(1, m - 1)
        den_terms = one_minus_p[j] * np.exp(L[j - 1] + L[m - 1 - j] - L[m - 1])
        denominator = math.fsum([1 - a, a * math.fsum(den_terms), a * math.exp(-log_p[m - 1])])
        if not (numerator > 0 and math.isfinite(denominator)):
            raise RangeError("ratio recurrence degenerated", m)
        ratio = numerator / denominator
        log_p[m + 1] = math.log(ratio)
        # 1 - p_{m+1} computed without cancellation
        one_minus_p[m + 1] = (denominator - numerator) / denominator
        L[m + 1] = L[m] + log_p[m + 1]

    # compensated prefix sums so long products do not drift
    log_P = np.array([math.fsum(log_p[1 : k + 1]) for k in range(1, n + 1)])
    lam = -d * log_p[1:]
    lam[0] = mu / (d + 1)
    return SequenceTables(d, float(mu), n, a, log_P, np.exp(log_p), lam)


def compute_P_direct(d: int, mu: float, n: int) -> np.ndarray:
    """``P_1, ..., P_n`` straight from the convolution recurrence.

    Only meaningful while ``P_n`` stays well above the underflow threshold;
    used to cross-check :func:`compute_tables`.
    """
    _check_params(d, mu, n)
    a = math.exp(-mu / (d + 1))
    P = np.empty(n + 1)
    P[0] = 1.0
    P[1] = a ** (1.0 / d)
    for m in range(1, n):
        conv = math.fsum((P[i - 1] - P[i]) * P[m - i] for i in range(1, m))
        P[m + 1] = P[1] * math.fsum([(1 - a) * P[m], a * conv, a * P[m - 1]])
    return P[1:]


@dataclass
class CheckReport:
    """Outcome of a verification pass.

    ``violations`` lists ``(check name, index)`` pairs.  ``margins`` holds the
    smallest slack observed per check (negative means violated).
    """

    passed: bool
    violations: list = field(default_factory=list)
    margins: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [list(v) for v in self.violations],
            "margins": self.margins,
            **self.details,
        }


def lambda_link_error(tables: SequenceTables) -> float:
    """Largest relative gap between ``P_k`` and ``exp(-sum_{j<=k} lambda_j / d)``.

    Where ``P_k`` underflows in double precision both sides are zero, so the
    comparison moves to the exponents and reports their relative gap.
    """
    worst = 0.0
    tiny = math.log(np.finfo(float).tiny)
    for k in range(1, tables.n + 1):
        via_lambda = -math.fsum(tables.lam[:k]) / tables.d
        log_P = tables.log_P[k - 1]
        if log_P > tiny:
            gap = abs(math.expm1(log_P - via_lambda))
        else:
            gap = abs(log_P - via_lambda) / abs(log_P)
        worst = max(worst, gap)
    return worst


def verify_monotone(tables: SequenceTables, slack: float = MONOTONE_SLACK) -> CheckReport:
    """Check that ``P`` is positive and nonincreasing, ``lambda`` is
    nonnegative and nonincreasing, and ``p`` is nondecreasing.

    Indices in the report follow the sequence indexing (``P_k``, ``lambda_k``
    and ``p_k``).
    """
    violations = []
    log_P, lam, p = tables.log_P, tables.lam, tables.p

    bad = np.flatnonzero(~np.isfinite(log_P))
    violations += [("P_positive", int(k) + 1) for k in bad]
    steps = np.diff(np.concatenate([[0.0], log_P]))
    violations += [("P_nonincreasing", int(k) + 1) for k in np.flatnonzero(steps > slack)]
    violations += [("lambda_nonnegative", int(k) + 1) for k in np.flatnonzero(lam < -slack)]
    dl = np.diff(lam)
    violations += [("lambda_nonincreasing", int(k) + 2) for k in np.flatnonzero(dl > slack)]
    dp = np.diff(p)
    violations += [("p_nondecreasing", int(k) + 1) for k in np.flatnonzero(dp < -slack)]
    violations.sort(key=lambda v: v[1])

    margins = {
        "P_step": float(-steps.max()),
        "lambda_min": float(lam.min()),
        "lambda_step": float(-dl.max()) if dl.size else math.inf,
        "p_step": float(dp.min()) if dp.size else math.inf,
    }
    return CheckReport(not violations, violations, margins)


def check_inf_lambda(tables: SequenceTables, gamma: float) -> CheckReport:
    """Check ``P_k <= exp(-gamma (k-1) - 2 log k)`` and ``lambda_k >= d gamma``.

    Raises
    ------
    ValueError
        If ``gamma <= 0`` or ``mu < (gamma + 3) d (d + 1)``, where neither
        bound is claimed.
    """
    d, mu = tables.d, tables.mu
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    threshold = (gamma + 3) * d * (d + 1)
    if mu < threshold * (1 - 1e-12):
        raise ValueError(
            f"mu = {mu} is below (gamma + 3) d (d + 1) = {threshold}; the bounds are not claimed there"
        )
    k = np.arange(1, tables.n + 1)
    log_bound = -gamma * (k - 1) - 2 * np.log(k)
    P_margin = log_bound - tables.log_P
    lam_margin = tables.lam - d * gamma
    violations = [("P_bound", int(i) + 1) for i in np.flatnonzero(P_margin < -1e-12)]
    violations += [("lambda_bound", int(i) + 1) for i in np.flatnonzero(lam_margin < -1e-12 * d * gamma)]
    violations.sort(key=lambda v: v[1])
    margins = {"log_P_margin": float(P_margin.min()), "lambda_margin": float(lam_margin.min())}
    return CheckReport(not violations, violations, margins, {"gamma": gamma})


def weighted_average(weights, values) -> float:
    """``sum(w * a) / sum(w)`` with compensated sums."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    if w.shape != v.shape:
        raise ValueError("weights and values differ in length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = math.fsum(w)
    if not total > 0:
        raise ValueError("weights sum to zero")
    return math.fsum(w * v) / total


def collapse_tail(weights, values, k: int):
    """Replace entries ``k+1..n`` by their total weight and weighted average.

    The weighted average of the result equals that of the input.
    """
    w = list(map(float, weights))
    v = list(map(float, values))
    if not 0 <= k < len(w):
        raise ValueError("k must satisfy 0 <= k <= n-1")
    tail_w = math.fsum(w[k:])
    tail_v = weighted_average(w[k:], v[k:])
    return w[:k] + [tail_w], v[:k] + [tail_v]


def _chain_arguments(p: np.ndarray, n: int, j: int) -> np.ndarray:
    """Arguments ``x_1..x_{n-2}`` for the ``j``-th interpolation step."""
    x = np.empty(n - 2)
    for k in range(1, n - 1):
        if k <= j:
            x[k - 1] = p[k]
        elif k == j + 1:
            x[k - 1] = p[j]
        else:
            x[k - 1] = p[k - 1]
    return x


def _chain_log_weights(x: np.ndarray, tables: SequenceTables, n: int) -> np.ndarray:
    """``log u_1(x), ..., log u_{n-1}(x)``."""
    S = np.concatenate([[0.0], np.cumsum(np.log(x))])  # log of x_1..x_k
    out = np.empty(n - 1)
    for i in range(1, n - 1):
        out[i - 1] = S[i - 1] + math.log1p(-x[i - 1]) + tables.log_P_at(n - 1 - i)
    out[n - 2] = S[n - 2]
    return out


def _wa_from_logs(log_w: np.ndarray, values: np.ndarray) -> float:
    top = log_w.max()
    if not math.isfinite(top):
        raise RangeError("all weights underflow", 0)
    return weighted_average(np.exp(log_w - top), values)


def verify_appendix_b_chain(tables: SequenceTables, n: int) -> CheckReport:
    """Check the weighted-average interpolation that shows ``p_n <= p_{n+1}``.

    At step ``j`` (``0 <= j <= n-2``) the weights are ``u_i`` evaluated at
    ``_chain_arguments(j)`` and the averaged values are
    ``p_{n-1}, ..., p_2`` followed by ``q = p_1 + (1 - p_1) p_{n-1}``.

    Checked:

    * ``p_n`` equals the step-0 average with ``q`` replaced by
      ``q' = p_1 + (1 - p_1) p_{n-2}`` (relative 1e-10);
    * ``q' <= q``;
    * each step's average is at least the previous one (absolute 1e-12);
    * the last step's weights equal ``t_i`` built from ``P`` directly, and
      ``p_n`` is at most that average;
    * ``p_n <= p_{n+1}``.
    """
    if n < 2:
        raise ValueError("the chain is defined for n >= 2")
    if tables.n < n + 1:
        raise ValueError(f"tables must extend to index n + 1 = {n + 1}")
    p = tables.p
    q = p[1] + (1 - p[1]) * p[n - 1]
    q_prime = p[1] + (1 - p[1]) * p[n - 2]
    head = np.array([p[n - i] for i in range(1, n - 1)])
    values_q = np.concatenate([head, [q]])
    values_qp = np.concatenate([head, [q_prime]])

    violations = []
    try:
        identity_rhs = _wa_from_logs(_chain_log_weights(_chain_arguments(p, n, 0), tables, n), values_qp)
        averages = [
            _wa_from_logs(_chain_log_weights(_chain_arguments(p, n, j), tables, n), values_q)
            for j in range(0, n - 1)
        ]
    except RangeError as exc:
        raise RangeError("all chain weights underflow", n - 1) from exc

    identity_err = abs(identity_rhs - p[n]) / p[n]
    if identity_err > 1e-10:
        violations.append(("identity", n))
    if q_prime > q:
        violations.append(("q_order", n))
    links = np.diff(averages)
    for j in np.flatnonzero(links < -1e-12):
        violations.append(("chain_link", int(j)))

    # last-step weights against t_i computed from P
    log_t = np.array(
        [
            tables.log_P_at(i - 1) + math.log1p(-p[i]) + tables.log_P_at(n - 1 - i)
            for i in range(1, n - 1)
        ]
        + [tables.log_P_at(n - 2)]
    )
    suf_rhs = _wa_from_logs(log_t, values_q)
    weights_match = bool(np.allclose(log_t, _chain_log_weights(_chain_arguments(p, n, n - 2), tables, n), rtol=0, atol=1e-9))
    if not weights_match:
        violations.append(("last_step_weights", n))
    if p[n] > suf_rhs + 1e-12:
        violations.append(("sufficient_condition", n))
    if p[n] > p[n + 1] + MONOTONE_SLACK:
        violations.append(("p_increase", n))

    margins = {
        "identity_rel_err": identity_err,
        "min_link": float(links.min()) if links.size else math.inf,
        "q_gap": q - q_prime,
        "sufficient_margin": suf_rhs - p[n],
        "p_step": p[n + 1] - p[n],
    }
    return CheckReport(not violations, violations, margins, {"n": n, "averages": [float(x) for x in averages]})


@lru_cache(maxsize=16)
def zeta_bracket(beta: float, terms: int = 10**6):
    """Lower and upper bounds on ``zeta(beta)`` from a truncated sum plus
    integral estimates of the tail."""
    if not beta > 1:
        raise ValueError("zeta(beta) diverges for beta <= 1")
    k = np.arange(1, terms + 1, dtype=float)
    head = math.fsum(k ** -beta)
    lower = head + (terms + 1) ** (1 - beta) / (beta - 1)
    upper = head + terms ** (1 - beta) / (beta - 1)
    return lower, upper


def sum_bound_check(beta: float, n: int) -> dict:
    """Compare ``sum_{k=1}^n (k (n+1-k))^(-beta)`` with ``2^(beta+1) zeta(beta) n^(-beta)``.

    The right-hand side is reported with ``zeta`` replaced by its certified
    upper bound (``rhs``) and lower bound (``rhs_lower``).  ``holds`` uses the
    lower one so the check can only err on the side of failing.
    """
    if not beta > 1:
        raise ValueError("beta must exceed 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(1, n + 1, dtype=float)
    lhs = float(np.sum((k * (n + 1 - k)) ** -beta))
    z_lo, z_hi = zeta_bracket(float(beta))
    scale = 2 ** (beta + 1) * n ** -beta
    return {"lhs": lhs, "rhs": scale * z_hi, "rhs_lower": scale * z_lo, "holds": lhs <= scale * z_lo}


def chi_prefix_void(tables: SequenceTables, k: int) -> float:
    """``P_{k+1} / P_1``; ``1`` for ``k = 0``."""
    if k == 0:
        return 1.0
    if not 1 <= k <= tables.n - 1:
        raise IndexError(f"k must lie in 1..{tables.n - 1}, got {k}")
    return math.exp(tables.log_P[k] - tables.log_P[0])


def tables_csv_rows(tables: SequenceTables, gamma: float | None = None):
    """Rows ``(k, P_k, p_k, lambda_k, bound_margin)`` for export."""
    for k in range(1, tables.n + 1):
        margin = ""
        if gamma is not None:
            margin = -gamma * (k - 1) - 2 * math.log(k) - tables.log_P[k - 1]
        yield k, tables.P_at(k), tables.p[k], tables.lam[k - 1], margin
