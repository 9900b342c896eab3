import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from froglab.pointproc import (
    EMPTY,
    IntensityOnEvens,
    PointPattern,
    delay_pmf,
    dominance_report,
    patterns_to_counts,
    poisson_counts,
    sample_poisson_pp,
    sample_S,
    sample_S_batch,
    shift,
    shift_counts,
    superpose,
    thin,
    thin_counts,
    void_fraction,
)
from froglab.recurrence import chi_prefix_void, compute_tables

patterns = st.dictionaries(st.integers(0, 40), st.integers(1, 5), max_size=8).map(lambda d: PointPattern(tuple(sorted(d.items()))))


def test_pattern_validation_and_queries():
    p = PointPattern.from_times([2, 5, 2, 9])
    assert p.atoms == ((2, 2), (5, 1), (9, 1))
    assert p.total == 4 and len(p) == 4
    assert p.multiplicity(2) == 2 and p.multiplicity(3) == 0
    assert p.count(3, 9) == 2
    assert p.count_in([2, 9]) == 3
    assert p.is_void(6, 8)
    assert list(p.to_counts(5)) == [0, 0, 2, 0, 0, 1]
    with pytest.raises(ValueError):
        PointPattern(((3, 1), (2, 1)))
    with pytest.raises(ValueError):
        PointPattern(((3, 0),))


@given(patterns)
def test_json_roundtrip(p):
    assert PointPattern.from_json(p.to_json()) == p
    assert PointPattern.from_counts(p.to_counts(40)) == p


def test_intensity_validation():
    with pytest.raises(ValueError):
        IntensityOnEvens([1.0, -0.5])
    with pytest.raises(ValueError):
        IntensityOnEvens([math.inf])


def test_zero_intensity_gives_empty_pattern():
    rng = np.random.default_rng(0)
    assert all(sample_poisson_pp(IntensityOnEvens([0, 0, 0]), rng) == EMPTY for _ in range(100))


def test_poisson_pattern_atoms_are_even():
    rng = np.random.default_rng(1)
    p = sample_poisson_pp(IntensityOnEvens([3, 1, 2]), rng)
    assert all(t % 2 == 0 and 2 <= t <= 6 for t, _ in p.atoms)


def test_poisson_means_and_void_probabilities():
    lam = [7.0, 1.0, 0.5, 0.25]
    N = 10**6
    c = poisson_counts(IntensityOnEvens(lam), N, np.random.default_rng(2))
    for k, l in enumerate(lam, start=1):
        se = math.sqrt(l / N)
        assert abs(c[:, 2 * k].mean() - l) < 3 * se
    for k in range(1, len(lam) + 1):
        voids, _ = void_fraction(c, 2, 2 * k)
        p = math.exp(-sum(lam[:k]))
        assert abs(voids / N - p) < 4 * math.sqrt(p * (1 - p) / N) + 1e-12


def test_thin_extremes():
    rng = np.random.default_rng(3)
    p = PointPattern.from_times([2, 2, 4, 8])
    assert thin(p, 1.0, rng) == p
    assert thin(p, 0.0, rng) == EMPTY
    with pytest.raises(ValueError):
        thin(p, 1.5, rng)


def test_thinned_poisson_mean():
    N, lam, q = 10**6, 6.0, 0.5
    rng = np.random.default_rng(4)
    c = thin_counts(poisson_counts(IntensityOnEvens([lam]), N, rng), q, rng)
    assert abs(c[:, 2].mean() - q * lam) < 3 * math.sqrt(q * lam / N)
    assert abs(c[:, 2].var() - q * lam) < 0.05


def test_two_stage_thinning_law_equals_one_stage_exactly():
    pattern = PointPattern(((2, 3), (4, 1), (6, 2)))
    p, q = 0.7, 0.4
    for _, m in pattern.atoms:
        two_stage = np.zeros(m + 1)
        for j in range(m + 1):
            two_stage[: j + 1] += stats.binom.pmf(j, m, p) * stats.binom.pmf(np.arange(j + 1), j, q)
        assert np.allclose(two_stage, stats.binom.pmf(np.arange(m + 1), m, p * q), atol=1e-15)


def test_two_stage_thinning_by_simulation():
    rng = np.random.default_rng(5)
    pattern = PointPattern(((2, 3), (4, 1), (6, 2)))
    kept = np.array([thin(thin(pattern, 0.7, rng), 0.4, rng).total for _ in range(20000)])
    assert abs(kept.mean() - 6 * 0.28) < 4 * math.sqrt(6 * 0.28 * 0.72 / 20000)


def test_shift_examples():
    x = PointPattern.from_times([2, 5])
    assert shift(x, 0) == x
    assert shift(x, 3) == PointPattern.from_times([5, 8])
    assert shift(x, math.inf) == EMPTY
    with pytest.raises(ValueError):
        shift(x, -1)


@given(patterns, st.integers(0, 30))
def test_shift_preserves_total(p, t):
    assert shift(p, t).total == p.total


@given(st.lists(patterns, max_size=5), st.integers(0, 30))
def test_shift_commutes_with_superposition(xs, t):
    assert shift(superpose(xs), t) == superpose([shift(x, t) for x in xs])


def test_superpose_examples():
    x = PointPattern.from_times([2, 6])
    assert superpose([x, EMPTY]) == x
    assert superpose([PointPattern.from_times([2]), PointPattern.from_times([2])]).multiplicity(2) == 2


def test_superpose_counts_add():
    rng = np.random.default_rng(6)
    xs = [PointPattern.from_times(rng.integers(0, 30, rng.integers(0, 6))) for _ in range(100)]
    total = superpose(xs)
    for t in range(30):
        assert total.multiplicity(t) == sum(x.multiplicity(t) for x in xs)


def test_count_matrix_shift_matches_object_shift():
    rng = np.random.default_rng(7)
    xs = [PointPattern.from_times(2 * rng.integers(1, 6, 3)) for _ in range(20)]
    shifts = rng.choice([0, 2, 4, math.inf], 20)
    c = shift_counts(patterns_to_counts(xs, 30), shifts, 30)
    for i, (x, s) in enumerate(zip(xs, shifts)):
        assert PointPattern.from_counts(c[i]) == shift(x, s)


def test_delay_law_examples():
    assert delay_pmf(1e6, 2, [1.0])[0] == pytest.approx(1.0)
    pmf = delay_pmf(21.0, 2, [])
    assert len(pmf) == 2
    assert pmf[1] == pytest.approx(math.exp(-7.0))
    pmf = delay_pmf(21.0, 2, [7.0])
    assert pmf[1] == pytest.approx(math.exp(-7) * (1 - math.exp(-3.5)))
    assert pmf.sum() == pytest.approx(1.0)
    rng = np.random.default_rng(8)
    assert all(sample_S(21.0, 2, [], rng) in (0, math.inf) for _ in range(1000))
    with pytest.raises(ValueError):
        sample_S(21.0, 2, [-1.0], rng)
    with pytest.raises(ValueError):
        delay_pmf(21.0, 2, [-1.0])


def test_delay_marginal_by_simulation():
    lam = [1.0, 0.7, 0.4]
    mu, d, N = 2.0, 2, 10**6
    pmf = delay_pmf(mu, d, lam)
    s = sample_S_batch(mu, d, lam, N, np.random.default_rng(9))
    emp = [np.mean(s == k) for k in range(len(lam) + 1)] + [np.mean(np.isinf(s))]
    for e, p in zip(emp, pmf):
        assert abs(e - p) < 4 * math.sqrt(p * (1 - p) / N)


def test_sequential_and_batch_delay_agree_in_law():
    lam = [0.5, 0.5]
    rng = np.random.default_rng(10)
    seq = np.array([sample_S(1.0, 2, lam, rng) for _ in range(20000)])
    pmf = delay_pmf(1.0, 2, lam)
    assert abs(np.mean(np.isinf(seq)) - pmf[-1]) < 4 * math.sqrt(pmf[-1] * (1 - pmf[-1]) / 20000)


def test_dominance_of_a_law_by_itself():
    target = IntensityOnEvens([1.0, 0.5, 0.8])
    c = poisson_counts(target, 10**6, np.random.default_rng(11))
    rep = dominance_report(c, target, 0.99)
    assert rep.passed
    assert len(rep.records) == 6
    assert '"records"' in rep.to_json()


def test_empty_samples_fail_void_check():
    rep = dominance_report([EMPTY] * 1000, IntensityOnEvens([1.0]), 0.99)
    assert not rep.passed
    assert not rep.records[0]["pass"]


def test_dominance_refusals():
    with pytest.raises(ValueError):
        dominance_report([], IntensityOnEvens([1.0]))
    with pytest.raises(ValueError):
        dominance_report([EMPTY], IntensityOnEvens([1.0]), confidence=1.0)


def test_shifted_thinned_chi_void_probabilities():
    d, mu, n, N = 2, 21.0, 6, 10**6
    tables = compute_tables(d, mu, n)
    lam = list(tables.lam[:n])
    rng = np.random.default_rng(12)
    width = 4 * n + 2
    chi = thin_counts(poisson_counts(IntensityOnEvens(lam), N, rng, width), 1 / d, rng)
    shifted = shift_counts(chi, 2 + 2 * sample_S_batch(mu, d, lam, N, rng), width)
    for k in range(1, 5):
        voids, _ = void_fraction(shifted, 4, 2 * k + 2)
        p = chi_prefix_void(tables, k)
        assert abs(voids / N - p) < 4 * math.sqrt(p * (1 - p) / N)
