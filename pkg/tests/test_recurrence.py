import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from froglab.recurrence import (
    RangeError,
    check_inf_lambda,
    chi_prefix_void,
    collapse_tail,
    compute_P_direct,
    compute_tables,
    lambda_link_error,
    sum_bound_check,
    verify_appendix_b_chain,
    verify_monotone,
    weighted_average,
)

# Reference values from a 60-digit evaluation of the defining convolution.
ORACLE = {
    (2, 21.0): {
        "lam": {1: 7.0, 2: 6.9422702527545832, 3: 6.8893603435108777, 5: 6.799970632678563, 10: 6.6598690465001697, 30: 6.506836588325306},
        "P": {1: 0.030197383422318501, 10: 1.70279224390632e-15, 30: 5.723838970915255e-44},
    },
    (3, 45.0): {
        "lam": {1: 11.25, 2: 11.248380206149917, 3: 11.246763054713988, 5: 11.243540120380886, 10: 11.235587989749052, 30: 11.206811120351406},
        "P": {1: 0.023517745856009108, 10: 5.3019694528777528e-17, 30: 1.7348202213292332e-49},
    },
    (5, 125.0): {
        "lam": {1: 20.833333333333333, 2: 20.833333048924784, 3: 20.833332764516283, 5: 20.833332195699493, 10: 20.833330773659503, 20: 20.833327929594911},
        "P": {1: 0.015503853599009319, 10: 8.0241252494844759e-19, 20: 6.4386952260879431e-37},
    },
}


@pytest.mark.parametrize("key", list(ORACLE))
def test_tables_match_extended_precision_values(key):
    d, mu = key
    n = max(ORACLE[key]["lam"])
    t = compute_tables(d, mu, n)
    for k, ref in ORACLE[key]["lam"].items():
        assert t.lam[k - 1] == pytest.approx(ref, rel=1e-13)
    for k, ref in ORACLE[key]["P"].items():
        assert t.P_at(k) == pytest.approx(ref, rel=1e-12)


def test_first_two_terms_in_closed_form():
    t = compute_tables(2, 21.0, 3)
    a = math.exp(-7.0)
    assert t.a == pytest.approx(a, rel=1e-15)
    assert t.P_at(1) == pytest.approx(math.exp(-3.5), rel=1e-15)
    assert t.P_at(2) == pytest.approx(t.P_at(1) * ((1 - a) * t.P_at(1) + a), rel=1e-14)
    assert t.lam[1] == pytest.approx(-2 * math.log((1 - a) * t.P_at(1) + a), rel=1e-14)
    assert t.p[0] == t.a


def test_small_mu_limit():
    t = compute_tables(2, 1e-9, 2)
    assert t.a == pytest.approx(1.0)
    assert t.P_at(1) == pytest.approx(1.0)
    assert t.lam[0] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("d, mu, n", [(0, 1.0, 5), (2, -1.0, 5), (2, 1.0, 0)])
def test_bad_parameters(d, mu, n):
    with pytest.raises(ValueError):
        compute_tables(d, mu, n)


@pytest.mark.parametrize("d, mu", [(2, 21.0), (3, 45.0), (4, 80.0), (2, 3.0)])
def test_direct_and_ratio_forms_agree(d, mu):
    t = compute_tables(d, mu, 40)
    direct = compute_P_direct(d, mu, 40)
    ok = direct > 1e-300
    assert np.max(np.abs(direct[ok] / t.P[ok] - 1)) < 1e-10


@pytest.mark.parametrize("d, mu", [(2, 21.0), (6, 180.0), (2, 3.0)])
def test_lambda_link(d, mu):
    assert lambda_link_error(compute_tables(d, mu, 500)) < 1e-12


def test_monotone_on_the_reference_case():
    rep = verify_monotone(compute_tables(2, 21.0, 500))
    assert rep.passed, rep.violations


def test_monotone_detects_a_planted_increase():
    t = compute_tables(2, 21.0, 10)
    lam = t.lam.copy()
    lam[2] = lam[1] + 0.1  # lambda_3 > lambda_2
    rep = verify_monotone(dataclasses.replace(t, lam=lam))
    assert not rep.passed
    assert ("lambda_nonincreasing", 3) in rep.violations
    assert rep.first_violation == ("lambda_nonincreasing", 3)


def test_inf_lambda_reference_case():
    t = compute_tables(2, 21.0, 500)
    rep = check_inf_lambda(t, 0.5)
    assert rep.passed
    assert np.all(t.lam >= 1.0)


def test_inf_lambda_d3():
    rep = check_inf_lambda(compute_tables(3, 45.0, 500), 0.75)
    assert rep.passed


def test_inf_lambda_first_index_is_trivial():
    t = compute_tables(2, 21.0, 2)
    assert t.log_P[0] <= 0.0


def test_inf_lambda_refuses_outside_hypothesis():
    with pytest.raises(ValueError):
        check_inf_lambda(compute_tables(2, 10.0, 5), 0.5)
    with pytest.raises(ValueError):
        check_inf_lambda(compute_tables(2, 21.0, 5), 0.0)


def test_weighted_average_basics():
    assert weighted_average([1, 1, 1], [1.0, 2.0, 6.0]) == pytest.approx(3.0)
    assert weighted_average([1], [0.25]) == 0.25
    with pytest.raises(ValueError):
        weighted_average([0, 0], [1, 2])
    with pytest.raises(ValueError):
        weighted_average([1, -1], [1, 2])


@given(
    st.lists(st.tuples(st.floats(0.01, 10), st.floats(-5, 5)), min_size=2, max_size=12),
    st.integers(0, 11),
)
def test_collapsing_a_tail_block_preserves_the_average(pairs, k):
    w = [p[0] for p in pairs]
    a = [p[1] for p in pairs]
    k = k % (len(w) - 1)
    w2, a2 = collapse_tail(w, a, k + 1)
    assert abs(weighted_average(w, a) - weighted_average(w2, a2)) < 1e-12


def test_appendix_b_chain_reference_case():
    t = compute_tables(2, 21.0, 51)
    for n in range(2, 51):
        rep = verify_appendix_b_chain(t, n)
        assert rep.passed, (n, rep.violations)
        assert rep.margins["identity_rel_err"] < 1e-10
        assert rep.margins["q_gap"] >= 0


def test_appendix_b_identity_at_n3_in_extended_precision():
    import mpmath as mp

    mp.mp.dps = 50
    d, mu = 2, mp.mpf(21)
    a = mp.e ** (-mu / (d + 1))
    P = [mp.mpf(1), a ** (mp.mpf(1) / d)]
    P.append(P[1] * ((1 - a) * P[1] + a))
    P.append(P[1] * ((1 - a) * P[2] + a * ((1 - P[1]) * P[1] + P[1])))
    p3 = P[3] / P[2]
    t = compute_tables(2, 21.0, 4)
    assert abs(t.p[3] - float(p3)) / float(p3) < 1e-14
    assert verify_appendix_b_chain(t, 3).margins["identity_rel_err"] < 1e-10


def test_appendix_b_needs_longer_tables():
    with pytest.raises(ValueError):
        verify_appendix_b_chain(compute_tables(2, 21.0, 5), 5)
    with pytest.raises(ValueError):
        verify_appendix_b_chain(compute_tables(2, 21.0, 5), 1)


def test_sum_bound_examples():
    res = sum_bound_check(2.0, 1)
    assert res["lhs"] == 1.0
    assert res["holds"]
    res = sum_bound_check(2.0, 10)
    assert res["lhs"] <= 8 * (math.pi**2 / 6) / 100
    assert res["rhs_lower"] <= 8 * (math.pi**2 / 6) / 100 <= res["rhs"]
    with pytest.raises(ValueError):
        sum_bound_check(1.0, 5)


def test_chi_prefix_void():
    t = compute_tables(2, 21.0, 6)
    assert chi_prefix_void(t, 0) == 1.0
    a = t.a
    assert chi_prefix_void(t, 1) == pytest.approx((1 - a) * t.P_at(1) + a, rel=1e-14)
    for k in range(1, 5):
        ratio = chi_prefix_void(t, k + 1) / chi_prefix_void(t, k)
        assert ratio == pytest.approx(math.exp(-t.lam[k + 1] / 2), rel=1e-13)
    with pytest.raises(IndexError):
        chi_prefix_void(t, 6)


def test_range_error_carries_largest_valid_n():
    err = RangeError("x", 7)
    assert err.largest_valid_n == 7
