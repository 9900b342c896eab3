import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from froglab import walks as W
from froglab.tree import ROOT, TreeKind, VertexRef, are_neighbors, contains, from_string, navigate

T2 = TreeKind.rooted(2)
H2 = TreeKind.homogeneous(2)
F23 = TreeKind.finite(2, 3)
ABOVE_ROOT = VertexRef((), 1)


def v(s):
    return from_string(s)


def freq(draws):
    vals, counts = np.unique([str(x) for x in draws], return_counts=True)
    return dict(zip(vals.tolist(), (counts / len(draws)).tolist()))


# ---------------------------------------------------------------- step kernels


def test_root_biased_backtracks_with_prob_one_over_d_squared():
    rng = np.random.default_rng(1)
    n = 40_000
    draws = [W.step(W.StepKernel.ROOT_BIASED_NB, T2, ROOT, v("0"), rng) for _ in range(n)]
    p0 = sum(x == v("0") for x in draws) / n
    assert abs(p0 - 0.25) < 4 * math.sqrt(0.25 * 0.75 / n)
    assert set(draws) == {v("0"), v("1")}


def test_uniform_nb_first_step_is_uniform():
    rng = np.random.default_rng(2)
    n = 20_000
    draws = [W.step(W.StepKernel.UNIFORM_NB, T2, ROOT, None, rng) for _ in range(n)]
    p0 = sum(x == v("0") for x in draws) / n
    assert abs(p0 - 0.5) < 4 * math.sqrt(0.25 / n)


def test_leaf_steps_to_parent():
    tree = TreeKind.finite(2, 5)
    rng = np.random.default_rng(3)
    leaf, par = v("0/1/1/0/1"), v("0/1/1/0")
    for kernel in (W.StepKernel.ROOT_BIASED_NB, W.StepKernel.UNIFORM_NB):
        assert all(W.step(kernel, tree, leaf, par, rng) == par for _ in range(200))


def test_step_rejects_non_neighbor_previous():
    with pytest.raises(ValueError):
        W.step(W.StepKernel.UNIFORM_NB, T2, v("0"), v("1"), np.random.default_rng(0))


def test_root_biased_needs_rooted_tree():
    with pytest.raises(ValueError):
        W.step(W.StepKernel.ROOT_BIASED_NB, H2, v("0"), ROOT, np.random.default_rng(0))


@pytest.mark.parametrize("d", range(2, 11))
def test_root_biased_probabilities_sum_to_one(d):
    assert math.isclose(1 / d**2 + (d - 1) * (d + 1) / d**2, 1.0)


def test_simple_step_uses_all_neighbors():
    rng = np.random.default_rng(4)
    draws = [W.step(W.StepKernel.SIMPLE, T2, v("0"), ROOT, rng) for _ in range(3000)]
    f = freq(draws)
    assert set(f) == {"", "0/0", "0/1"}
    assert all(abs(p - 1 / 3) < 0.04 for p in f.values())


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), tree=st.sampled_from([T2, H2, F23, TreeKind.rooted(3)]))
def test_spines_are_nonbacktracking(seed, tree):
    rng = np.random.default_rng(seed)
    start = ROOT
    path = W.sample_walk(W.spine_kernel(tree), tree, start, 30, rng)
    for a, b in zip(path, path[1:]):
        assert are_neighbors(a, b) and contains(tree, b)
    for i in range(1, len(path) - 1):
        if path[i + 1] == path[i - 1]:
            at_root = path[i] == ROOT and not tree.is_homogeneous
            assert at_root or navigate(tree, path[i]).is_leaf


# ------------------------------------------------------------------ excursions


def test_excursion_returns_once_at_end():
    rng = np.random.default_rng(5)
    for _ in range(300):
        ex = W.sample_excursion(H2, ROOT, v("1"), rng)
        assert ex.path[0] == ROOT and ex.path[1] == v("1")
        assert ex.path[-1] == ROOT and ROOT not in ex.path[1:-1]
        assert ex.length % 2 == 0 and ex.length >= 2


def test_excursion_length_two_probability():
    rng = np.random.default_rng(6)
    lengths = W.excursion_length_samples(H2, ROOT, v("0"), 200_000, rng)
    p2 = np.mean(lengths == 2)
    assert abs(p2 - 2 / 3) < 4 * math.sqrt(2 / 9 / 200_000)
    assert np.all(lengths % 2 == 0)


def test_excursion_tail_bound():
    rng = np.random.default_rng(7)
    lengths = W.excursion_length_samples(H2, ROOT, v("0"), 200_000, rng)
    for t in range(1, 40):
        assert np.mean(lengths >= 2 + 2 * t) <= math.exp(-t / 14)


def test_excursion_leaving_rooted_tree_collapses():
    ex = W.sample_excursion(T2, ROOT, ABOVE_ROOT, np.random.default_rng(8))
    assert ex.path == (ROOT,)


def test_excursion_rejects_non_neighbors():
    with pytest.raises(ValueError):
        W.sample_excursion(T2, ROOT, v("0/0"), np.random.default_rng(0))


def test_excursion_step_cap():
    rng = np.random.default_rng(9)
    with pytest.raises(W.ExcursionTooLong):
        for _ in range(1000):
            W.sample_excursion(H2, ROOT, v("0"), rng, max_steps=2)


# ----------------------------------------------------------------- restriction


def test_restrict_interior_path_unchanged():
    path = [ROOT, v("0"), v("0/1"), v("0")]
    assert W.restrict_path(path, T2) == path


def test_restrict_collapses_root_repeats():
    assert W.restrict_path([ROOT, ABOVE_ROOT, ROOT, v("0")], T2) == [ROOT, v("0")]


def test_restrict_escaping_upward():
    assert W.restrict_path([ROOT, ABOVE_ROOT, VertexRef((), 2), VertexRef((), 3)], T2) == [ROOT]


def test_restrict_to_finite_tree_drops_deep_vertices():
    path = [v("0/0/0"), v("0/0/0/1"), v("0/0/0")]
    assert W.restrict_path(path, F23) == [v("0/0/0")]


@settings(max_examples=60)
@given(seed=st.integers(0, 2**32 - 1), target=st.sampled_from([T2, F23]))
def test_restriction_is_nearest_neighbor(seed, target):
    rng = np.random.default_rng(seed)
    path = W.sample_walk(W.StepKernel.SIMPLE, H2, ROOT, 40, rng)
    out = W.restrict_path(path, target)
    assert all(contains(target, x) for x in out)
    assert all(are_neighbors(a, b) for a, b in zip(out, out[1:]))


# ---------------------------------------------------------------- composition


class ZeroGeo:
    """Generator stand-in whose geometric draws are always 1 (zero failures)."""

    def __init__(self, seed):
        self._rng = np.random.default_rng(seed)

    def geometric(self, p):
        return 1

    def __getattr__(self, name):
        return getattr(self._rng, name)


def test_zero_geometric_draws_leave_spine_unchanged():
    spine = [ROOT, v("0"), v("0/1"), v("0/1/0")]
    out = W.compose_srw(spine, T2, ZeroGeo(0))
    assert list(out.walk) == spine
    assert out.insertions == (0, 0, 0)


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), tree=st.sampled_from([T2, H2, F23]))
def test_composed_walk_is_nearest_neighbor_and_contains_spine(seed, tree):
    rng = np.random.default_rng(seed)
    spine = W.sample_walk(W.spine_kernel(tree), tree, ROOT, 8, rng)
    out = W.compose_srw(spine, tree, rng)
    walk = list(out.walk)
    assert all(are_neighbors(a, b) for a, b in zip(walk, walk[1:]))
    assert all(contains(tree, x) for x in walk)
    assert len(walk) == len(spine) + sum(out.insertions)
    times = W.dilate_times(range(len(spine)), out.insertions)
    assert [walk[t] for t in times] == spine


def test_compose_rejects_broken_spine():
    with pytest.raises(ValueError):
        W.compose_srw([ROOT, v("0/0")], T2, np.random.default_rng(0))


def test_first_gap_excursion_count_is_geometric():
    # on the homogeneous tree every first-gap excursion has even length >= 2;
    # P[ell_0 = 0] is the chance of zero excursions
    rng = np.random.default_rng(10)
    spine = [ROOT, v("0"), v("0/0")]
    ell = W.insertion_samples(H2, spine, 200_000, rng)
    p0 = np.mean(ell[:, 0] == 0)
    assert abs(p0 - 0.5) < 4 * math.sqrt(0.25 / 200_000)
    p_mid = np.mean(ell[:, 1] == 0)
    assert abs(p_mid - 2 / 3) < 4 * math.sqrt(2 / 9 / 200_000)


def test_insertions_uncorrelated_across_indices():
    rng = np.random.default_rng(11)
    spine = [ROOT, v("0"), v("0/0"), v("0/0/1"), v("0/0/1/1")]
    ell = W.insertion_samples(T2, spine, 100_000, rng).astype(float)
    corr = np.corrcoef(ell.T)
    off = corr[~np.eye(len(corr), dtype=bool)]
    assert np.max(np.abs(off)) < 3 / math.sqrt(len(ell))


def test_dilation_tail():
    rng = np.random.default_rng(12)
    spine = [ROOT, v("0"), v("0/1"), v("0/1/0")]
    ell = W.insertion_samples(T2, spine, 100_000, rng)[:, 1:].ravel()
    for t in range(0, 60, 2):
        assert np.mean(ell >= t + 2) <= W.dilation_tail_bound(t)


@pytest.mark.parametrize(
    "tree,start",
    [(H2, ROOT), (T2, ROOT), (T2, v("0")), (F23, ROOT), (F23, v("0/1"))],
    ids=["hom", "T2-root", "T2-child", "T2^3-root", "T2^3-deep"],
)
def test_composed_four_step_law_matches_exact(tree, start):
    rng = np.random.default_rng(13)
    n = 200_000
    codes, _ = W.composed_path_codes(tree, start, 4, n, rng)
    exact = W.srw_path_law(tree, start, 4)
    emp = W.empirical_law(codes)
    assert set(emp) <= set(exact)
    worst = max(abs(emp.get(c, 0.0) - p) / math.sqrt(p * (1 - p) / n) for c, p in exact.items())
    assert worst < 5.0


def test_homogeneous_four_step_law_is_uniform():
    law = W.srw_path_law(H2, ROOT, 4)
    assert len(law) == 81
    assert all(math.isclose(p, 1 / 81) for p in law.values())


def test_object_and_batch_composition_agree():
    # the reference implementation and the compiled kernel give the same path law
    rng = np.random.default_rng(14)
    n = 20_000
    obj = []
    for _ in range(n):
        spine = W.sample_walk(W.StepKernel.ROOT_BIASED_NB, T2, ROOT, 4, rng)
        walk = W.compose_srw(spine, T2, rng).walk
        obj.append(W.path_code(T2, walk[:3]))
    exact = W.srw_path_law(T2, ROOT, 2)
    emp = W.empirical_law(np.array(obj))
    assert W.tv_distance(emp, exact) < 0.02


# --------------------------------------------------------------- dilate_times


def test_dilate_identity():
    assert W.dilate_times([0, 1, 2, 3], [0, 0, 0]) == [0, 1, 2, 3]


def test_dilate_prefix_sums():
    assert W.dilate_times([0, 1, 2, 3], [2, 0, 4]) == [0, 3, 4, 9]


def test_dilate_rejects_negative():
    with pytest.raises(ValueError):
        W.dilate_times([0, 1], [-1])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=20))
def test_dilate_monotone(ell):
    out = W.dilate_times(range(len(ell) + 1), ell)
    assert all(b > a for a, b in zip(out, out[1:]))


# ------------------------------------------------------------------ J-law


def test_j_law_backtrack_path():
    # root -> child -> root, k = 0
    assert math.isclose(W.j_law_probability(2, 2, 0, 0), 1 / 9)
    assert W.j_law_probability(2, 2, 0, 1) == 0.0


def test_j_law_one_step():
    p0 = W.j_law_probability(2, 1, 1, 0)
    p1 = W.j_law_probability(2, 1, 1, 1)
    assert math.isclose(p0, 1 / 6)
    assert math.isclose(p1, 1 / 6)
    assert math.isclose(p0 + p1, 1 / 3)


@pytest.mark.parametrize("d", [2, 3, 5])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_j_law_sums_to_uniform_path_probability(d, n):
    for k in range(n % 2, n + 1, 2):
        total = sum(W.j_law_probability(d, n, k, j) for j in range(k + 1))
        assert math.isclose(total, (d + 1) ** (-n))


def test_j_law_check_small():
    rep = W.spine_and_J_law_check(2, 3, 200_000, np.random.default_rng(15))
    assert rep.max_se_deviation < 5.0
    assert rep.path_law_tv < 0.01
    assert set(rep.to_dict()) >= {"path_law_tv", "max_se_deviation", "samples"}


def test_j_law_check_refuses_large_n():
    with pytest.raises(ValueError):
        W.spine_and_J_law_check(2, 6, 10, np.random.default_rng(0))


# ------------------------------------------------------------------ path codes


def test_path_code_round_trip():
    path = [ROOT, v("1"), v("1/0"), v("1"), ROOT]
    code = W.path_code(T2, path)
    assert W.decode_path(T2, ROOT, code, 4) == path


def test_all_paths_count():
    assert len(list(W.all_paths(H2, ROOT, 3))) == 27
    # rooted: root has 2 neighbors, others 3
    assert len(list(W.all_paths(T2, ROOT, 2))) == 2 * 3
