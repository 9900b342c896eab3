import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from froglab.tree import (
    ROOT,
    AddressingError,
    TreeKind,
    VertexRef,
    are_neighbors,
    children,
    decode,
    encode,
    from_heap_index,
    from_string,
    heap_index,
    navigate,
    neighbors,
    parent,
    to_string,
)

TREES = [TreeKind.rooted(2), TreeKind.rooted(3), TreeKind.finite(2, 3), TreeKind.finite(4, 2), TreeKind.homogeneous(2), TreeKind.homogeneous(3)]


@st.composite
def vertex_in(draw, tree):
    depth_cap = tree.n if tree.is_finite else 12
    path = tuple(draw(st.lists(st.integers(0, tree.d - 1), max_size=depth_cap)))
    up = draw(st.integers(0, 5)) if tree.is_homogeneous else 0
    if up and path and path[0] == 0:
        path = (1,) + path[1:]
    return VertexRef(path, up)


@st.composite
def tree_and_vertex(draw):
    tree = draw(st.sampled_from(TREES))
    return tree, draw(vertex_in(tree))


def expected_degree(tree, v):
    if tree.is_homogeneous:
        return tree.d + 1
    if v == ROOT:
        return tree.d
    if tree.is_finite and v.depth == tree.n:
        return 1
    return tree.d + 1


def test_root_of_rooted_tree():
    nb = navigate(TreeKind.rooted(2), ROOT)
    assert nb.parent is None
    assert nb.level == 0
    assert nb.neighbors == [VertexRef((0,)), VertexRef((1,))]
    assert not nb.is_leaf


def test_leaf_of_finite_tree():
    v = VertexRef((0, 1, 1))
    nb = navigate(TreeKind.finite(2, 3), v)
    assert nb.is_leaf
    assert nb.neighbors == [VertexRef((0, 1))]
    assert nb.children == []


def test_homogeneous_vertices_have_d_plus_one_neighbors():
    tree = TreeKind.homogeneous(2)
    for v in [ROOT, VertexRef((1,)), VertexRef((), 3), VertexRef((1, 0), 2)]:
        assert len(neighbors(tree, v)) == 3


def test_homogeneous_above_root_child_zero_is_descendant_of_next_ancestor():
    a = VertexRef((), 2)
    assert a.child(0) == VertexRef((), 1)
    assert a.child(1) == VertexRef((1,), 2)
    assert parent(TreeKind.homogeneous(2), VertexRef((), 1)) == a


@pytest.mark.parametrize(
    "tree, v",
    [
        (TreeKind.finite(2, 3), VertexRef((0, 0, 0, 0))),
        (TreeKind.rooted(2), VertexRef((2,))),
        (TreeKind.rooted(2), VertexRef((), 1)),
        (TreeKind.homogeneous(2), VertexRef((0,), 1)),
    ],
)
def test_invalid_vertices_raise(tree, v):
    with pytest.raises(AddressingError):
        navigate(tree, v)


def test_tree_kind_validation():
    with pytest.raises(ValueError):
        TreeKind.rooted(1)
    with pytest.raises(ValueError):
        TreeKind.finite(2, 0)


@given(tree_and_vertex())
def test_degree_counts(tv):
    tree, v = tv
    nb = navigate(tree, v)
    assert len(nb.neighbors) == expected_degree(tree, v)
    assert len(set(nb.neighbors)) == len(nb.neighbors)


@given(tree_and_vertex())
def test_parent_child_consistency(tv):
    tree, v = tv
    for c in children(tree, v):
        assert parent(tree, c) == v
        assert are_neighbors(c, v)


@given(tree_and_vertex())
def test_neighbors_are_symmetric(tv):
    tree, v = tv
    for w in neighbors(tree, v):
        assert v in neighbors(tree, w)


@given(tree_and_vertex())
def test_encode_roundtrip(tv):
    _, v = tv
    assert decode(encode(v)) == v


@given(st.lists(st.integers(0, 300), max_size=60), st.integers(0, 50))
def test_encode_roundtrip_beyond_packing_limit(path, up):
    v = VertexRef(tuple(path), up)
    assert decode(encode(v)) == v


def test_root_key_and_variable_length_fallback():
    assert encode(ROOT) == 0
    deep = VertexRef((1,) * 41)
    key = encode(deep)
    assert isinstance(key, bytes)
    assert decode(key) == deep
    assert isinstance(encode(VertexRef((255,))), bytes)


def test_keys_are_distinct_on_a_million_random_vertices():
    rng = np.random.default_rng(7)
    depths = rng.integers(0, 41, 10**6)
    digits = rng.integers(0, 2, (10**6, 40))
    verts = {VertexRef(tuple(int(x) for x in digits[i, : depths[i]])) for i in range(10**6)}
    keys = {encode(v) for v in verts}
    assert len(keys) == len(verts)


@given(tree_and_vertex())
def test_string_roundtrip(tv):
    _, v = tv
    assert from_string(to_string(v)) == v


@given(st.integers(2, 5), st.lists(st.integers(0, 4), max_size=15))
def test_heap_index_roundtrip(d, path):
    v = VertexRef(tuple(i % d for i in path))
    assert from_heap_index(heap_index(v, d), d) == v


def test_heap_index_is_level_order():
    d = 3
    seen = [from_heap_index(h, d) for h in range(1 + 3 + 9)]
    assert seen[0] == ROOT
    assert [v.depth for v in seen] == [0] + [1] * 3 + [2] * 9
