import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from treeclust.tree import (SupportTreeSpec, TAMatrix, Tree, TreeError, build_support_spec, parent_index,
                            row_uniform, to_ta_matrix, unvectorize, vectorize)

from conftest import random_tree


def enumerate_level_order(m, d, trunk):
    """Independent index oracle: label nodes of an explicit nested tree level by level."""
    levels = [[()]] if trunk else [[(j,) for j in range(m)]]
    for _ in range(d if trunk else d - 1):
        levels.append([path + (j,) for path in levels[-1] for j in range(m)])
    index = {}
    for lvl in levels:
        for path in lvl:
            index[path] = len(index) + 1
    return index


@pytest.mark.parametrize("m,d,trunk,p", [(2, 3, True, 15), (2, 1, False, 2), (3, 2, True, 13), (2, 2, False, 6)])
def test_branch_count(m, d, trunk, p):
    spec = build_support_spec(m, d, trunk)
    assert spec.p == p
    assert len(enumerate_level_order(m, d, trunk)) == p


def test_children_of_branch_two_ternary():
    spec = build_support_spec(3, 2, True)
    assert spec.children(2) == [5, 6, 7]
    oracle = enumerate_level_order(3, 2, True)
    assert sorted(oracle[(0, j)] for j in range(3)) == [5, 6, 7]


@pytest.mark.parametrize("order,depth", [(1, 3), (2, 0), (0, 0)])
def test_rejects_bad_spec(order, depth):
    with pytest.raises(TreeError):
        build_support_spec(order, depth)


def test_parent_index_examples():
    s2 = build_support_spec(2, 3)
    assert parent_index(s2, 4) == 2
    assert parent_index(s2, 1) is None
    assert parent_index(build_support_spec(3, 2), 9) == 3
    with pytest.raises(TreeError):
        parent_index(s2, 16)
    with pytest.raises(TreeError):
        parent_index(s2, 0)


@pytest.mark.parametrize("m,d,trunk", [(2, 4, True), (3, 3, True), (4, 2, True), (2, 3, False), (3, 3, False)])
def test_index_arithmetic_matches_enumeration(m, d, trunk):
    spec = build_support_spec(m, d, trunk)
    oracle = enumerate_level_order(m, d, trunk)
    for path, idx in oracle.items():
        kids = [oracle[path + (j,)] for j in range(m) if path + (j,) in oracle]
        assert spec.children(idx) == kids
        for j, k in enumerate(kids, start=1):
            assert spec.child(idx, j) == k
            assert parent_index(spec, k) == idx
        assert spec.level(idx) == len(path)
    assert sorted(spec.iter_level_order()) == list(range(1, spec.p + 1))
    assert list(spec.iter_level_order()) == sorted(oracle.values())


def test_single_left_branch():
    spec = build_support_spec(2, 1, False)
    ta = to_ta_matrix(Tree("t", {1: (1.0,)}), spec)
    assert ta.entries.tolist() == [[1.0], [0.0]]


def test_degenerate_topology_vector():
    spec = build_support_spec(2, 2, False)
    ta = to_ta_matrix(Tree("t", {1: 1, 3: 1, 4: 1}), spec)
    assert vectorize(ta).tolist() == [1, 0, 1, 1, 0, 0]


def test_saturated_tree_all_ones():
    spec = build_support_spec(3, 2)
    ta = to_ta_matrix(Tree("t", {i: (1.0, 1.0) for i in range(1, spec.p + 1)}), spec)
    assert np.array_equal(ta.entries, np.ones((13, 2)))
    assert ta.is_positive_uniform()


def test_to_ta_matrix_errors():
    spec = build_support_spec(2, 2)
    with pytest.raises(TreeError):
        to_ta_matrix(Tree("t", {1: 1, 8: 1}), spec)
    with pytest.raises(TreeError, match="disconnected"):
        to_ta_matrix(Tree("t", {1: 1, 4: 1}), spec)
    with pytest.raises(TreeError, match="nonpositive"):
        Tree("t", {1: (1.0, 0.0)})
    with pytest.raises(TreeError):
        Tree("t", {})
    with pytest.raises(TreeError):
        Tree("t", {1: (1.0, 2.0), 2: (1.0,)})


def test_vectorize_column_major():
    a, b, c, d = 1.0, 2.0, 3.0, 4.0
    assert vectorize(np.array([[a, b], [c, d]])).tolist() == [a, c, b, d]
    assert unvectorize([a, c, b, d], 2, 2).tolist() == [[a, b], [c, d]]
    assert not vectorize(np.zeros((3, 2))).any()
    assert not unvectorize(np.zeros(6), 3, 2).any()
    with pytest.raises(TreeError):
        unvectorize([1, 2, 3], 2, 2)


def test_roundtrip_random_ta_matrices(rng):
    for m, d in [(2, 3), (3, 2), (2, 4)]:
        spec = build_support_spec(m, d)
        for k in range(100 // 3 + 1):
            q = 1 + k % 3
            ta = to_ta_matrix(random_tree(rng, spec, q), spec)
            assert ta.is_positive_uniform()
            v = vectorize(ta)
            assert np.array_equal(unvectorize(v, spec.p, q), ta.entries)
            assert np.array_equal(vectorize(unvectorize(v, spec.p, q)), v)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)),
              elements=st.floats(0, 1e6, allow_nan=False)))
def test_vectorize_unvectorize_identity(a):
    p, q = a.shape
    assert np.array_equal(unvectorize(vectorize(a), p, q), a)


def test_row_uniform():
    a = np.array([[1, 2], [0, 0], [0, 3]])
    assert row_uniform(a).tolist() == [True, True, False]


def test_ta_matrix_shape_checked():
    with pytest.raises(TreeError):
        TAMatrix(SupportTreeSpec(2, 2), np.zeros((3, 1)))
