from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmat.core_graph import RandomGraph, sample_gnp, sample_pruned, trim_high_degree
from graphmat.errors import DomainError, ShapeError, UnsupportedSizeError
from graphmat.graph_matrix import (block_norm, dense_operator, dump_csv, entry_bruteforce,
                                   line_operator, materialize)
from graphmat.shape import (line_shape, shape_corpus, transpose, trivial_shape, validate_shape,
                            z_shape)


def graph(n, edges, p, d=None, c=10.0):
    return trim_high_degree(RandomGraph.from_edges(n, edges, p), c, d if d is not None else max(p * n, 1))


def test_entry_line_examples():
    g = graph(3, [(1, 2)], 0.3)
    assert entry_bruteforce(line_shape(), g, (1,), (2,)) == pytest.approx(math.sqrt(0.7 / 0.3), rel=1e-15)
    assert entry_bruteforce(line_shape(), g, (1,), (1,)) == 0.0


def test_entry_edgeless_shape_counts_extensions():
    s = validate_shape({"vertices": 2, "edges": [], "u": [1], "v": [2]})
    g = graph(5, [(1, 2)], 0.3)
    assert entry_bruteforce(s, g, (1,), (4,)) == 1.0
    s3 = validate_shape({"vertices": 3, "edges": [], "u": [1], "v": [2]})
    assert entry_bruteforce(s3, g, (1,), (4,)) == 3.0


def test_entry_errors():
    g = graph(4, [], 0.5)
    with pytest.raises(ShapeError):
        entry_bruteforce(z_shape(), g, (1,), (2, 3))
    star = [(1, j) for j in range(2, 62)]
    h = trim_high_degree(RandomGraph.from_edges(61, star, 5 / 61), 10, 5)
    with pytest.raises(DomainError):
        entry_bruteforce(line_shape(), h, (1,), (2,))


def test_materialize_line_no_edges():
    g = graph(3, [], 0.5)
    M = materialize(line_shape(), g).matrix
    assert np.array_equal(M, -(np.ones((3, 3)) - np.eye(3)))


def test_materialize_z_matches_oracle():
    g = sample_pruned(5, 2, 4)
    op = materialize(z_shape(), g)
    for i, r in enumerate(op.rows):
        for j, c in enumerate(op.cols):
            assert abs(op.matrix[i, j] - entry_bruteforce(z_shape(), g, r, c)) <= 1e-12


def test_materialize_boundary_larger_than_n():
    s = validate_shape({"vertices": 3, "edges": [[1, 2]], "u": [1, 2, 3], "v": [1]})
    g = graph(2, [(1, 2)], 0.5)
    assert materialize(s, g).matrix.shape == (0, 2)


def test_materialize_budget():
    g = sample_pruned(200, 5, 0)
    with pytest.raises(UnsupportedSizeError):
        materialize(z_shape(), g)


@given(st.integers(0, 10**6), st.sampled_from(range(len(shape_corpus(4)))))
@settings(max_examples=40, deadline=None)
def test_transpose_duality(seed, idx):
    s = shape_corpus(4)[idx]
    g = sample_pruned(6, 2.5, seed)
    assert np.array_equal(materialize(transpose(s), g).matrix, materialize(s, g).matrix.T)


def test_diagonal_shapes_are_diagonal():
    g = sample_pruned(7, 3, 1)
    for s in shape_corpus(4):
        if s.u == s.v:
            M = materialize(s, g).matrix
            assert np.array_equal(M, np.diag(np.diag(M))), s


def test_trivial_shape_is_identity():
    g = sample_pruned(6, 2, 0)
    assert np.array_equal(materialize(trivial_shape(1), g).matrix, np.eye(6))


def test_set_mode_sums_orderings():
    g = sample_pruned(6, 2.5, 3)
    op_o = materialize(z_shape(), g)
    op_s = materialize(z_shape(), g, index_mode="set")
    ri = {r: i for i, r in enumerate(op_o.rows)}
    ci = {c: j for j, c in enumerate(op_o.cols)}
    for a, A in enumerate(op_s.rows):
        for b, B in enumerate(op_s.cols):
            want = sum(op_o.matrix[ri[r], ci[c]] for r in (A, A[::-1]) if r in ri
                       for c in (B, B[::-1]) if c in ci)
            assert op_s.matrix[a, b] == pytest.approx(want, abs=1e-12)


def test_removed_vertices_are_excluded():
    star = [(1, j) for j in range(2, 8)] + [(2, 3)]
    g = trim_high_degree(RandomGraph.from_edges(7, star, 0.3), 1.0, 4)
    assert g.removed == {1}
    op = materialize(line_shape(), g)
    assert all(1 not in r for r in op.rows)
    assert op.matrix.shape == (6, 6)


def test_line_operator_matches_dense():
    for seed in range(3):
        g = sample_pruned(60, 4, seed)
        M = materialize(line_shape(), g).matrix
        op = line_operator(g)
        for j in range(g.n):
            e = np.zeros(g.n)
            e[j] = 1
            assert np.max(np.abs(op.apply(e) - M[:, j])) <= 1e-10


def test_line_operator_all_ones_edgeless():
    g = graph(9, [], 0.2)
    op = line_operator(g)
    b = g.chi.chi_absent
    assert np.allclose(op.apply(np.ones(9)), b * 8 * np.ones(9), rtol=1e-14)


def test_line_operator_zero_on_removed():
    star = [(1, j) for j in range(2, 62)]
    g = trim_high_degree(RandomGraph.from_edges(61, star, 5 / 61), 10, 5)
    y = line_operator(g).apply(np.ones(61))
    assert y[0] == 0.0
    x = np.zeros(61)
    x[0] = 1.0
    assert not line_operator(g).apply(x).any()


def test_dense_operator():
    op = dense_operator(np.eye(3))
    assert np.array_equal(op.apply(np.array([1.0, 0, 0])), [1.0, 0, 0])
    m = np.arange(6.0).reshape(2, 3)
    x = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(dense_operator(m).apply(x), m @ x)
    empty = dense_operator(np.zeros((0, 0)))
    assert empty.apply(np.zeros(0)).shape == (0,)


def test_block_norm_matches_dense_svd():
    g = sample_pruned(7, 3, 2)
    for s in shape_corpus(4):
        M = materialize(s, g).matrix
        want = np.linalg.norm(M, 2) if M.size else 0.0
        assert block_norm(s, g) == pytest.approx(want, rel=1e-9, abs=1e-12), s


def test_csv_dump():
    g = graph(3, [(1, 2)], 0.5)
    text = dump_csv(materialize(z_shape(), graph(4, [(1, 3)], 0.5)))
    assert text.splitlines()[0] == "row_index,col_index,value"
    assert "1-2,3-4," in text
    lines = dump_csv(materialize(line_shape(), g)).splitlines()
    assert lines[1:4] == ["1,1,0.0", "1,2,1.0", "1,3,-1.0"]


def test_power_iteration_agrees_with_svd_on_line():
    from graphmat.norm_bounds import power_iteration
    for seed in range(3):
        g = sample_pruned(200, 5, seed)
        exact = np.linalg.norm(materialize(line_shape(), g).matrix, 2)
        assert power_iteration(line_operator(g), tol=1e-12, max_iter=20000, seed=seed).value \
            == pytest.approx(exact, rel=1e-6)


def test_materialize_corpus_oracle_small():
    g = sample_gnp(6, 2, 5)
    g = trim_high_degree(g, 10, 2)
    for s in shape_corpus(3):
        op = materialize(s, g)
        for i, r in enumerate(op.rows):
            for j, c in enumerate(op.cols):
                assert abs(op.matrix[i, j] - entry_bruteforce(s, g, r, c)) <= 1e-12
