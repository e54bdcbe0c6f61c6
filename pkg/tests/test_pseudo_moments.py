from __future__ import annotations

import json
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmat.core_graph import RandomGraph, sample_pruned, trim_high_degree
from graphmat.errors import DomainError, EnumerationOverflowError, ParameterError, UnsupportedSizeError
from graphmat.pseudo_moments import (MomentParams, Ribbon, assemble_moment_matrix,
                                     check_constraints, enumerate_ribbons, glue,
                                     identity_deviation, min_eigenvalue, moment_dump,
                                     objective_k, objective_value, pe_value, pe_value_ribbons,
                                     ribbon_coefficient)


def graph(n, edges, p, c=10.0):
    return trim_high_degree(RandomGraph.from_edges(n, edges, p), c, max(p * n, 1.0))


def params(g, extra=2, d_sos=2, k=2.0):
    return MomentParams.for_graph(g, d_sos=d_sos, extra_vertices=extra, k=k)


def test_objective_formula():
    assert objective_k(200, 10, 2, 2.0) == pytest.approx(200 / (2 * math.sqrt(10) * 16))
    with pytest.raises(ParameterError):
        objective_k(10, 0, 2)


def test_small_k_warns():
    g = sample_pruned(30, 5, 0)
    with pytest.warns(RuntimeWarning):
        p = MomentParams.for_graph(g)
    assert p.small_k


def test_params_validation():
    with pytest.raises(ParameterError):
        MomentParams(n=10, p=0.1, d_sos=3, k=1.0)
    with pytest.raises(ParameterError):
        MomentParams(n=10, p=0.1, k=1.0, extra_vertices=4)
    with pytest.raises(ParameterError):
        MomentParams(n=10, p=0.1, k=1.0, c_eta=1.0)


def test_ribbons_empty_set():
    g = graph(5, [(1, 2), (2, 3)], 0.3)
    assert enumerate_ribbons([], g, params(g, extra=3)) == [Ribbon(frozenset(), frozenset(), frozenset())]


def test_ribbons_pair_no_extra():
    g = graph(4, [], 0.3)
    rs = enumerate_ribbons([1, 2], g, params(g, extra=0))
    assert sorted(len(r.edge_set) for r in rs) == [0, 1]


def test_single_extra_vertex_is_dangling():
    g = graph(3, [(1, 2), (2, 3)], 0.3)
    rs = enumerate_ribbons([1], g, params(g, extra=1))
    assert rs == [Ribbon(frozenset({1}), frozenset(), frozenset({1}))]


def test_ribbon_rules_hold():
    g = graph(6, [(1, 2), (3, 4)], 0.3)
    for r in enumerate_ribbons([1, 5], g, params(g, extra=2)):
        extra = r.support - r.boundary_s
        deg = {x: sum(1 for e in r.edge_set if x in e) for x in extra}
        assert all(v >= 2 for v in deg.values())
        assert len(extra) <= 2


def test_ribbon_overflow():
    g = graph(8, [], 0.3)
    with pytest.raises(EnumerationOverflowError):
        enumerate_ribbons([1, 2], g, params(g, extra=2), cap=10)


def test_ribbon_coefficients():
    g = graph(4, [(1, 2)], 0.3)
    p = params(g, k=2.0)
    r = k_over_n = 2.0 / 4
    assert ribbon_coefficient(Ribbon(frozenset(), frozenset(), frozenset()), p) == 1.0
    assert ribbon_coefficient(Ribbon(frozenset({1}), frozenset(), frozenset({1})), p) == r
    one_edge = Ribbon(frozenset({1, 2}), frozenset({(1, 2)}), frozenset({1, 2}))
    assert ribbon_coefficient(one_edge, p) == pytest.approx(k_over_n ** 2 * -math.sqrt(0.3 / 0.7))


@pytest.mark.parametrize("extra", [0, 1, 2])
def test_toggle_closure(extra):
    # toggling pairs inside S maps the list to itself iff every class of ribbons that
    # agree outside pairs(S) carries all 2^C(|S|,2) choices inside
    g = sample_pruned(12, 3, 1)
    p = params(g, extra=extra, d_sos=4)
    for size in range(1, 5):
        for S in list(combinations(g.survivors.tolist(), size))[:4]:
            inside = set(combinations(S, 2))
            classes = {}
            for r in enumerate_ribbons(S, g, p):
                key = (r.support, r.edge_set - inside)
                classes.setdefault(key, set()).add(r.edge_set & inside)
            assert all(len(v) == 2 ** len(inside) for v in classes.values())


def test_pe_examples():
    g = graph(6, [(1, 2), (2, 3), (3, 4), (2, 4)], 0.3)
    p = params(g, extra=2)
    assert pe_value([], g, p) == 1.0
    assert abs(pe_value([1, 2], g, p)) <= 1e-9
    assert abs(pe_value_ribbons([1, 2], g, p)) <= 1e-9
    assert pe_value([5], g, params(g, extra=0)) == pytest.approx(2.0 / 6, rel=1e-15)


def test_pe_domain_error_on_removed():
    star = [(1, j) for j in range(2, 62)]
    g = trim_high_degree(RandomGraph.from_edges(61, star, 5 / 61), 10, 5)
    with pytest.raises(DomainError):
        pe_value([1], g, params(g))


@pytest.mark.parametrize("extra", [0, 1, 2, 3])
def test_closed_form_matches_ribbon_sum(extra):
    for seed in range(2 if extra < 3 else 1):
        g = sample_pruned(8, 3, seed)
        p = params(g, extra=extra, d_sos=6, k=2.5)
        for size in range(4):
            for S in list(combinations(g.survivors.tolist(), size))[:5]:
                want = pe_value_ribbons(S, g, p)
                assert pe_value(S, g, p) == pytest.approx(want, rel=1e-11, abs=1e-15)


@given(st.integers(0, 10**6), st.integers(0, 3))
@settings(max_examples=15, deadline=None)
def test_closed_form_matches_ribbon_sum_random(seed, extra):
    g = sample_pruned(7, 2.5, seed)
    p = params(g, extra=extra, d_sos=4, k=1.5)
    ids = g.survivors.tolist()
    S = ids[seed % len(ids): seed % len(ids) + 2]
    assert pe_value(S, g, p) == pytest.approx(pe_value_ribbons(S, g, p), rel=1e-11, abs=1e-15)


def test_pe_invariant_under_graph_automorphism():
    # a 6-cycle: rotation i -> i+1 is an automorphism
    cyc = [(i, i % 6 + 1) for i in range(1, 7)]
    g = graph(6, cyc, 0.3)
    p = params(g, extra=2, d_sos=4)
    rot = {i: i % 6 + 1 for i in range(1, 7)}
    for size in (1, 2, 3):
        for S in combinations(range(1, 7), size):
            assert pe_value(S, g, p) == pytest.approx(pe_value([rot[x] for x in S], g, p), rel=1e-12)


def test_moment_matrix_shape_and_normalization():
    g = sample_pruned(12, 3, 2)
    m = assemble_moment_matrix(g, params(g))
    assert m.unscaled.shape == (1 + g.n_surviving,) * 2
    assert m.unscaled[0, 0] == 1.0
    assert np.array_equal(m.unscaled, m.unscaled.T)


def test_edgeless_closed_form():
    g = graph(7, [], 0.0)
    k = 2.0
    p = MomentParams.for_graph(g, d_sos=4, extra_vertices=0, k=k)
    m = assemble_moment_matrix(g, p)
    for i, A in enumerate(m.index):
        for j, B in enumerate(m.index):
            assert m.unscaled[i, j] == pytest.approx((k / 7) ** len(set(A) | set(B)), rel=1e-15)
    assert min_eigenvalue(m) >= -1e-10


def test_absent_pair_entry():
    g = graph(5, [(1, 2)], 0.3)
    p = params(g, extra=0)
    m = assemble_moment_matrix(g, p)
    i, j = m.index.index((3,)), m.index.index((4,))
    assert m.unscaled[i, j] == pytest.approx((2.0 / 5) ** 2 / 0.7, rel=1e-14)


def test_rescaling():
    g = sample_pruned(10, 3, 4)
    p = params(g, extra=1, d_sos=4)
    m = assemble_moment_matrix(g, p)
    sizes = np.array([len(A) for A in m.index])
    scale = (g.n / p.k) ** (0.5 * (sizes[:, None] + sizes[None, :]))
    assert np.allclose(m.rescaled, scale * m.unscaled, rtol=1e-14, atol=0)
    # congruent matrices share PSD status
    assert (min_eigenvalue(m, "unscaled") >= -1e-12) == (min_eigenvalue(m, "rescaled") >= -1e-12)


def test_constraint_report():
    g = graph(3, [(1, 2)], 0.3)
    m = assemble_moment_matrix(g, params(g, d_sos=4))
    rep = check_constraints(m, g)
    assert rep.normalization == 0.0
    assert rep.independent_set <= 1e-9
    assert rep.symmetry <= 1e-12


def test_objective_value_without_extra():
    g = sample_pruned(15, 3, 0)
    p = params(g, extra=0)
    m = assemble_moment_matrix(g, p)
    assert objective_value(m) == pytest.approx(p.k * g.n_surviving / g.n, rel=1e-13)
    edgeless = graph(9, [], 0.0)
    m0 = assemble_moment_matrix(edgeless, MomentParams.for_graph(edgeless, extra_vertices=0, k=3.0))
    assert objective_value(m0) == pytest.approx(3.0, rel=1e-14)


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(3)) == 1.0
    assert min_eigenvalue(np.diag([2.0, -1.0])) == -1.0
    with pytest.raises(UnsupportedSizeError):
        min_eigenvalue(np.eye(5), cap=4)


def test_glue():
    g = sample_pruned(10, 3, 0)
    p = params(g)
    pe = glue(lambda S: pe_value(S, g, p), removed={9, 10})
    assert pe([]) == 1.0
    assert pe([1, 9]) == 0.0
    assert pe([2]) == pe_value([2], g, p)


def test_glued_full_graph_keeps_constraints():
    star = [(1, j) for j in range(2, 12)] + [(2, 3), (4, 5)]
    g = trim_high_degree(RandomGraph.from_edges(12, star, 0.2), 2.0, 2.4)
    assert g.removed == {1}
    p = params(g, extra=2)
    pe = glue(lambda S: pe_value(S, g, p), g.removed)
    assert pe([]) == 1.0
    assert abs(pe([2, 3])) <= 1e-9 and abs(pe([4, 5])) <= 1e-9
    assert pe([1, 6]) == 0.0


def test_index_cap():
    g = sample_pruned(30, 3, 0)
    with pytest.raises(UnsupportedSizeError):
        assemble_moment_matrix(g, params(g, d_sos=4), cap=100)


def test_identity_deviation_on_edgeless_graph():
    g = graph(8, [], 0.0)
    k = 1.0
    m = assemble_moment_matrix(g, MomentParams.for_graph(g, extra_vertices=0, k=k))
    # rescaled = [[1, r^T], [r, I + (k/n)(J - I)]] with r = sqrt(k/n) 1
    dev = identity_deviation(m)
    R = m.rescaled - np.eye(9)
    assert dev == pytest.approx(np.linalg.norm(R, 2), rel=1e-12)


def test_dump_is_json():
    g = sample_pruned(10, 3, 0)
    d = moment_dump(assemble_moment_matrix(g, params(g)))
    text = json.dumps(d)
    back = json.loads(text)
    assert set(back) == {"d_sos", "k", "extra_vertices", "index", "unscaled", "rescaled",
                         "min_eig", "constraints"}
    assert back["index"][0] == []
