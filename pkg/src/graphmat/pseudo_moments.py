"""Truncated pseudo-calibrated moments for independent set.

A ribbon on ``S`` is a vertex set ``W`` containing ``S`` plus an edge set on
``W`` such that every vertex of ``W - S`` is reachable from ``S`` and has
degree at least two.  The pseudo-expectation of ``x_S`` sums

    (k/n)^{|W|} * prod_{e in E} (-sqrt(p/(1-p)) chi(e))

over ribbons with at most ``extra_vertices`` vertices outside ``S``.  Each
factor ``w(e) = -sqrt(p/(1-p)) chi(e)`` equals ``-1`` on a present edge and
``p/(1-p)`` on an absent one, so the edge choices factor per vertex:
:func:`pe_value` evaluates the sum in closed form and :func:`pe_value_ribbons`
enumerates it.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .core_graph import PrunedGraph, chi_product
from .errors import DomainError, EnumerationOverflowError, ParameterError, UnsupportedSizeError

RIBBON_CAP = 2_000_000
INDEX_CAP = 5000
EIG_CAP = 5000
MAX_EXTRA = 3


def objective_k(n: float, d: float, d_sos: int, c_eta: float = 2.0) -> float:
    """``n / (c_eta sqrt(d) d_sos^4)``."""
    if d <= 0:
        raise ParameterError("the objective formula needs d > 0; pass k explicitly")
    return n / (c_eta * math.sqrt(d) * d_sos ** 4)


@dataclass(frozen=True)
class MomentParams:
    n: int
    p: float
    d_sos: int = 2
    k: float = 0.0
    c_eta: float = 2.0
    extra_vertices: int = 2
    small_k: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.d_sos < 2 or self.d_sos % 2:
            raise ParameterError(f"d_sos must be even and at least 2, got {self.d_sos}")
        if not 0 <= self.extra_vertices <= MAX_EXTRA:
            raise ParameterError(f"extra_vertices must lie in [0, {MAX_EXTRA}]")
        if self.k < 0:
            raise ParameterError("k must be non-negative")
        if not 0 <= self.p < 1:
            raise ParameterError(f"edge probability must lie in [0, 1), got {self.p}")
        if self.c_eta <= 1:
            raise ParameterError("c_eta must exceed 1")
        object.__setattr__(self, "small_k", self.k < 1)

    @classmethod
    def for_graph(cls, g: PrunedGraph, d_sos: int = 2, c_eta: float = 2.0,
                  extra_vertices: int = 2, k: float | None = None) -> "MomentParams":
        if k is None:
            k = objective_k(g.n, g.d, d_sos, c_eta)
        params = cls(n=g.n, p=g.p, d_sos=d_sos, k=float(k), c_eta=c_eta,
                     extra_vertices=extra_vertices)
        if params.small_k:
            warnings.warn(f"objective value k={k:.3g} is below 1", RuntimeWarning, stacklevel=2)
        return params

    @property
    def ratio(self) -> float:
        return self.k / self.n

    @property
    def edge_weight(self) -> float:
        """``-sqrt(p/(1-p))``, the per-edge coefficient factor."""
        return -math.sqrt(self.p / (1.0 - self.p))


@dataclass(frozen=True)
class Ribbon:
    support: frozenset
    edge_set: frozenset
    boundary_s: frozenset


def _check_support(S, g: PrunedGraph) -> tuple:
    S = tuple(sorted(int(x) for x in S))
    if len(set(S)) != len(S):
        raise DomainError("repeated vertex in S")
    for x in S:
        g._check_vertex(x)
    return S


def _ribbon_ok(S: frozenset, X: tuple, edges: tuple) -> bool:
    if not X:
        return True
    deg = dict.fromkeys(X, 0)
    nbrs = {}
    for a, b in edges:
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
        if a in deg:
            deg[a] += 1
        if b in deg:
            deg[b] += 1
    if min(deg.values()) < 2:
        return False
    seen = set(S)
    stack = list(S)
    while stack:
        for y in nbrs.get(stack.pop(), ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return all(x in seen for x in X)


def enumerate_ribbons(S, g: PrunedGraph, params: MomentParams, cap: int = RIBBON_CAP) -> list:
    """Every ribbon on ``S`` with support in the survivors, each edge set once."""
    S = frozenset(_check_support(S, g))
    pool = [int(x) for x in g.survivors if int(x) not in S]
    in_s = list(combinations(sorted(S), 2))
    inner = [tuple(pr for i, pr in enumerate(in_s) if mask >> i & 1) for mask in range(1 << len(in_s))]
    out = []
    for size in range(params.extra_vertices + 1):
        for X in combinations(pool, size):
            W = frozenset(S.union(X))
            # pairs inside S never affect the rules, so they combine freely
            pairs = [pr for pr in combinations(sorted(W), 2) if not (pr[0] in S and pr[1] in S)]
            outer = []
            for mask in range(1 << len(pairs)):
                edges = tuple(pr for i, pr in enumerate(pairs) if mask >> i & 1)
                if _ribbon_ok(S, X, edges):
                    outer.append(edges)
            if len(out) + len(outer) * len(inner) > cap:
                raise EnumerationOverflowError(f"more than {cap} ribbons on S={sorted(S)}")
            out.extend(Ribbon(W, frozenset(a + b), S) for a in outer for b in inner)
    return out


def ribbon_coefficient(r: Ribbon, params: MomentParams) -> float:
    return params.ratio ** len(r.support) * params.edge_weight ** len(r.edge_set)


def pe_value_ribbons(S, g: PrunedGraph, params: MomentParams, cap: int = RIBBON_CAP) -> float:
    """Pseudo-expectation by explicit ribbon enumeration (slow reference)."""
    return float(sum(ribbon_coefficient(r, params) * chi_product(g, r.edge_set)
                     for r in enumerate_ribbons(S, g, params, cap)))


class _WeightModel:
    """Edge weights ``w = c (J - I) - (1 + c) A`` on the survivor set, ``c = p/(1-p)``."""

    def __init__(self, g: PrunedGraph):
        idx = g.survivors - 1
        self.A = g.adjacency[idx][:, idx].tocsr()
        self.c = g.p / (1.0 - g.p)
        self.m = idx.size
        self.pos = g.position
        self._dense = None

    def column(self, s: int) -> np.ndarray:
        a = self.A.getcol(s).toarray().ravel()
        col = np.where(a > 0, -1.0, self.c)
        col[s] = 0.0
        return col

    def quad(self, x: np.ndarray, y: np.ndarray) -> float:
        """``x^T W y``."""
        return float(self.c * (x.sum() * y.sum() - x @ y) - (1.0 + self.c) * (x @ (self.A @ y)))

    def apply(self, y: np.ndarray) -> np.ndarray:
        return self.c * (y.sum() - y) - (1.0 + self.c) * (self.A @ y)

    def apply_squared(self, y: np.ndarray) -> np.ndarray:
        """``(W o W) y``; entries of ``W o W`` are ``c^2`` off edges and 1 on edges."""
        c2 = self.c * self.c
        return c2 * (y.sum() - y) + (1.0 - c2) * (self.A @ y)

    def dense(self) -> np.ndarray:
        if self._dense is None:
            w = self.c * (1.0 - np.eye(self.m)) - (1.0 + self.c) * self.A.toarray()
            self._dense = w
        return self._dense


def _cubic_trace(W: np.ndarray, v: np.ndarray) -> float:
    """``sum_{x,y,z} v_x v_y v_z w_xy w_yz w_zx``."""
    Wd = W * v[None, :]
    return float(np.sum((Wd @ Wd) * Wd.T))


def _extra_sum(model: _WeightModel, cols: list, rest: np.ndarray, extra: int, r: float) -> float:
    """Contribution of ribbons with 1..extra vertices outside ``S``, divided by the ``S`` part."""
    if extra == 0 or not cols:
        return 0.0
    P = np.ones(model.m)
    D1 = np.zeros(model.m)
    for col in cols:
        P *= 1.0 + col
        D1 += col
    Q = (P - 1.0) * rest
    D2 = (P - 1.0 - D1) * rest
    P = P * rest
    T = D2.sum()
    total = r * T
    if extra >= 2:
        sq = (D2 * D2).sum()
        qwq = model.quad(Q, Q)
        total += r * r * (0.5 * (T * T - sq) + 0.5 * qwq)
    if extra >= 3:
        cube = (D2 ** 3).sum()
        e3 = (T ** 3 - 3 * T * sq + 2 * cube) / 6.0
        edge_iso = T * 0.5 * qwq - model.quad(Q * D2, Q)
        WQ = model.apply(Q)
        paths = 0.5 * float(P @ (WQ * WQ - model.apply_squared(Q * Q)))
        W = model.dense()
        tri = (_cubic_trace(W, P) - _cubic_trace(W, rest)) / 6.0
        total += r ** 3 * (e3 + edge_iso + paths + tri)
    return float(total)


class MomentEvaluator:
    """Closed-form pseudo-expectation on one pruned graph; caches the weight model."""

    def __init__(self, g: PrunedGraph, params: MomentParams):
        self.g = g
        self.params = params
        self.model = _WeightModel(g)

    def __call__(self, S) -> float:
        S = _check_support(S, self.g)
        if len(S) > self.params.d_sos:
            raise ParameterError(f"|S|={len(S)} exceeds d_sos={self.params.d_sos}")
        model, r = self.model, self.params.ratio
        pos = [int(model.pos[x - 1]) for x in S]
        cols = [model.column(s) for s in pos]
        inside = 1.0
        for i, j in combinations(range(len(pos)), 2):
            inside *= 1.0 + cols[i][pos[j]]
        if inside == 0.0:
            return 0.0
        rest = np.ones(model.m)
        rest[pos] = 0.0
        extra = _extra_sum(model, cols, rest, self.params.extra_vertices, r)
        return r ** len(S) * inside * (1.0 + extra)


def pe_value(S, g: PrunedGraph, params: MomentParams) -> float:
    """Pseudo-expectation of ``x_S`` on the pruned graph (closed form)."""
    return MomentEvaluator(g, params)(S)


def glue(pe_trimmed: Callable, removed) -> Callable:
    """Extend an evaluator on the pruned graph by 0 on sets meeting ``removed``."""
    removed = frozenset(int(x) for x in removed)

    def pe_full(S) -> float:
        S = frozenset(int(x) for x in S)
        if S & removed:
            return 0.0
        return pe_trimmed(S)

    return pe_full


# ------------------------------------------------------------ moment matrix

@dataclass(frozen=True, eq=False)
class MomentMatrix:
    index: list
    unscaled: np.ndarray
    rescaled: np.ndarray
    params: MomentParams
    graph: PrunedGraph


@dataclass(frozen=True)
class ConstraintReport:
    normalization: float
    independent_set: float
    symmetry: float

    def to_dict(self) -> dict:
        return {"normalization": self.normalization, "independent_set": self.independent_set,
                "symmetry": self.symmetry}


def moment_index(g: PrunedGraph, d_sos: int) -> list:
    ids = g.survivors.tolist()
    return [tuple(c) for size in range(d_sos // 2 + 1) for c in combinations(ids, size)]


def assemble_moment_matrix(g: PrunedGraph, params: MomentParams, cap: int = INDEX_CAP,
                           evaluator: Callable | None = None) -> MomentMatrix:
    """``Lambda[A, B] = pE[x_{A u B}]`` over subsets of size at most ``d_sos/2``."""
    half = params.d_sos // 2
    m = g.n_surviving
    dim = sum(math.comb(m, j) for j in range(half + 1))
    if dim > cap:
        raise UnsupportedSizeError(f"moment index has {dim} entries; cap is {cap}")
    index = moment_index(g, params.d_sos)
    pe = evaluator or MomentEvaluator(g, params)
    cache = {}
    L = np.empty((dim, dim))
    for i, A in enumerate(index):
        for j in range(i, dim):
            key = frozenset(A).union(index[j])
            val = cache.get(key)
            if val is None:
                val = cache[key] = float(pe(key))
            L[i, j] = L[j, i] = val
    scale = (1.0 / params.ratio) ** (0.5 * np.array([len(A) for A in index])) if params.k > 0 \
        else np.where(np.array([len(A) for A in index]) == 0, 1.0, np.inf)
    with np.errstate(invalid="ignore"):
        R = L * scale[:, None] * scale[None, :]
    return MomentMatrix(index=index, unscaled=L, rescaled=R, params=params, graph=g)


def check_constraints(m: MomentMatrix, g: PrunedGraph | None = None) -> ConstraintReport:
    g = g if g is not None else m.graph
    L = m.unscaled
    edges = g.edge_set
    groups = {}
    worst_is = 0.0
    for i, A in enumerate(m.index):
        for j, B in enumerate(m.index):
            key = tuple(sorted(set(A).union(B)))
            v = L[i, j]
            lo, hi = groups.get(key, (v, v))
            groups[key] = (min(lo, v), max(hi, v))
    for key, (lo, hi) in groups.items():
        if any(pr in edges for pr in combinations(key, 2)):
            worst_is = max(worst_is, abs(lo), abs(hi))
    sym = max((hi - lo for lo, hi in groups.values()), default=0.0)
    return ConstraintReport(normalization=abs(L[0, 0] - 1.0) if L.size else 0.0,
                            independent_set=worst_is, symmetry=sym)


def objective_value(m: MomentMatrix) -> float:
    if m.params.d_sos < 2:
        raise ParameterError("objective needs d_sos >= 2")
    return float(sum(m.unscaled[i, 0] for i, A in enumerate(m.index) if len(A) == 1))


def min_eigenvalue(m, which: str = "unscaled", cap: int = EIG_CAP) -> float:
    if isinstance(m, MomentMatrix):
        if which not in ("unscaled", "rescaled"):
            raise ValueError("which must be 'unscaled' or 'rescaled'")
        m = m.unscaled if which == "unscaled" else m.rescaled
    m = np.asarray(m, dtype=float)
    if m.shape[0] > cap:
        raise UnsupportedSizeError(f"dimension {m.shape[0]} exceeds eigensolve cap {cap}")
    if m.size == 0:
        return math.inf
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


def independent_indices(m: MomentMatrix) -> list:
    edges = m.graph.edge_set
    return [i for i, A in enumerate(m.index)
            if not any(pr in edges for pr in combinations(A, 2))]


def identity_deviation(m: MomentMatrix) -> float:
    """Spectral norm of ``rescaled - Pi`` on indices that are independent sets.

    ``Pi`` is the 0/1 independent-set indicator, which is the identity on
    these indices.
    """
    idx = independent_indices(m)
    sub = m.rescaled[np.ix_(idx, idx)] - np.eye(len(idx))
    return float(np.linalg.norm(sub, 2)) if idx else 0.0


def moment_dump(m: MomentMatrix, constraints: ConstraintReport | None = None) -> dict:
    constraints = constraints or check_constraints(m)
    return {
        "d_sos": m.params.d_sos,
        "k": m.params.k,
        "extra_vertices": m.params.extra_vertices,
        "index": [list(A) for A in m.index],
        "unscaled": m.unscaled.tolist(),
        "rescaled": m.rescaled.tolist(),
        "min_eig": {"unscaled": min_eigenvalue(m, "unscaled"),
                    "rescaled": min_eigenvalue(m, "rescaled")},
        "constraints": constraints.to_dict(),
    }


def moment_json(m: MomentMatrix) -> str:
    return json.dumps(moment_dump(m))
