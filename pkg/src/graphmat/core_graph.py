"""Sparse random graphs, degree trimming and p-biased characters.

Vertices are 1-based throughout the public API.  Edge presence in
:func:`sample_gnp` is a pure function of ``(seed, i, j)``: row ``i`` draws its
uniforms from a Philox stream whose counter is keyed by ``i``, so the j-th pair
of a row never depends on how other rows were generated.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ParameterError

DEFAULT_C_DEGREE = 10.0


@dataclass(frozen=True)
class CharacterParams:
    """Values of the p-biased Fourier character on present/absent edges."""

    p: float
    chi_present: float
    chi_absent: float

    @classmethod
    def from_p(cls, p: float) -> "CharacterParams":
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"edge probability must lie in [0, 1], got {p}")
        present = math.inf if p == 0.0 else math.sqrt((1.0 - p) / p)
        absent = -math.inf if p == 1.0 else -math.sqrt(p / (1.0 - p))
        return cls(p=p, chi_present=present, chi_absent=absent)


def _normalize_edges(n: int, edges: Iterable) -> np.ndarray:
    pairs = []
    for e in edges:
        i, j = (int(x) for x in e)
        if i == j:
            raise DomainError(f"self-loop at vertex {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise DomainError(f"edge {(i, j)} has an endpoint outside [1, {n}]")
        pairs.append((min(i, j), max(i, j)))
    if len(set(pairs)) != len(pairs):
        raise DomainError("duplicate edge in edge list")
    arr = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RandomGraph:
    """An undirected simple graph on ``[1, n]`` with its sampling parameters.

    ``edges`` is a read-only ``(m, 2)`` array of 1-based pairs with ``i < j``,
    sorted lexicographically.
    """

    n: int
    edges: np.ndarray
    p: float
    seed: int | None = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, p: float, seed: int | None = None) -> "RandomGraph":
        if n < 0:
            raise ParameterError("n must be non-negative")
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"edge probability must lie in [0, 1], got {p}")
        return cls(n=n, edges=_normalize_edges(n, edges), p=float(p), seed=seed)

    @property
    def d(self) -> float:
        return self.p * self.n

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    @cached_property
    def degrees(self) -> np.ndarray:
        """Degree of each vertex, indexed by ``id - 1``."""
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0] - 1, 1)
        np.add.at(deg, self.edges[:, 1] - 1, 1)
        return deg

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "seed": self.seed,
                "edges": self.edges.tolist(), "removed": []}


def sample_gnp(n: int, d: float, seed: int) -> RandomGraph:
    """Sample ``G(n, d/n)``.

    Each pair ``i < j`` is present when the ``(j - i - 1)``-th uniform of the
    Philox stream keyed by ``seed`` with counter word ``i`` falls below ``d/n``.
    """
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    if d < 0 or d > n:
        raise ParameterError(f"average degree must lie in [0, n], got d={d}, n={n}")
    if seed < 0:
        raise ParameterError("seed must be non-negative")
    p = d / n
    rows = []
    if p > 0:
        for i in range(n - 1):
            gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, i, 0, 0]))
            u = gen.random(n - 1 - i)
            js = np.flatnonzero(u < p) + i + 2
            if js.size:
                rows.append(np.column_stack([np.full(js.size, i + 1), js]))
    edges = np.concatenate(rows).astype(np.int64) if rows else np.zeros((0, 2), dtype=np.int64)
    edges.setflags(write=False)
    return RandomGraph(n=n, edges=edges, p=p, seed=seed)


@dataclass(frozen=True, eq=False)
class PrunedGraph:
    """A graph with its ultra-high-degree vertices removed.

    ``removed`` holds 1-based ids whose degree in ``base`` is at least
    ``c_degree * d``.  Every accessor below refers to the surviving graph.
    """

    base: RandomGraph
    removed: frozenset
    c_degree: float
    d: float
    chi: CharacterParams = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "chi", CharacterParams.from_p(self.base.p))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def p(self) -> float:
        return self.base.p

    @cached_property
    def survivors(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        if self.removed:
            mask[np.fromiter(self.removed, dtype=np.int64) - 1] = False
        out = np.flatnonzero(mask) + 1
        out.setflags(write=False)
        return out

    @property
    def n_surviving(self) -> int:
        return int(self.survivors.size)

    @cached_property
    def position(self) -> np.ndarray:
        """Map ``id - 1`` to the survivor position, ``-1`` for removed ids."""
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[self.survivors - 1] = np.arange(self.survivors.size)
        return pos

    @cached_property
    def edges(self) -> np.ndarray:
        e = self.base.edges
        if self.removed and e.size:
            keep = (self.position[e[:, 0] - 1] >= 0) & (self.position[e[:, 1] - 1] >= 0)
            e = e[keep]
            e.setflags(write=False)
        return e

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency on all ``n`` ids (0-based); removed rows are empty."""
        e = self.edges - 1
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel().astype(np.int64)

    def survivor_adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency restricted to survivors, in survivor order."""
        idx = self.survivors - 1
        return self.adjacency[idx][:, idx].toarray()

    def chi_matrix(self) -> np.ndarray:
        """Dense character matrix on survivors with a zero diagonal."""
        a = self.survivor_adjacency()
        chi = np.where(a > 0, self.chi.chi_present, self.chi.chi_absent)
        np.fill_diagonal(chi, 0.0)
        return chi

    def _check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise DomainError(f"vertex {v} outside [1, {self.n}]")
        if v in self.removed:
            raise DomainError(f"vertex {v} was removed by trimming")

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_set

    def character(self, e) -> float:
        return character(self, e)

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "seed": self.base.seed,
                "edges": self.edges.tolist(), "removed": sorted(self.removed)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def trim_high_degree(g: RandomGraph, c_degree: float = DEFAULT_C_DEGREE, d: float | None = None) -> PrunedGraph:
    """Remove every vertex whose degree in ``g`` is at least ``c_degree * d``.

    Single pass on the original degrees; removal never cascades.
    """
    if c_degree <= 0:
        raise ParameterError("c_degree must be positive")
    if d is None:
        d = g.d
    cut = c_degree * d
    removed = frozenset((np.flatnonzero(g.degrees >= cut) + 1).tolist())
    return PrunedGraph(base=g, removed=removed, c_degree=float(c_degree), d=float(d))


def sample_pruned(n: int, d: float, seed: int, c_degree: float = DEFAULT_C_DEGREE) -> PrunedGraph:
    return trim_high_degree(sample_gnp(n, d, seed), c_degree, d)


def graph_from_dict(data: dict, c_degree: float = DEFAULT_C_DEGREE) -> PrunedGraph:
    """Inverse of :meth:`PrunedGraph.to_dict`; ``removed`` is taken verbatim."""
    base = RandomGraph.from_edges(int(data["n"]), data["edges"], float(data["p"]), data.get("seed"))
    removed = frozenset(int(v) for v in data.get("removed", []))
    return PrunedGraph(base=base, removed=removed, c_degree=c_degree, d=base.d)


def character(g: PrunedGraph, e) -> float:
    i, j = (int(x) for x in e)
    if i == j:
        raise DomainError(f"self-loop {(i, j)} has no character")
    g._check_vertex(i)
    g._check_vertex(j)
    return g.chi.chi_present if g.has_edge(i, j) else g.chi.chi_absent


def chi_product(g: PrunedGraph, edge_set: Iterable) -> float:
    out = 1.0
    for e in edge_set:
        out *= character(g, e)
    return out


def is_two_cycle_free_at(g: PrunedGraph, r: int) -> bool:
    """True iff every radius-``r`` ball of the surviving graph has at most one cycle.

    A ball is connected, so the test is ``#edges <= #vertices`` on the induced
    subgraph.
    """
    if r < 0:
        raise ParameterError("radius must be non-negative")
    adj = g.adjacency
    indptr, indices = adj.indptr, adj.indices
    nbrs = [indices[indptr[v]:indptr[v + 1]] for v in range(g.n)]
    for v in (g.survivors - 1).tolist():
        if r == 0:
            continue
        dist = {v: 0}
        queue = deque([v])
        while queue:
            x = queue.popleft()
            if dist[x] == r:
                continue
            for y in nbrs[x].tolist():
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        if len(dist) < 3:
            continue
        twice_edges = sum(1 for x in dist for y in nbrs[x].tolist() if y in dist)
        if twice_edges // 2 > len(dist):
            return False
    return True


def kappa(n: int, d: float) -> int:
    """Radius ``floor(0.3 log_d n)`` at which 2-cycle freeness is expected."""
    if d < 2:
        raise ParameterError(f"kappa needs d >= 2, got {d}")
    if n < 2:
        raise ParameterError(f"kappa needs n >= 2, got {n}")
    return int(math.floor(0.3 * math.log(n) / math.log(d) + 1e-12))
