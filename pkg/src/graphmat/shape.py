"""Shapes: small pattern graphs with ordered left/right boundaries.

Separator searches are exhaustive over vertex subsets.  Subsets are handled
as bitmasks over the shape's vertex positions; for shapes of at most
``_TABLE_MAX`` vertices the connected components of ``G - S`` are tabulated
once per underlying graph, which keeps corpus-wide sweeps cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import networkx as nx
import numpy as np

from .errors import UnsupportedSizeError, ValidationError

SEPARATOR_CAP = 20
AUTOMORPHISM_CAP = 12
_TABLE_MAX = 12
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Shape:
    """A shape ``(V, E, U, V)``; ``vertices`` are canonical ids ``1..k``."""

    vertices: tuple
    edges: frozenset
    u: tuple
    v: tuple
    name: str = field(default="", compare=False, hash=False)

    @property
    def k(self) -> int:
        return len(self.vertices)

    @property
    def boundary(self) -> frozenset:
        return frozenset(self.u) | frozenset(self.v)

    @property
    def shared(self) -> frozenset:
        return frozenset(self.u) & frozenset(self.v)

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def to_dict(self) -> dict:
        return {"vertices": self.k, "edges": [list(e) for e in self.sorted_edges()],
                "u": list(self.u), "v": list(self.v)}

    def __str__(self) -> str:
        label = f"{self.name}: " if self.name else ""
        return f"{label}V={self.k} E={self.sorted_edges()} U={self.u} V={self.v}"


@dataclass(frozen=True)
class SeparatorReport:
    separator: frozenset
    is_valid: bool
    smvs_weight: float
    mvs_size: int


@dataclass(frozen=True)
class StructureReport:
    floating_components: list
    dangling_branches: list
    isolated: frozenset
    is_middle: bool
    dangling: frozenset = frozenset()


def validate_shape(raw, name: str = "") -> Shape:
    """Check a raw description and return a canonical :class:`Shape`.

    ``raw`` is a mapping with ``vertices`` (a count or an id list), ``edges``,
    ``u`` and ``v``; ids are relabelled ``1..k`` in the order they are listed.
    """
    if isinstance(raw, Shape):
        raw = {"vertices": list(raw.vertices), "edges": [list(e) for e in raw.edges],
               "u": list(raw.u), "v": list(raw.v)}
        name = name or ""
    try:
        verts = raw["vertices"]
        edges = raw.get("edges", [])
        u = raw.get("u", [])
        v = raw.get("v", [])
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"shape description missing field: {exc}") from exc
    if isinstance(verts, int):
        verts = list(range(1, verts + 1))
    verts = list(verts)
    if len(set(verts)) != len(verts):
        raise ValidationError("duplicate vertex id", element=verts)
    relabel = {x: i + 1 for i, x in enumerate(verts)}
    for side, tup in (("u", u), ("v", v)):
        for x in tup:
            if x not in relabel:
                raise ValidationError(f"boundary {side} id {x!r} is not a vertex", element=x)
        if len(set(tup)) != len(tup):
            raise ValidationError(f"boundary {side} repeats an id", element=list(tup))
    seen = set()
    for e in edges:
        if len(e) != 2:
            raise ValidationError(f"edge {e!r} is not a pair", element=e)
        a, b = e
        if a not in relabel or b not in relabel:
            raise ValidationError(f"edge {e!r} references an undeclared vertex", element=e)
        if a == b:
            raise ValidationError(f"self-loop {e!r}", element=e)
        key = (min(relabel[a], relabel[b]), max(relabel[a], relabel[b]))
        if key in seen:
            raise ValidationError(f"duplicate edge {e!r}", element=e)
        seen.add(key)
    return Shape(vertices=tuple(range(1, len(verts) + 1)), edges=frozenset(seen),
                 u=tuple(relabel[x] for x in u), v=tuple(relabel[x] for x in v), name=name)


def transpose(s: Shape) -> Shape:
    return Shape(vertices=s.vertices, edges=s.edges, u=s.v, v=s.u,
                 name=f"{s.name}^T" if s.name else "")


# ---------------------------------------------------------------- named shapes

def line_shape() -> Shape:
    return validate_shape({"vertices": 2, "edges": [[1, 2]], "u": [1], "v": [2]}, "line")


def z_shape() -> Shape:
    return validate_shape({"vertices": 4, "edges": [[1, 3], [2, 3], [2, 4]],
                           "u": [1, 2], "v": [3, 4]}, "z")


def floating_triangle_shape() -> Shape:
    return validate_shape({"vertices": 4, "edges": [[2, 3], [3, 4], [2, 4]],
                           "u": [1], "v": [1]}, "floating_triangle")


def dangling_line_shape() -> Shape:
    return validate_shape({"vertices": 4, "edges": [[1, 3], [2, 3], [3, 4]],
                           "u": [1], "v": [2]}, "dangling_line")


def trivial_shape(size: int = 1) -> Shape:
    ids = list(range(1, size + 1))
    return validate_shape({"vertices": size, "edges": [], "u": ids, "v": ids}, f"trivial{size}")


NAMED_SHAPES = {
    "line": line_shape,
    "z": z_shape,
    "floating_triangle": floating_triangle_shape,
    "dangling_line": dangling_line_shape,
    "trivial": trivial_shape,
}


# ------------------------------------------------------------ bitmask helpers

def _bits(mask: int) -> tuple:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _positions(s: Shape) -> dict:
    return {x: i for i, x in enumerate(s.vertices)}


@lru_cache(maxsize=65536)
def _adjacency_from_edges(k: int, edges: frozenset) -> tuple:
    adj = [0] * k
    for a, b in edges:
        adj[a - 1] |= 1 << (b - 1)
        adj[b - 1] |= 1 << (a - 1)
    return tuple(adj)


def _adjacency_masks(s: Shape) -> tuple:
    if s.vertices == tuple(range(1, s.k + 1)):
        return _adjacency_from_edges(s.k, s.edges)
    pos = _positions(s)
    return _adjacency_from_edges(s.k, frozenset((pos[a] + 1, pos[b] + 1) for a, b in s.edges))


def _mask_of(s: Shape, ids, pos: dict | None = None) -> int:
    m = 0
    if pos is None and s.vertices == tuple(range(1, s.k + 1)):
        for x in ids:
            m |= 1 << (x - 1)
        return m
    pos = pos or _positions(s)
    for x in ids:
        m |= 1 << pos[x]
    return m


def _ids_of(s: Shape, mask: int) -> frozenset:
    return frozenset(s.vertices[i] for i in _bits(mask))


def _reach(adj: tuple, start: int, blocked: int) -> int:
    """Vertices reachable from ``start`` (a mask) avoiding ``blocked``."""
    seen = start & ~blocked
    frontier = seen
    while frontier:
        nxt = 0
        for i in _bits(frontier):
            nxt |= adj[i]
        nxt &= ~blocked & ~seen
        seen |= nxt
        frontier = nxt
    return seen


@lru_cache(maxsize=None)
def _orders(k: int) -> tuple:
    """Lexicographic rank of each subset mask, plus popcounts."""
    masks = list(range(1 << k))
    lex = sorted(masks, key=_bits)
    rank = np.empty(1 << k, dtype=np.int64)
    rank[lex] = np.arange(1 << k)
    pop = np.array([bin(m).count("1") for m in masks], dtype=np.int64)
    return rank, pop


@lru_cache(maxsize=8192)
def _component_table(k: int, adj: tuple) -> tuple:
    """``comp[S, i]`` = component mask of vertex ``i`` in ``G - S`` (0 if ``i`` in S),
    and ``esize[S]`` = number of edges with both ends in ``S``."""
    size = 1 << k
    comp = np.zeros((size, k), dtype=np.int64)
    esize = np.zeros(size, dtype=np.int64)
    edge_masks = [(1 << i) | (1 << j) for i in range(k) for j in range(i + 1, k) if adj[i] >> j & 1]
    for S in range(size):
        esize[S] = sum(1 for em in edge_masks if em & S == em)
        left = ((1 << k) - 1) & ~S
        while left:
            low = left & -left
            c = _reach(adj, low, S)
            for i in _bits(c):
                comp[S, i] = c
            left &= ~c
    comp.setflags(write=False)
    esize.setflags(write=False)
    return comp, esize


@lru_cache(maxsize=4096)
def _separator_table(s: Shape) -> tuple:
    """``(valid, esize, mvs_size, mvs_mask)`` for a small shape, cached per shape."""
    valid, esize = _separator_mask_array(s)
    rank, pop = _orders(s.k)
    size = int(pop[valid].min())
    cand = np.flatnonzero(valid & (pop == size))
    valid.setflags(write=False)
    return valid, esize, size, int(cand[np.argmin(rank[cand])])


def _separator_mask_array(s: Shape) -> tuple:
    """Boolean validity and edge counts for every subset of a small shape."""
    comp, esize = _component_table(s.k, _adjacency_masks(s))
    pos = _positions(s)
    cols = [pos[x] for x in s.u]
    if not cols:
        reach_u = np.zeros(comp.shape[0], dtype=np.int64)
    elif len(cols) == 1:
        reach_u = comp[:, cols[0]]
    else:
        reach_u = np.bitwise_or.reduce(comp[:, cols], axis=1)
    valid = (reach_u & _mask_of(s, s.v, pos)) == 0
    return valid, esize


def _check_cap(s: Shape, cap: int = SEPARATOR_CAP) -> None:
    if s.k > cap:
        raise UnsupportedSizeError(f"shape has {s.k} vertices; exhaustive search is capped at {cap}")


def is_separator(s: Shape, S) -> bool:
    """True iff every path from ``U`` to ``V`` (including length-0 paths) meets ``S``."""
    S = frozenset(S)
    if not S <= frozenset(s.vertices):
        raise ValidationError("separator candidate contains non-vertices", element=sorted(S - set(s.vertices)))
    adj = _adjacency_masks(s)
    blocked = _mask_of(s, S)
    return _reach(adj, _mask_of(s, s.u), blocked) & _mask_of(s, s.v) == 0


def _iter_small_or_large(s: Shape):
    """Yield ``(mask, valid, e_in_S)`` for all subsets in lexicographic order (large shapes)."""
    adj = _adjacency_masks(s)
    umask, vmask = _mask_of(s, s.u), _mask_of(s, s.v)
    edge_masks = [_mask_of(s, e) for e in s.edges]
    rank, _ = _orders(s.k)
    for S in np.argsort(rank).tolist():
        valid = _reach(adj, umask, S) & vmask == 0
        yield S, valid, sum(1 for em in edge_masks if em & S == em)


def min_vertex_separator(s: Shape) -> tuple:
    """Exhaustive minimum vertex separator; ties go to the lexicographically smallest set."""
    _check_cap(s)
    if s.k <= _TABLE_MAX:
        _, _, size, best = _separator_table(s)
        return size, _ids_of(s, best)
    best = None
    for S, valid, _ in _iter_small_or_large(s):
        if valid and (best is None or bin(S).count("1") < bin(best).count("1")):
            best = S
    return bin(best).count("1"), _ids_of(s, best)


def smvs_log_weight(k: int, size_s: int, edges_in_s: int, n: float, d: float) -> float:
    return 0.5 * (k - size_s) * math.log(n) + 0.5 * edges_in_s * math.log(n / d)


def sparse_mvs(s: Shape, n: float, d: float) -> SeparatorReport:
    """Separator containing ``U & V`` maximising ``sqrt(n)^{|V\\S|} (n/d)^{|E(S)|/2}``."""
    if not n > d > 1:
        from .errors import ParameterError
        raise ParameterError(f"sparse_mvs needs n > d > 1, got n={n}, d={d}")
    _check_cap(s)
    ln_n, ln_nd = math.log(n), math.log(n / d)
    if s.k <= _TABLE_MAX:
        valid, esize, mvs, _ = _separator_table(s)
        rank, pop = _orders(s.k)
        logw = 0.5 * (s.k - pop) * ln_n + 0.5 * esize * ln_nd
        top = logw[valid].max()
        cand = np.flatnonzero(valid & (logw >= top - _TIE_TOL * max(1.0, abs(top))))
        best = int(cand[np.argmin(rank[cand])])
        best_logw = float(logw[best])
    else:
        mvs, _ = min_vertex_separator(s)
        best, best_logw = None, -math.inf
        for S, valid, e in _iter_small_or_large(s):
            if not valid:
                continue
            lw = 0.5 * (s.k - bin(S).count("1")) * ln_n + 0.5 * e * ln_nd
            if lw > best_logw + _TIE_TOL * max(1.0, abs(best_logw)):
                best, best_logw = S, lw
    return SeparatorReport(separator=_ids_of(s, best), is_valid=True,
                           smvs_weight=math.exp(best_logw), mvs_size=mvs)


def separator_candidates(s: Shape):
    """All valid separators as ``(frozenset, |E(S)|)`` pairs, lexicographic order."""
    _check_cap(s)
    if s.k <= _TABLE_MAX:
        valid, esize, _, _ = _separator_table(s)
        rank, _ = _orders(s.k)
        for S in np.argsort(rank).tolist():
            if valid[S]:
                yield _ids_of(s, S), int(esize[S])
    else:
        for S, valid, e in _iter_small_or_large(s):
            if valid:
                yield _ids_of(s, S), e


# ------------------------------------------------------------------ structure

def _graph(s: Shape) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(s.vertices)
    g.add_edges_from(s.edges)
    return g


def _on_boundary_path(g: nx.Graph, s: Shape, x) -> bool:
    """Whether ``x`` lies on a vertex-simple path from ``U`` to ``V``.

    Equivalent to two paths from ``x`` meeting only at ``x``, one ending at a
    super-source joined to ``U`` and the other at a super-sink joined to ``V``.
    """
    h = g.copy()
    src, dst, hub = ("_src",), ("_dst",), ("_hub",)
    h.add_edges_from((src, a) for a in s.u)
    h.add_edges_from((dst, b) for b in s.v)
    h.add_edges_from([(src, hub), (dst, hub)])
    from networkx.algorithms.connectivity import local_node_connectivity
    return local_node_connectivity(h, x, hub) >= 2


def structure(s: Shape) -> StructureReport:
    """Floating components, dangling branches, isolated vertices and middle-ness."""
    g = _graph(s)
    bnd = s.boundary
    floating = [frozenset(c) for c in nx.connected_components(g) if not (c & bnd)]
    floating.sort(key=lambda c: min(c))
    in_float = frozenset().union(*floating) if floating else frozenset()
    dangling = frozenset(x for x in s.vertices
                         if x not in bnd and x not in in_float and not _on_boundary_path(g, s, x))
    branches = []
    claimed = set()
    for root in sorted(x for x in s.vertices if x not in dangling and x not in in_float):
        parent = {}
        order = []
        queue = [root]
        while queue:
            nxt = []
            for a in queue:
                for b in sorted(g.neighbors(a)):
                    if b in dangling and b not in claimed:
                        claimed.add(b)
                        parent[b] = a
                        order.append(b)
                        nxt.append(b)
            queue = nxt
        if not order:
            continue
        has_child = {parent[b] for b in order}
        covered = {root}
        for leaf in sorted(b for b in order if b not in has_child):
            path = [leaf]
            while parent[path[-1]] not in covered:
                path.append(parent[path[-1]])
            head = parent[path[-1]]
            path.reverse()
            covered.update(path)
            branches.append((head, tuple(path)))
    isolated = frozenset(x for x in s.vertices if x not in bnd and g.degree(x) == 0)
    return StructureReport(floating_components=floating, dangling_branches=branches,
                           isolated=isolated, is_middle=is_middle(s), dangling=dangling)


def is_middle(s: Shape) -> bool:
    """Both boundaries are minimum vertex separators (each boundary always separates)."""
    if len(s.u) != len(s.v):
        return False
    size, _ = min_vertex_separator(s)
    return size == len(s.u)


# -------------------------------------------------------------- automorphisms

def automorphism_count(s: Shape, pointwise: bool = False) -> int:
    """Number of edge-preserving vertex bijections fixing ``U`` and ``V``.

    By default the boundaries are fixed as sets; ``pointwise=True`` fixes every
    boundary vertex individually.
    """
    if s.k > AUTOMORPHISM_CAP:
        raise UnsupportedSizeError(f"automorphism search is capped at {AUTOMORPHISM_CAP} vertices")
    us, vs = set(s.u), set(s.v)

    def colour(x):
        if pointwise and x in s.boundary:
            return ("fixed", x)
        return (x in us, x in vs)

    verts = list(s.vertices)
    nbrs = {x: set() for x in verts}
    for a, b in s.edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    key = {x: (colour(x), len(nbrs[x])) for x in verts}
    image = {}
    used = set()

    def extend(i: int) -> int:
        if i == len(verts):
            return 1
        x = verts[i]
        total = 0
        for y in verts:
            if y in used or key[y] != key[x]:
                continue
            if any((image[z] in nbrs[y]) != (z in nbrs[x]) for z in verts[:i]):
                continue
            image[x] = y
            used.add(y)
            total += extend(i + 1)
            used.discard(y)
            del image[x]
        return total

    return extend(0)


# ------------------------------------------------------------------- corpus

@lru_cache(maxsize=None)
def _corpus(max_vertices: int) -> tuple:
    from networkx.algorithms.isomorphism import GraphMatcher

    out = []
    for gi, g in enumerate(nx.graph_atlas_g()):
        k = g.number_of_nodes()
        if k == 0 or k > max_vertices or not nx.is_connected(g):
            continue
        auts = [tuple(m[i] for i in range(k)) for m in GraphMatcher(g, g).isomorphisms_iter()]
        sides = [c for r in (1, 2) for c in combinations(range(k), r)]
        edges = frozenset((a + 1, b + 1) for a, b in g.edges())
        j = 0
        for U in sides:
            for V in sides:
                key = (U, V)
                if any((tuple(sorted(a[x] for x in U)), tuple(sorted(a[x] for x in V))) < key
                       for a in auts):
                    continue
                out.append(Shape(vertices=tuple(range(1, k + 1)), edges=edges,
                                 u=tuple(x + 1 for x in U), v=tuple(x + 1 for x in V),
                                 name=f"g{gi}b{j}"))
                j += 1
    return tuple(out)


def shape_corpus(max_vertices: int) -> list:
    """Connected shapes with ``1 <= |U|, |V| <= 2`` and at most ``max_vertices`` vertices.

    One representative per isomorphism class, where isomorphisms must map ``U``
    onto ``U`` and ``V`` onto ``V`` as sets.  Order is deterministic: graph
    atlas order, then lexicographic boundary order.
    """
    if max_vertices > 7:
        raise UnsupportedSizeError("shape_corpus supports at most 7 vertices")
    return list(_corpus(max_vertices))


def shapes_isomorphic(a: Shape, b: Shape) -> bool:
    """Brute-force boundary-respecting (set-wise) isomorphism test."""
    from itertools import permutations

    if a.k != b.k or len(a.edges) != len(b.edges) or len(a.u) != len(b.u) or len(a.v) != len(b.v):
        return False
    bu, bv = set(b.u), set(b.v)
    for perm in permutations(b.vertices):
        f = dict(zip(a.vertices, perm))
        if {f[x] for x in a.u} != bu or {f[x] for x in a.v} != bv:
            continue
        if all((min(f[x], f[y]), max(f[x], f[y])) in b.edges for x, y in a.edges):
            return True
    return False
