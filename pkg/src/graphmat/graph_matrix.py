"""Graph matrices of shapes on concrete pruned graphs.

A graph matrix sums character products over injective embeddings of a shape.
Dense materialization builds one tensor over the images of the boundary
vertices (interior vertices summed out) and reads matrix entries from it.
Pairs of shape vertices joined by an edge contribute the character matrix,
whose zero diagonal already enforces distinct images; other pairs contribute
an off-diagonal mask.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, svds

from .core_graph import PrunedGraph, chi_product
from .errors import ShapeError, UnsupportedSizeError
from .shape import Shape

WORK_BUDGET = 10**8
DENSE_CAP = 4 * 10**7
SVD_DIRECT_MAX = 600
INDEX_MODES = ("ordered", "set")


@dataclass(frozen=True, eq=False)
class GraphMatrixOperator:
    """A graph matrix as either a dense array or a matrix-free map.

    ``rows`` and ``cols`` label the index space: tuples of vertex ids in
    ordered mode, sorted tuples in set mode.
    """

    shape: Shape | None
    graph: PrunedGraph | None
    index_mode: str
    representation: str
    rows: list
    cols: list
    matrix: np.ndarray | None = None
    _matvec: Callable | None = field(default=None, repr=False)
    _rmatvec: Callable | None = field(default=None, repr=False)

    @property
    def dims(self) -> tuple:
        return (len(self.rows), len(self.cols))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.matrix is not None:
            return self.matrix @ x
        return self._matvec(x)

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.matrix is not None:
            return self.matrix.T @ y
        return self._rmatvec(y)

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        m = self.dims[1]
        return np.column_stack([self.apply(e) for e in np.eye(m)]) if m else np.zeros((self.dims[0], 0))

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.dims, matvec=self.apply, rmatvec=self.apply_transpose, dtype=float)


def _check_index_mode(mode: str) -> None:
    if mode not in INDEX_MODES:
        raise ValueError(f"index_mode must be one of {INDEX_MODES}, got {mode!r}")


def _check_tuple(g: PrunedGraph, t, expected: int, side: str) -> tuple:
    t = tuple(int(x) for x in t)
    if len(t) != expected:
        raise ShapeError(f"{side} index has length {len(t)}, boundary has {expected}")
    for x in t:
        g._check_vertex(x)
    return t


def entry_bruteforce(s: Shape, g: PrunedGraph, row, col) -> float:
    """One entry by exhaustive enumeration of injective embeddings."""
    row = _check_tuple(g, row, len(s.u), "row")
    col = _check_tuple(g, col, len(s.v), "column")
    pinned = {}
    for x, img in list(zip(s.u, row)) + list(zip(s.v, col)):
        if pinned.setdefault(x, img) != img:
            return 0.0
    if len(set(pinned.values())) != len(pinned):
        return 0.0
    free = [x for x in s.vertices if x not in pinned]
    pool = [int(v) for v in g.survivors if int(v) not in pinned.values()]
    total = 0.0
    for imgs in permutations(pool, len(free)):
        psi = dict(pinned)
        psi.update(zip(free, imgs))
        total += chi_product(g, ((psi[a], psi[b]) for a, b in s.edges))
    return total


def _pair_factors(s: Shape, chi: np.ndarray) -> list:
    """``(i, j, F)`` for every pair of shape positions: ``chi`` on edges, off-diagonal mask otherwise."""
    m = chi.shape[0]
    off = 1.0 - np.eye(m)
    pos = {x: i for i, x in enumerate(s.vertices)}
    out = []
    for a, b in combinations(s.vertices, 2):
        key = (min(a, b), max(a, b))
        out.append((pos[a], pos[b], chi if key in s.edges else off))
    return out


def boundary_tensor(s: Shape, g: PrunedGraph, budget: int = WORK_BUDGET) -> tuple:
    """Sum over injective embeddings, keeping the images of boundary vertices.

    Returns ``(R, bnd)`` where ``bnd`` lists the boundary vertex ids in the
    order of the axes of ``R``; each axis runs over survivor positions.
    """
    m = g.n_surviving
    k = s.k
    if float(m) ** k > budget:
        raise UnsupportedSizeError(f"{m}^{k} embeddings exceed the work budget of {budget:.0e}")
    bnd = sorted(s.boundary)
    order = bnd + [x for x in s.vertices if x not in s.boundary]
    reordered = Shape(vertices=tuple(order), edges=s.edges, u=s.u, v=s.v)
    nb = len(bnd)
    if k == 0:
        return np.ones(()), bnd
    chi = g.chi_matrix()
    factors = _pair_factors(reordered, chi)
    out_shape = (m,) * nb
    R = np.zeros(out_shape)
    if m == 0:
        return R, bnd
    rest = k - 1
    for a in range(m):
        T = np.ones((m,) * rest) if rest else np.ones(())
        for i, j, F in factors:
            if i == 0:
                vec = F[a]
                shp = [1] * rest
                shp[j - 1] = m
                T = T * vec.reshape(shp)
            else:
                shp = [1] * rest
                shp[i - 1] = m
                shp[j - 1] = m
                T = T * F.reshape(shp)
        if k > nb:
            T = T.sum(axis=tuple(range(nb - 1 if nb else 0, rest)))
        if nb:
            R[a] = T
        else:
            R = R + T
    return R, bnd


def _injective_tuples(ids: np.ndarray, r: int) -> list:
    return [tuple(int(x) for x in t) for t in permutations(ids.tolist(), r)]


def _assemble(s: Shape, g: PrunedGraph, R: np.ndarray, bnd: list, rows: list, cols: list) -> np.ndarray:
    pos = g.position
    axis = {x: i for i, x in enumerate(bnd)}
    nr, nc = len(rows), len(cols)
    M = np.zeros((nr, nc))
    if nr == 0 or nc == 0:
        return M
    ridx = pos[np.asarray(rows, dtype=np.int64).reshape(nr, len(s.u)) - 1] if s.u else np.zeros((nr, 0), dtype=np.int64)
    cidx = pos[np.asarray(cols, dtype=np.int64).reshape(nc, len(s.v)) - 1] if s.v else np.zeros((nc, 0), dtype=np.int64)
    upos = {x: i for i, x in enumerate(s.u)}
    vpos = {x: i for i, x in enumerate(s.v)}
    index = [None] * len(bnd)
    ok = np.ones((nr, nc), dtype=bool)
    for x in bnd:
        if x in upos:
            index[axis[x]] = ridx[:, upos[x]][:, None]
            if x in vpos:
                ok &= ridx[:, upos[x]][:, None] == cidx[:, vpos[x]][None, :]
        else:
            index[axis[x]] = cidx[:, vpos[x]][None, :]
    if bnd:
        M = R[tuple(index)] * ok
    else:
        M[:] = R
    return np.broadcast_to(M, (nr, nc)).copy()


def index_tuples(g: PrunedGraph, size: int, index_mode: str = "ordered") -> list:
    _check_index_mode(index_mode)
    if index_mode == "ordered":
        return _injective_tuples(g.survivors, size)
    return [tuple(int(x) for x in t) for t in combinations(g.survivors.tolist(), size)]


def materialize(s: Shape, g: PrunedGraph, index_mode: str = "ordered",
                budget: int = WORK_BUDGET) -> GraphMatrixOperator:
    """Dense graph matrix; ordered mode indexes by injective tuples, set mode by subsets.

    In set mode each embedding is counted once, under the sets it assigns to
    the two boundaries.
    """
    _check_index_mode(index_mode)
    R, bnd = boundary_tensor(s, g, budget)
    rows_o = index_tuples(g, len(s.u), "ordered")
    cols_o = index_tuples(g, len(s.v), "ordered")
    if float(len(rows_o)) * len(cols_o) > DENSE_CAP:
        raise UnsupportedSizeError(f"dense matrix {len(rows_o)}x{len(cols_o)} exceeds the cap")
    M = _assemble(s, g, R, bnd, rows_o, cols_o)
    if index_mode == "ordered":
        return GraphMatrixOperator(s, g, "ordered", "dense", rows_o, cols_o, M)
    rows = index_tuples(g, len(s.u), "set")
    cols = index_tuples(g, len(s.v), "set")
    rmap = {t: i for i, t in enumerate(rows)}
    cmap = {t: i for i, t in enumerate(cols)}
    ri = np.array([rmap[tuple(sorted(t))] for t in rows_o], dtype=np.int64)
    ci = np.array([cmap[tuple(sorted(t))] for t in cols_o], dtype=np.int64)
    S = np.zeros((len(rows), len(cols)))
    if M.size:
        np.add.at(S, (ri[:, None], ci[None, :]), M)
    return GraphMatrixOperator(s, g, "set", "dense", rows, cols, S)


def block_norm(s: Shape, g: PrunedGraph, budget: int = WORK_BUDGET) -> float:
    """Exact spectral norm of the ordered graph matrix.

    Rows and columns split by the images of ``U & V``, so the matrix is a
    direct sum of blocks, one per assignment of the shared vertices; the norm
    is the largest block norm.  Rows with repeated ids are zero and do not
    change the norm, so blocks are read straight off the boundary tensor.
    """
    R, bnd = boundary_tensor(s, g, budget)
    m = g.n_surviving
    if m == 0 or not s.u or not s.v:
        return float(np.sqrt((R ** 2).sum())) if (s.u or s.v) else float(abs(R))
    axis = {x: i for i, x in enumerate(bnd)}
    shared = [x for x in s.u if x in s.v]
    u_only = [x for x in s.u if x not in s.v]
    v_only = [x for x in s.v if x not in s.u]
    perm = [axis[x] for x in shared + u_only + v_only]
    B = np.transpose(R, perm).reshape(m ** len(shared), m ** len(u_only), m ** len(v_only))
    if B.shape[1] == 1 or B.shape[2] == 1:
        return float(np.sqrt((B ** 2).sum(axis=(1, 2))).max())
    if min(B.shape[1:]) <= SVD_DIRECT_MAX:
        return float(np.linalg.svd(B, compute_uv=False)[:, 0].max())
    return max(_top_singular(b) for b in B)


def _top_singular(b: np.ndarray) -> float:
    if not b.any():
        return 0.0
    v0 = np.ones(min(b.shape))
    return float(svds(b, k=1, tol=1e-12, v0=v0, return_singular_vectors=False)[0])


def line_operator(g: PrunedGraph) -> GraphMatrixOperator:
    """Matrix-free line-shape graph matrix on all ``n`` ids; removed coordinates map to 0.

    ``M = a A + b (J - I - A)`` on survivors, applied as one sparse product
    plus a rank-one correction.
    """
    a, b = g.chi.chi_present, g.chi.chi_absent
    A = g.adjacency
    mask = np.zeros(g.n)
    mask[g.survivors - 1] = 1.0

    def matvec(x):
        x = np.asarray(x, dtype=float).ravel() * mask
        y = (a - b) * (A @ x) + b * (x.sum() - x)
        return y * mask

    ids = [(int(i),) for i in range(1, g.n + 1)]
    from .shape import line_shape
    return GraphMatrixOperator(line_shape(), g, "ordered", "implicit", ids, ids,
                               None, matvec, matvec)


def dense_operator(m) -> GraphMatrixOperator:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ShapeError("dense_operator needs a 2-d array")
    return GraphMatrixOperator(None, None, "ordered", "dense",
                               [(i,) for i in range(m.shape[0])],
                               [(j,) for j in range(m.shape[1])], m)


def _label(t) -> str:
    return "-".join(str(x) for x in t)


def dump_csv(op: GraphMatrixOperator, out=None, skip_zeros: bool = False) -> str:
    """Write ``row_index,col_index,value`` triples; tuple indices render as dash-joined ids."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row_index", "col_index", "value"])
    M = op.to_dense()
    for i, j in product(range(M.shape[0]), range(M.shape[1])):
        v = M[i, j]
        if skip_zeros and v == 0:
            continue
        w.writerow([_label(op.rows[i]), _label(op.cols[j]), repr(float(v))])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


__all__ = [
    "GraphMatrixOperator", "entry_bruteforce", "boundary_tensor", "materialize",
    "block_norm", "line_operator", "dense_operator", "index_tuples", "dump_csv",
]
