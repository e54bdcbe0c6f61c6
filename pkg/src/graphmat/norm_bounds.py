"""Predicted block values and empirical spectral measurements for graph matrices."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core_graph import PrunedGraph, is_two_cycle_free_at, kappa, sample_pruned
from .errors import ClassificationError, ConfigError, ParameterError
from .graph_matrix import (GraphMatrixOperator, block_norm, dense_operator,
                           line_operator, materialize)
from .shape import NAMED_SHAPES, Shape, is_middle, separator_candidates, structure

REPORT_FIELDS = ("shape", "n", "d", "seed", "q", "two_cycle_ok", "predicted",
                 "measured", "ratio", "converged")


def default_q(n: float, u_size: int, v_size: int, c: float = 1.0) -> float:
    """Trace power ``c |U| |V| (ln n)^2``, floored at 1."""
    return max(1.0, c * u_size * v_size * math.log(n) ** 2)


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the block-value bound.  ``q=None`` picks :func:`default_q` per shape."""

    n: float
    d: float
    q: float | None = None
    c_norm: float = 3.0
    sing_decay: float | None = None

    def __post_init__(self):
        if self.q is not None and self.q < 1:
            raise ParameterError(f"q must be at least 1, got {self.q}")
        if self.c_norm < 1:
            raise ParameterError(f"c_norm must be at least 1, got {self.c_norm}")
        if self.sing_decay is not None and not 0 < self.sing_decay <= 1:
            raise ParameterError(f"sing_decay must lie in (0, 1], got {self.sing_decay}")
        if not self.n > self.d > 1:
            raise ParameterError(f"need n > d > 1, got n={self.n}, d={self.d}")

    @property
    def decay(self) -> float:
        return math.exp(-self.d) if self.sing_decay is None else self.sing_decay

    def q_for(self, s: Shape) -> float:
        return default_q(self.n, len(s.u), len(s.v)) if self.q is None else self.q


def _log_block_value(s: Shape, params: BoundParams, S: frozenset, e_in_s: int, rep) -> float:
    n, d, c = params.n, params.d, params.c_norm
    q = params.q_for(s)
    k = s.k
    out = k * math.log(c) + e_in_s * math.log(c)
    out += 0.5 * (k - len(S)) * math.log(n) + 0.5 * e_in_s * math.log(n / d)
    out += 0.5 * len(rep.isolated) * math.log(n)
    cap = 0.5 * math.log(2 * k * q)
    for _, path in rep.dangling_branches:
        outside = sum(1 for x in path if x not in S)
        out += min(cap, 0.5 * outside * math.log(d))
    floor = math.log(2 * k * q)
    for comp in rep.floating_components:
        e_c = sum(1 for a, b in s.edges if a in comp and b in comp)
        if comp & S:
            out += floor
        else:
            out += max(floor, 0.5 * math.log(n) + e_c * math.log(params.decay))
    return out


def block_value_terms(s: Shape, params: BoundParams) -> list:
    """``(separator, log value)`` for every separator, lexicographic order."""
    rep = structure(s)
    return [(S, _log_block_value(s, params, S, e, rep)) for S, e in separator_candidates(s)]


def predicted_block_value(s: Shape, params: BoundParams) -> float:
    """Largest block value over all separators of ``s``.

    Each separator ``S`` scores
    ``c^{|V|+|E(S)|} sqrt(n)^{|V-S|+|I|} (n/d)^{|E(S)|/2}`` times a factor
    ``min(sqrt(2|V|q), sqrt(d)^{#branch vertices outside S})`` per dangling
    branch and ``max(2|V|q, sqrt(n) decay^{|E(C)|} [C misses S])`` per
    floating component ``C``.
    """
    return math.exp(max(v for _, v in block_value_terms(s, params)))


def best_separator(s: Shape, params: BoundParams) -> frozenset:
    terms = block_value_terms(s, params)
    top = max(v for _, v in terms)
    return next(S for S, v in terms if v >= top - 1e-12 * max(1.0, abs(top)))


# ---------------------------------------------------------------- measurement

@dataclass(frozen=True)
class PowerResult:
    value: float
    converged: bool
    iterations: int


def _as_operator(op) -> GraphMatrixOperator:
    if isinstance(op, GraphMatrixOperator):
        return op
    return dense_operator(op)


def power_iteration(op, tol: float = 1e-6, max_iter: int = 1000, seed: int = 0,
                    restarts: int = 3) -> PowerResult:
    """Top singular value by power iteration on ``op op^T``.

    Each restart starts from a seeded Gaussian vector and stops once successive
    estimates of ``sigma^2`` agree to ``tol`` relatively.  Returns the largest
    estimate over the restarts.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    op = _as_operator(op)
    nr, nc = op.dims
    if nr == 0 or nc == 0:
        return PowerResult(0.0, True, 0)
    rng = np.random.default_rng(seed)
    best, all_converged, total = 0.0, True, 0
    for _ in range(restarts):
        x = rng.standard_normal(nc)
        x /= np.linalg.norm(x)
        prev, converged, est = None, False, 0.0
        for it in range(1, max_iter + 1):
            y = op.apply(x)
            est = float(y @ y)
            z = op.apply_transpose(y)
            nz = np.linalg.norm(z)
            total += 1
            if nz == 0:
                converged = True
                break
            x = z / nz
            if prev is not None and abs(est - prev) <= tol * max(abs(est), 1e-300):
                converged = True
                break
            prev = est
        best = max(best, math.sqrt(est))
        all_converged &= converged
    return PowerResult(best, all_converged, total)


def empirical_norm(op, tol: float = 1e-6, max_iter: int = 1000, seed: int = 0) -> float:
    """Largest singular value estimate; see :func:`power_iteration` for the convergence flag."""
    return power_iteration(op, tol, max_iter, seed).value


def trace_power(m, q: int) -> float:
    """``Tr((M M^T)^q)`` by repeated dense multiplication."""
    if q < 1 or int(q) != q:
        raise ParameterError("q must be a positive integer")
    m = np.asarray(m, dtype=float)
    G = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    P = G.copy()
    for _ in range(int(q) - 1):
        P = P @ G
    return float(np.trace(P))


def trace_moment(s: Shape, g: PrunedGraph, q: int) -> float:
    return trace_power(materialize(s, g).matrix, q)


def measure_norm(s: Shape, g: PrunedGraph, tol: float = 1e-6, max_iter: int = 2000,
                 seed: int = 0) -> PowerResult:
    """Spectral norm of ``M_s`` on ``g``: power iteration for the line shape, exact otherwise."""
    if (s.k == 2 and len(s.u) == 1 and len(s.v) == 1 and s.u != s.v
            and len(s.edges) == 1):
        return power_iteration(line_operator(g), tol, max_iter, seed)
    return PowerResult(block_norm(s, g), True, 0)


def shape_coefficient(s: Shape, k: float, n: float, p: float) -> float:
    """``(k/n)^{|V| - (|U|+|V|)/2} (-sqrt(p/(1-p)))^{|E|}``."""
    expo = s.k - 0.5 * (len(s.u) + len(s.v))
    return (k / n) ** expo * (-math.sqrt(p / (1.0 - p))) ** len(s.edges)


def charging_ratio(tau: Shape, g: PrunedGraph, k: float, params=None, seed: int = 0) -> float:
    """``|lambda_tau| * ||M_tau||`` for a middle shape ``tau``."""
    if not is_middle(tau):
        raise ClassificationError(f"shape {tau.name or tau} is not a middle shape")
    lam = shape_coefficient(tau, k, g.n, g.p)
    tol = getattr(params, "tol", 1e-6)
    return abs(lam) * measure_norm(tau, g, tol=tol, seed=seed).value


# ---------------------------------------------------------------- experiments

@dataclass
class NormReport:
    shape: str
    n: int
    d: float
    seed: int
    q: float
    two_cycle_ok: bool
    predicted: float
    measured: float
    ratio: float
    converged: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NormConfig:
    shapes: list = field(default_factory=list)
    n: list = field(default_factory=list)
    d: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    c_norm: float = 3.0
    c_degree: float = 10.0


def resolve_shape(ref) -> Shape:
    """Named shape, ``Shape`` instance, or raw mapping."""
    from .shape import validate_shape
    if isinstance(ref, Shape):
        return ref
    if isinstance(ref, str):
        if ref not in NAMED_SHAPES:
            raise ConfigError(f"unknown shape id {ref!r}")
        return NAMED_SHAPES[ref]()
    return validate_shape(ref)


def norm_row(s: Shape, n: int, d: float, seed: int, c_norm: float = 3.0,
             c_degree: float = 10.0, g: PrunedGraph | None = None) -> NormReport:
    g = g if g is not None else sample_pruned(n, d, seed, c_degree)
    ok = is_two_cycle_free_at(g, kappa(n, d))
    unit = BoundParams(n=n, d=d, c_norm=1.0)
    pred = predicted_block_value(s, BoundParams(n=n, d=d, c_norm=c_norm))
    meas = measure_norm(s, g, seed=seed)
    return NormReport(shape=s.name or str(s), n=n, d=d, seed=seed, q=unit.q_for(s),
                      two_cycle_ok=ok, predicted=pred, measured=meas.value,
                      ratio=meas.value / predicted_block_value(s, unit),
                      converged=meas.converged)


def norm_experiment(config) -> list:
    """One :class:`NormReport` per ``(shape, n, d, seed)``."""
    if config is None or config == {}:
        return []
    if isinstance(config, dict):
        try:
            config = NormConfig(**config)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
    shapes = [resolve_shape(r) for r in config.shapes]
    rows = []
    for s in shapes:
        for n in config.n:
            for d in config.d:
                for seed in config.seeds:
                    rows.append(norm_row(s, n, d, seed, config.c_norm, config.c_degree))
    return rows


def reports_to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(REPORT_FIELDS), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.to_dict().items()})
    return buf.getvalue()


def reports_to_json(rows: list) -> str:
    return json.dumps([r.to_dict() for r in rows], indent=1)
