"""Experiment configuration: JSON files plus command-line overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError, ValidationError

COMMANDS = ("sample", "norm", "moments", "oracle", "shapes")
STOCHASTIC = ("sample", "norm", "moments")
FORMATS = ("csv", "json")


@dataclass
class ExperimentConfig:
    command: str
    n: list = field(default_factory=list)
    d: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    shapes: list = field(default_factory=list)
    corpus: int | None = None
    c_norm: float = 3.0
    c_degree: float = 10.0
    d_sos: int = 2
    c_eta: float = 2.0
    extra_vertices: int = 2
    k: float | None = None
    out: str | None = None
    format: str | None = None

    def output_format(self) -> str:
        if self.format:
            return self.format
        return "csv" if self.command == "norm" else "json"

    def to_dict(self) -> dict:
        return asdict(self)


def _as_list(value, name: str, kind) -> list:
    if value is None:
        return []
    if not isinstance(value, (list, tuple)):
        value = [value]
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"field {name!r}: expected numbers, got {v!r}")
        if kind is int and float(v) != int(v):
            raise ConfigError(f"field {name!r}: expected integers, got {v!r}")
        out.append(kind(v))
    return out


def _resolve_shape_ref(ref, base_dir: str):
    from .shape import NAMED_SHAPES, validate_shape

    if isinstance(ref, dict):
        return validate_shape(ref)
    if not isinstance(ref, str):
        raise ConfigError(f"field 'shapes': cannot interpret {ref!r}")
    if ref in NAMED_SHAPES:
        return NAMED_SHAPES[ref]()
    path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
    if not ref.endswith(".json"):
        raise ConfigError(f"unknown shape id {ref!r}")
    with open(path) as fh:
        raw = json.load(fh)
    return validate_shape(raw, name=os.path.splitext(os.path.basename(ref))[0])


def validate_config(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    """Build an :class:`ExperimentConfig`; messages name the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "command" not in raw or raw["command"] is None:
        raise ConfigError("missing required field 'command'")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}")
    cmd = raw["command"]
    if cmd not in COMMANDS:
        raise ConfigError(f"field 'command': expected one of {COMMANDS}, got {cmd!r}")
    cfg = ExperimentConfig(command=cmd)
    cfg.n = _as_list(raw.get("n"), "n", int)
    cfg.d = _as_list(raw.get("d"), "d", float)
    cfg.seeds = _as_list(raw.get("seeds"), "seeds", int)
    if any(n < 1 for n in cfg.n):
        raise ConfigError("field 'n': values must be at least 1")
    if any(d < 0 for d in cfg.d):
        raise ConfigError("field 'd': values must be non-negative")
    if any(s < 0 for s in cfg.seeds):
        raise ConfigError("field 'seeds': values must be non-negative")
    if cmd in STOCHASTIC and not cfg.seeds:
        raise ConfigError(f"field 'seeds': command {cmd!r} needs at least one seed")
    shapes = raw.get("shapes") or []
    if not isinstance(shapes, list):
        shapes = [shapes]
    for ref in shapes:
        try:
            _resolve_shape_ref(ref, base_dir)
        except ValidationError as exc:
            raise ConfigError(f"field 'shapes': {exc}") from exc
    cfg.shapes = list(shapes)
    for name in ("c_norm", "c_degree", "c_eta", "k"):
        if raw.get(name) is not None:
            setattr(cfg, name, float(_as_list(raw[name], name, float)[0]))
    for name in ("d_sos", "extra_vertices", "corpus"):
        if raw.get(name) is not None:
            setattr(cfg, name, _as_list(raw[name], name, int)[0])
    if cfg.c_norm < 1:
        raise ConfigError("field 'c_norm': must be at least 1")
    if cfg.c_degree <= 0:
        raise ConfigError("field 'c_degree': must be positive")
    if cfg.c_eta <= 1:
        raise ConfigError("field 'c_eta': must exceed 1")
    if cfg.d_sos < 2 or cfg.d_sos % 2:
        raise ConfigError("field 'd_sos': must be even and at least 2")
    if not 0 <= cfg.extra_vertices <= 3:
        raise ConfigError("field 'extra_vertices': must lie in [0, 3]")
    if cfg.corpus is not None and not 1 <= cfg.corpus <= 7:
        raise ConfigError("field 'corpus': must lie in [1, 7]")
    if cfg.k is not None and cfg.k < 0:
        raise ConfigError("field 'k': must be non-negative")
    cfg.out = raw.get("out")
    fmt = raw.get("format")
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError(f"field 'format': expected one of {FORMATS}, got {fmt!r}")
    cfg.format = fmt
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return validate_config(raw, os.path.dirname(os.path.abspath(path)))


def write_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")
