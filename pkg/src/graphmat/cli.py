"""Command-line entry point.

Every command prints exactly one JSON line on stdout summarising the run;
artifacts go to ``--out`` when given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import COMMANDS, ExperimentConfig, _resolve_shape_ref, load_config, validate_config
from .core_graph import sample_pruned
from .errors import ConfigError, GraphmatError, UnsupportedSizeError, ValidationError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SIZE, EXIT_IO = 0, 1, 2, 3, 4


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GRAPHMAT_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items: list) -> list:
    workers = min(_threads(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _grid(cfg: ExperimentConfig) -> list:
    return [(n, d, s) for n in cfg.n for d in cfg.d for s in cfg.seeds]


def _write(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)


def _shapes(cfg: ExperimentConfig, default_corpus: int | None = None) -> list:
    from .shape import shape_corpus

    out = [_resolve_shape_ref(r, ".") for r in cfg.shapes]
    size = cfg.corpus if cfg.corpus is not None else (default_corpus if not out else None)
    if size is not None:
        out.extend(shape_corpus(size))
    return out


def run_sample(cfg: ExperimentConfig) -> dict:
    graphs = _pmap(lambda t: sample_pruned(t[0], t[1], t[2], cfg.c_degree).to_dict(), _grid(cfg))
    _write(cfg, json.dumps(graphs))
    return {"graphs": len(graphs), "edges": [len(g["edges"]) for g in graphs]}


def run_norm(cfg: ExperimentConfig) -> dict:
    from .norm_bounds import norm_row, reports_to_csv, reports_to_json

    shapes = _shapes(cfg)
    if not shapes:
        raise ConfigError("field 'shapes': command 'norm' needs at least one shape")
    jobs = [(s, n, d, seed) for s in shapes for n, d, seed in _grid(cfg)]
    rows = _pmap(lambda j: norm_row(j[0], j[1], j[2], j[3], cfg.c_norm, cfg.c_degree), jobs)
    text = reports_to_csv(rows) if cfg.output_format() == "csv" else reports_to_json(rows)
    _write(cfg, text)
    return {"rows": len(rows), "converged": sum(r.converged for r in rows)}


def run_moments(cfg: ExperimentConfig) -> dict:
    from .pseudo_moments import MomentParams, assemble_moment_matrix, check_constraints, moment_dump

    dumps = []
    for n, d, seed in _grid(cfg):
        g = sample_pruned(n, d, seed, cfg.c_degree)
        params = MomentParams.for_graph(g, cfg.d_sos, cfg.c_eta, cfg.extra_vertices, cfg.k)
        m = assemble_moment_matrix(g, params)
        dump = moment_dump(m, check_constraints(m, g))
        dump.update({"n": n, "d": d, "seed": seed})
        dumps.append(dump)
    _write(cfg, json.dumps(dumps[0] if len(dumps) == 1 else dumps))
    return {"matrices": len(dumps),
            "constraints": [x["constraints"] for x in dumps],
            "min_eig": [x["min_eig"] for x in dumps]}


def run_oracle(cfg: ExperimentConfig) -> dict:
    from .graph_matrix import entry_bruteforce, materialize

    shapes = _shapes(cfg, default_corpus=4)
    ns = cfg.n or [8]
    ds = cfg.d or [3.0]
    seeds = cfg.seeds or list(range(5))
    passed = failed = 0
    worst = 0.0
    for n in ns:
        for d in ds:
            for seed in seeds:
                g = sample_pruned(n, d, seed, cfg.c_degree)
                for s in shapes:
                    op = materialize(s, g)
                    dev = 0.0
                    for i, r in enumerate(op.rows):
                        for j, c in enumerate(op.cols):
                            dev = max(dev, abs(op.matrix[i, j] - entry_bruteforce(s, g, r, c)))
                    worst = max(worst, dev)
                    if dev <= 1e-12:
                        passed += 1
                    else:
                        failed += 1
    return {"passed": passed, "failed": failed, "max_deviation": worst}


def run_shapes(cfg: ExperimentConfig) -> dict:
    from .shape import automorphism_count, min_vertex_separator, structure

    records = []
    for s in _shapes(cfg, default_corpus=4):
        size, witness = min_vertex_separator(s)
        rep = structure(s)
        rec = s.to_dict()
        rec.update({"name": s.name, "mvs_size": size, "mvs": sorted(witness),
                    "is_middle": rep.is_middle, "automorphisms": automorphism_count(s),
                    "floating": [sorted(c) for c in rep.floating_components],
                    "dangling": [[h, list(p)] for h, p in rep.dangling_branches],
                    "isolated": sorted(rep.isolated)})
        records.append(rec)
    _write(cfg, json.dumps(records))
    return {"shapes": len(records)}


RUNNERS = {"sample": run_sample, "norm": run_norm, "moments": run_moments,
           "oracle": run_oracle, "shapes": run_shapes}


def run(cfg: ExperimentConfig) -> tuple:
    """Execute a validated config; returns ``(exit_code, summary)``."""
    summary = RUNNERS[cfg.command](cfg)
    code = EXIT_FAIL if summary.get("failed") else EXIT_OK
    return code, summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphmat", description=__doc__)
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file; flags override its values")
    ap.add_argument("--n", type=int, nargs="+")
    ap.add_argument("--d", type=float, nargs="+")
    ap.add_argument("--seed", type=int, nargs="+", dest="seeds")
    ap.add_argument("--shape", nargs="+", dest="shapes", help="named shape or shape JSON file")
    ap.add_argument("--corpus", type=int, help="add shape_corpus(K) to the shape list")
    ap.add_argument("--extra-vertices", type=int, dest="extra_vertices")
    ap.add_argument("--d-sos", type=int, dest="d_sos")
    ap.add_argument("--c-eta", type=float, dest="c_eta")
    ap.add_argument("--c-norm", type=float, dest="c_norm")
    ap.add_argument("--c-degree", type=float, dest="c_degree")
    ap.add_argument("--k", type=float)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    return ap


def _emit(record: dict) -> None:
    print(json.dumps(record, default=_jsonable, sort_keys=True))


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        base = "."
        if args.config:
            with open(args.config) as fh:
                raw = json.load(fh)
            base = os.path.dirname(os.path.abspath(args.config))
        for key, value in vars(args).items():
            if key != "config" and value is not None:
                raw[key] = value
        cfg = validate_config(raw, base)
        code, summary = run(cfg)
    except (ConfigError, ValidationError, json.JSONDecodeError) as exc:
        return _fail(EXIT_CONFIG, exc)
    except UnsupportedSizeError as exc:
        return _fail(EXIT_SIZE, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except GraphmatError as exc:
        return _fail(EXIT_CONFIG, exc)
    _emit({"status": "ok" if code == EXIT_OK else "failed", "command": cfg.command,
           "out": cfg.out, **summary})
    return code


def _fail(code: int, exc: Exception) -> int:
    print(f"graphmat: {exc}", file=sys.stderr)
    _emit({"status": "error", "code": code, "error": type(exc).__name__, "message": str(exc)})
    return code


if __name__ == "__main__":
    sys.exit(main())
