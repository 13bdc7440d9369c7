"""Command-line front end.

    rpccd run [config.json] [--preset NAME] [--workers N] [--output DIR]
    rpccd sweep config.json --axis P|beta|n_trajectories --values v1,v2,... [--output DIR]

Exit codes: 0 success, 1 configuration error, 2 runtime error (sampler
tuning, integrator stability, grid leakage), 3 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import warnings

from . import __version__, oracles
from .config import ConfigError, RunConfig, deep_merge, load_json, load_preset, parse_config
from .dynamics import StabilityError
from .estimators import CorrelationSeries, correlation_ensemble, resolve_workers
from .model import ModelError
from .sampler import SamplerTuningError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3
SWEEP_AXES = {"P": ("system", "n_beads"), "beta": ("system", "beta"), "n_trajectories": (None, "n_trajectories")}


def execute(cfg: RunConfig, workers=None) -> CorrelationSeries:
    """Run one parsed configuration and return its correlation series."""
    times = cfg.times
    if cfg.method == "analytic_kubo":
        if cfg.A.degree == 1:
            return oracles.analytic_kubo_qq(cfg.system, times)
        return oracles.analytic_kubo_q2(cfg.system, times)
    if cfg.method == "analytic_rpmd":
        return oracles.analytic_rpmd_q2(cfg.system, times)
    if cfg.method == "analytic_nm":
        return oracles.analytic_nm_ccd_q2(cfg.system, cfg.mass_scheme, times)
    if cfg.method == "dvr":
        sol = oracles.solve_schrodinger(cfg.system, cfg.grid, kinetic=cfg.kinetic)
        return oracles.kubo_correlation(sol, cfg.A, cfg.B, cfg.system.beta, times)
    return correlation_ensemble(cfg.system, cfg.mass_scheme, cfg.method, cfg.A, cfg.B, cfg.n_trajectories,
                                cfg.t_max, cfg.dt_out, cfg.sampler_cfg, cfg.integrator_cfg, t_window=cfg.t_window,
                                sampler=cfg.sampler, workers=workers)


def meta_header(cfg: RunConfig, series: CorrelationSeries) -> dict:
    return {"config": cfg.resolved, "version": __version__, "seed": cfg.seed, "method": series.meta.get("method"),
            "controlled": series.meta.get("controlled", True)}


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def format_csv(series: CorrelationSeries, header: dict) -> str:
    lines = [f"# meta: {canonical_json(header)}", "t,value,std_error"]
    for t, v, e in zip(series.times, series.values, series.std_errors):
        lines.append(f"{float(t)!r},{float(v)!r},{float(e)!r}")
    return "\n".join(lines) + "\n"


def write_csv(path: str, series: CorrelationSeries, header: dict):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_csv(series, header))


def read_csv(path: str):
    """(header dict, times, values, std_errors) of a file written by ``write_csv``."""
    import numpy as np

    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# meta: "):
            raise ValueError(f"{path}: missing meta header")
        header = json.loads(first[len("# meta: "):])
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return header, data[:, 0], data[:, 1], data[:, 2]


def _run_one(raw: dict, output_dir: str | None, workers, filename: str | None = None) -> str:
    cfg = parse_config(raw)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        series = execute(cfg, workers)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out_dir = output_dir if output_dir is not None else cfg.output_path
    path = os.path.join(out_dir, filename or f"{cfg.name}.csv")
    write_csv(path, series, meta_header(cfg, series))
    return path


def _with_seed(raw: dict) -> dict:
    """Fix the seed once so every point of a sweep (or preset) shares it."""
    raw = copy.deepcopy(raw)
    if "seed" not in raw:
        from .config import resolve_seed

        raw["seed"] = resolve_seed(None)
    return raw


def cmd_run(args) -> int:
    if args.config is None and args.preset is None:
        raise ConfigError("config", "give a config file, --preset, or both")
    override = load_json(args.config) if args.config else {}
    runs = load_preset(args.preset) if args.preset else [{}]
    for base in runs:
        path = _run_one(deep_merge(base, override), args.output, args.workers)
        print(path)
    return EXIT_OK


def _parse_axis_value(axis: str, token: str):
    try:
        value = float(token)
    except ValueError:
        raise ConfigError("--values", f"not a number: {token!r}") from None
    if axis in ("P", "n_trajectories"):
        if not value.is_integer():
            raise ConfigError("--values", f"{axis} values must be integers, got {token!r}")
        return int(value)
    return value


def cmd_sweep(args) -> int:
    base = _with_seed(load_json(args.config))
    tokens = [t.strip() for t in args.values.split(",") if t.strip()]
    if not tokens:
        raise ConfigError("--values", "no values given")
    section, key = SWEEP_AXES[args.axis]
    out_dir = args.output if args.output is not None else base.get("output_path", ".")
    points = []
    for token in tokens:
        raw = copy.deepcopy(base)
        target = raw.setdefault(section, {}) if section else raw
        target[key] = _parse_axis_value(args.axis, token)
        name = f"{args.axis}_{token}.csv"
        _run_one(raw, out_dir, args.workers, filename=name)
        points.append({"value": target[key], "file": name})
        print(os.path.join(out_dir, name))
    manifest = {"axis": args.axis, "points": points, "base_config": base, "version": __version__}
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpccd", description="Kubo correlation functions from ring-polymer dynamics")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configuration or a shipped preset")
    run.add_argument("config", nargs="?", help="JSON run configuration (merged over the preset if both are given)")
    run.add_argument("--preset", help="shipped preset name, e.g. fig1a or fig1b")
    run.add_argument("--workers", type=int, default=None, help="worker processes (default: RPCCD_WORKERS or all cores)")
    run.add_argument("--output", help="output directory (overrides output_path)")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="repeat a configuration along one parameter axis")
    sweep.add_argument("config")
    sweep.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--output", help="output directory (overrides output_path)")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.workers is not None and args.workers < 1:
        print("error: --workers: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    args.workers = resolve_workers(args.workers)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SamplerTuningError, StabilityError, oracles.GridError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
