"""Strict JSON run configurations.

Physical parameters never have defaults; numerical knobs do, and every
resolved default is written back into the output metadata so a run can be
reproduced from its CSV header alone.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import dynamics
from .model import (Custom, DoubleWell, Harmonic, MatchedFrequency, ModelError, Observable, Physical, Polynomial,
                    Quartic, SystemSpec, validate_system)
from .oracles import GridSpec
from .sampler import SamplerConfig

METHODS = ("rpmd", "nm_ccd", "analytic_kubo", "analytic_rpmd", "analytic_nm", "dvr")
SAMPLING_DEFAULTS = {"burn_in_sweeps": 1000, "decorrelation_sweeps": 10, "step_scale": 1.0, "tuning_sweeps": 20,
                     "n_chains": 64, "sampler": "auto"}
TOP_KEYS = {"name", "system", "method", "mass_scheme", "observables", "sampling", "integration", "t_max", "dt_out",
            "t_window", "n_trajectories", "grid", "output_path", "seed"}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _check_keys(section: dict, allowed: set, required: set, prefix: str):
    if not isinstance(section, dict):
        raise ConfigError(prefix or "<root>", "expected a JSON object")
    for key in section:
        if key not in allowed:
            raise ConfigError(_join(prefix, key), "unknown key")
    for key in sorted(required):
        if key not in section:
            raise ConfigError(_join(prefix, key), "required key missing")


def _join(prefix, key):
    return f"{prefix}.{key}" if prefix else key


def _number(section, key, prefix, positive=False, integer=False, minimum=None):
    value = section[key]
    path = _join(prefix, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and (not float(value).is_integer()):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(path, "must be finite")
    if positive and not value > 0:
        raise ConfigError(path, f"must be > 0, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value!r}")
    return int(value) if integer else float(value)


def _number_list(section, key, prefix):
    value = section[key]
    if not isinstance(value, list) or not value or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(_join(prefix, key), "expected a non-empty list of numbers")
    return [float(v) for v in value]


def parse_potential(section, prefix="system.potential"):
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigError(_join(prefix, "kind"), "required key missing")
    kind = section["kind"]
    fields = {"harmonic": {"omega"}, "quartic": {"a"}, "double_well": {"a", "b"}, "polynomial": {"coefficients"}}
    if kind not in fields:
        raise ConfigError(_join(prefix, "kind"), f"unknown potential kind {kind!r}")
    _check_keys(section, fields[kind] | {"kind"}, fields[kind], prefix)
    try:
        if kind == "harmonic":
            return Harmonic(_number(section, "omega", prefix, positive=True))
        if kind == "quartic":
            return Quartic(_number(section, "a", prefix, positive=True))
        if kind == "double_well":
            return DoubleWell(_number(section, "a", prefix, positive=True), _number(section, "b", prefix, positive=True))
        return Polynomial(tuple(_number_list(section, "coefficients", prefix)))
    except ModelError as exc:
        raise ConfigError(prefix, str(exc)) from exc


def parse_system(section, prefix="system") -> SystemSpec:
    _check_keys(section, {"mass", "beta", "n_beads", "potential", "hbar"}, {"mass", "beta", "n_beads", "potential"},
                prefix)
    mass = _number(section, "mass", prefix)
    beta = _number(section, "beta", prefix)
    n_beads = _number(section, "n_beads", prefix, integer=True)
    hbar = _number(section, "hbar", prefix) if "hbar" in section else 1.0
    spec = SystemSpec(mass, beta, n_beads, parse_potential(section["potential"], _join(prefix, "potential")), hbar)
    try:
        validate_system(spec)
    except ModelError as exc:
        msg = str(exc)
        key = next((k for k in ("n_beads", "mass", "beta", "hbar") if msg.startswith(k)), "potential")
        raise ConfigError(_join(prefix, key), msg) from exc
    return spec


def parse_scheme(section, prefix="mass_scheme"):
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigError(_join(prefix, "kind"), "required key missing")
    kind = section["kind"]
    fields = {"physical": set(), "matched_frequency": {"omega"}, "custom": {"masses"}}
    if kind not in fields:
        raise ConfigError(_join(prefix, "kind"), f"unknown mass scheme {kind!r}")
    _check_keys(section, fields[kind] | {"kind"}, fields[kind], prefix)
    try:
        if kind == "physical":
            return Physical()
        if kind == "matched_frequency":
            return MatchedFrequency(_number(section, "omega", prefix, positive=True))
        return Custom(tuple(_number_list(section, "masses", prefix)))
    except ModelError as exc:
        raise ConfigError(prefix, str(exc)) from exc


SHORTHAND = {"q": Observable.q, "p": Observable.p, "q2": Observable.q_squared, "q^2": Observable.q_squared}


def parse_observable(value, prefix) -> Observable:
    if isinstance(value, str):
        if value not in SHORTHAND:
            raise ConfigError(prefix, f"unknown observable shorthand {value!r} (use one of {sorted(SHORTHAND)})")
        return SHORTHAND[value]()
    _check_keys(value, {"kind", "coefficients"}, {"kind", "coefficients"}, prefix)
    try:
        return Observable(value["kind"], tuple(_number_list(value, "coefficients", prefix)))
    except ModelError as exc:
        raise ConfigError(_join(prefix, "kind"), str(exc)) from exc


@dataclass(frozen=True)
class RunConfig:
    name: str
    system: SystemSpec
    method: str
    mass_scheme: object
    A: Observable | None
    B: Observable | None
    sampler_cfg: SamplerConfig
    sampler: str
    integrator_cfg: dynamics.IntegratorConfig | None
    t_max: float
    dt_out: float
    t_window: float
    n_trajectories: int | None
    grid: GridSpec | None
    kinetic: str
    output_path: str
    seed: int
    resolved: dict

    @property
    def times(self) -> np.ndarray:
        return np.arange(int(round(self.t_max / self.dt_out)) + 1) * self.dt_out


def resolve_seed(raw) -> int:
    """Seeds absent from the config are drawn from OS entropy and recorded."""
    if raw is None:
        return int(np.random.SeedSequence().entropy % 2**64)
    return raw


def parse_config(data: dict) -> RunConfig:
    data = copy.deepcopy(data)
    _check_keys(data, TOP_KEYS, {"system", "method", "t_max", "dt_out"}, "")
    method = data["method"]
    if method not in METHODS:
        raise ConfigError("method", f"unknown method {method!r} (expected one of {', '.join(METHODS)})")
    system = parse_system(data["system"])
    t_max = _number(data, "t_max", "", minimum=0.0)
    dt_out = _number(data, "dt_out", "", positive=True)
    t_window = _number(data, "t_window", "", minimum=0.0) if "t_window" in data else 0.0
    seed = resolve_seed(_number(data, "seed", "", integer=True, minimum=0) if "seed" in data else None)
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")

    needs_scheme = method in ("nm_ccd", "analytic_nm")
    if needs_scheme and "mass_scheme" not in data:
        raise ConfigError("mass_scheme", f"required for method {method}")
    scheme = parse_scheme(data["mass_scheme"]) if "mass_scheme" in data else Physical()
    if method in ("rpmd", "analytic_rpmd") and not isinstance(scheme, Physical):
        raise ConfigError("mass_scheme.kind", f"{method} uses physical masses only")
    if isinstance(scheme, Custom) and len(scheme.masses) != system.n_beads:
        raise ConfigError("mass_scheme.masses", f"need {system.n_beads} masses, got {len(scheme.masses)}")

    A = B = None
    if "observables" in data:
        obs = data["observables"]
        _check_keys(obs, {"A", "B"}, {"A", "B"}, "observables")
        A = parse_observable(obs["A"], "observables.A")
        B = parse_observable(obs["B"], "observables.B")
    if method in ("rpmd", "nm_ccd", "dvr") and A is None:
        raise ConfigError("observables", f"required for method {method}")
    q2 = Observable.q_squared()
    if method.startswith("analytic"):
        if not isinstance(system.potential, Harmonic):
            raise ConfigError("system.potential.kind", f"{method} needs a harmonic potential")
        if A is None:
            A = B = q2
        allowed = (q2, Observable.q()) if method == "analytic_kubo" else (q2,)
        if A != B or A not in allowed:
            raise ConfigError("observables", f"{method} supports A = B = " + " or ".join(o.label() for o in allowed))
    if A is not None and (A.kind == "momentum") != (B.kind == "momentum"):
        raise ConfigError("observables", "mixed position/momentum correlations are not supported")

    n_traj = None
    if method in ("rpmd", "nm_ccd"):
        if "n_trajectories" not in data:
            raise ConfigError("n_trajectories", f"required for method {method}")
        n_traj = _number(data, "n_trajectories", "", integer=True, minimum=64)

    sampling = dict(SAMPLING_DEFAULTS)
    if "sampling" in data:
        _check_keys(data["sampling"], set(SAMPLING_DEFAULTS), set(), "sampling")
        sampling.update(data["sampling"])
    for key in ("burn_in_sweeps", "decorrelation_sweeps", "tuning_sweeps", "n_chains"):
        sampling[key] = _number(sampling, key, "sampling", integer=True, minimum=0 if key == "burn_in_sweeps" else 1)
    sampling["step_scale"] = _number(sampling, "step_scale", "sampling", positive=True)
    if sampling["sampler"] not in ("auto", "exact", "metropolis"):
        raise ConfigError("sampling.sampler", f"unknown sampler {sampling['sampler']!r}")
    if sampling["sampler"] == "exact" and not isinstance(system.potential, Harmonic):
        raise ConfigError("sampling.sampler", "exact sampling needs a harmonic potential")
    sampler_cfg = SamplerConfig(sampling["burn_in_sweeps"], sampling["decorrelation_sweeps"], sampling["step_scale"],
                                seed, sampling["tuning_sweeps"], sampling["n_chains"])

    integrator_cfg = None
    integration = None
    if method in ("rpmd", "nm_ccd"):
        integration = dict(data.get("integration", {}))
        _check_keys(integration, {"dt", "scheme", "omega_local"}, set(), "integration")
        scheme_name = integration.setdefault("scheme", dynamics.MODE_SPLIT)
        if scheme_name not in (dynamics.MODE_SPLIT, dynamics.VELOCITY_VERLET):
            raise ConfigError("integration.scheme", f"unknown integrator {scheme_name!r}")
        if "dt" in integration:
            dt = _number(integration, "dt", "integration", positive=True)
        else:
            dt = dynamics.default_dt(system, scheme, scheme_name)
            dt = dt_out / max(1, int(np.ceil(dt_out / dt - 1e-9)))
        ratio = dt_out / dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError("integration.dt", f"dt_out={dt_out:g} must be an integer multiple of dt={dt:g}")
        integration["dt"] = dt
        omega_local = integration.setdefault("omega_local", None)
        if omega_local is not None:
            omega_local = _number(integration, "omega_local", "integration", minimum=0.0)
        integrator_cfg = dynamics.IntegratorConfig(dt, scheme_name, int(round(t_max / dt)), omega_local)

    grid = None
    kinetic = "sinc"
    grid_raw = None
    if method == "dvr":
        if "grid" not in data:
            raise ConfigError("grid", "required for method dvr")
        grid_raw = dict(data["grid"])
        _check_keys(grid_raw, {"q_min", "q_max", "n_points", "kinetic"}, {"q_min", "q_max", "n_points"}, "grid")
        kinetic = grid_raw.setdefault("kinetic", "sinc")
        if kinetic not in ("sinc", "fd3"):
            raise ConfigError("grid.kinetic", f"unknown kinetic discretization {kinetic!r}")
        try:
            grid = GridSpec(_number(grid_raw, "q_min", "grid"), _number(grid_raw, "q_max", "grid"),
                            _number(grid_raw, "n_points", "grid", integer=True))
        except ModelError as exc:
            raise ConfigError("grid", str(exc)) from exc

    name = data.get("name", method)
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError("name", "must be a non-empty string without '/'")
    output_path = data.get("output_path", ".")
    if not isinstance(output_path, str):
        raise ConfigError("output_path", "must be a string")

    resolved = {k: data[k] for k in ("system", "method", "t_max", "dt_out")}
    resolved.update({"name": name, "t_window": t_window, "seed": seed, "output_path": output_path})
    if "mass_scheme" in data or method in ("rpmd", "nm_ccd"):
        resolved["mass_scheme"] = data.get("mass_scheme", {"kind": "physical"})
    if "observables" in data:
        resolved["observables"] = data["observables"]
    if n_traj is not None:
        resolved["n_trajectories"] = n_traj
        resolved["sampling"] = sampling
        resolved["integration"] = integration
    if grid_raw is not None:
        resolved["grid"] = grid_raw
    return RunConfig(name, system, method, scheme, A, B, sampler_cfg, sampling["sampler"], integrator_cfg, t_max,
                     dt_out, t_window, n_traj, grid, kinetic, output_path, seed, resolved)


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def preset_names() -> list:
    return sorted(p.name[:-5] for p in resources.files("rpccd.presets").iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> list:
    """Run dictionaries of a shipped preset."""
    if name not in preset_names():
        raise ConfigError("--preset", f"unknown preset {name!r} (available: {', '.join(preset_names())})")
    data = json.loads(resources.files("rpccd.presets").joinpath(f"{name}.json").read_text(encoding="utf-8"))
    return data["runs"]
