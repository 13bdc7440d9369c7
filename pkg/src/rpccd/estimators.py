"""Centroid estimators, trajectory-ensemble correlation functions and densities."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import MODE_SPLIT, IntegratorConfig, StabilityError, default_dt, step_normal_mode, step_ring_polymer
from .model import (BEAD, NORMAL_MODE, Harmonic, MassScheme, ModelError, Observable, RingPolymerState,
                    SystemSpec, is_physical, observable_to_dict, scheme_to_dict, system_to_dict, validate_system)
from .normal_modes import build_basis
from .sampler import (SamplerConfig, sample_momenta, sample_positions_harmonic, sample_positions_metropolis,
                      substream)

RPMD = "rpmd"
NM_CCD = "nm_ccd"
ANALYTIC_METHODS = frozenset({"analytic_kubo", "analytic_rpmd", "analytic_nm", "dvr_oracle"})
METHODS = ANALYTIC_METHODS | {RPMD, NM_CCD}
N_BLOCKS = 32
MIN_TRAJECTORIES = 64
WORKERS_ENV = "RPCCD_WORKERS"


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    times: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        e = np.array(self.std_errors, dtype=float)
        if t.ndim != 1 or t.size == 0 or not (v.shape == e.shape == t.shape):
            raise ModelError("times, values and std_errors must be 1-D arrays of equal length")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ModelError("times must start at 0 and increase strictly")
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise ModelError("std_errors must be finite and >= 0")
        if self.meta.get("method") in ANALYTIC_METHODS and np.any(e != 0):
            raise ModelError("analytic series carry zero std_errors")
        for arr in (t, v, e):
            arr.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "std_errors", e)

    @classmethod
    def exact(cls, times, values, **meta) -> "CorrelationSeries":
        values = np.asarray(values, dtype=float)
        return cls(times, values, np.zeros_like(values), meta)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True, eq=False)
class DensityHistogram:
    observable: Observable
    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def integral(self) -> float:
        return float(np.sum(self.counts * np.diff(self.bin_edges)))


def centroid(observable: Observable, state: RingPolymerState):
    """(1/P) sum_j O(q_j), or O(p~_j) for momentum observables, over the last axis."""
    state.require(BEAD)
    values = state.positions if observable.kind == "position" else state.momenta
    return np.mean(observable(values), axis=-1)


def block_average(samples, n_blocks: int = N_BLOCKS):
    """Mean over axis 0 and its standard error from ``n_blocks`` contiguous blocks."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if n < n_blocks:
        raise ModelError(f"need at least {n_blocks} samples for block averaging, got {n}")
    blocks = np.array([b.mean(axis=0) for b in np.array_split(samples, n_blocks, axis=0)])
    mean = samples.mean(axis=0)
    err = blocks.std(axis=0, ddof=1) / np.sqrt(n_blocks)
    return mean, err


def static_control_variate(per_traj, exact_static: float, n_blocks: int = N_BLOCKS):
    """Regression control variate on the t = 0 column.

    ``per_traj`` holds per-trajectory correlation estimates (n_traj, n_lags).
    Each lag is corrected by b_k (C_0 - exact_static), with b_k the block-level
    regression slope of column k on column 0.  Returns (mean, std_error).
    """
    samples = np.asarray(per_traj, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < n_blocks:
        raise ModelError(f"need a (n_traj >= {n_blocks}, n_lags) array")
    blocks = np.array([b.mean(axis=0) for b in np.array_split(samples, n_blocks, axis=0)])
    x = blocks[:, 0] - exact_static
    dx = x - x.mean()
    var = np.dot(dx, dx)
    slope = (dx @ (blocks - blocks.mean(axis=0))) / var if var > 0 else np.zeros(samples.shape[1])
    corrected = blocks - np.outer(x, slope)
    return corrected.mean(axis=0), corrected.std(axis=0, ddof=1) / np.sqrt(n_blocks)


def oscillation_envelope(times, values, t_end: float, period: float) -> float:
    """Peak-to-trough of ``values`` over the last full period ending at ``t_end``."""
    times = np.asarray(times)
    window = (times >= t_end - period - 1e-12) & (times <= t_end + 1e-12)
    if window.sum() < 3:
        raise ModelError("window holds fewer than three samples")
    v = np.asarray(values)[window]
    return float(v.max() - v.min())


def resolve_workers(workers=None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _output_stride(dt_out: float, dt: float) -> int:
    ratio = dt_out / dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * max(1.0, ratio):
        raise ModelError(f"dt_out={dt_out:g} must be an integer multiple of dt={dt:g}")
    return stride


@dataclass(frozen=True)
class _Job:
    spec: SystemSpec
    scheme: MassScheme
    method: str
    A: Observable
    B: Observable
    sampler_cfg: SamplerConfig
    integrator_cfg: IntegratorConfig
    stride: int
    n_lags: int
    n_window: int
    origin_offset: int
    reverse_momenta: bool
    sampler: str
    first: int
    size: int


def _initial_positions(job: _Job, rng, basis):
    spec = job.spec
    use_exact = job.sampler == "exact" or (job.sampler == "auto" and isinstance(spec.potential, Harmonic))
    if use_exact:
        return sample_positions_harmonic(spec, job.size, rng, basis)
    return sample_positions_metropolis(spec, job.sampler_cfg, job.size, rng, basis)


def _run_batch(job: _Job) -> np.ndarray:
    """Per-trajectory time-origin-averaged B(0) A(t) for one batch of trajectories."""
    spec, cfg = job.spec, job.integrator_cfg
    basis = build_basis(spec)
    rng = substream(job.sampler_cfg.seed, job.first)
    beads = _initial_positions(job, rng, basis)
    if job.method == RPMD:
        momenta = sample_momenta(spec, job.scheme, rng, job.size, "bead")
        state = RingPolymerState(beads, -momenta if job.reverse_momenta else momenta, BEAD)
    else:
        momenta = sample_momenta(spec, job.scheme, rng, job.size, "normal_mode")
        state = RingPolymerState(basis.forward(beads), -momenta if job.reverse_momenta else momenta, NORMAL_MODE)

    n_out = job.origin_offset + job.n_window + job.n_lags
    a_series = np.empty((job.size, n_out))
    b_series = np.empty((job.size, n_out))
    for k in range(n_out):
        if k:
            for _ in range(job.stride):
                if job.method == RPMD:
                    state = step_ring_polymer(spec, job.scheme, state, cfg, basis)
                else:
                    state = step_normal_mode(spec, job.scheme, basis, state, cfg)
            if not np.all(np.isfinite(state.positions)):
                raise StabilityError(f"non-finite ring-polymer state after {k * job.stride} steps")
        bead_state = state if state.representation == BEAD else RingPolymerState(
            basis.inverse(state.positions), basis.inverse(state.momenta), BEAD)
        a_series[:, k] = centroid(job.A, bead_state)
        b_series[:, k] = centroid(job.B, bead_state)

    out = np.zeros((job.size, job.n_lags))
    origins = range(job.origin_offset, job.origin_offset + job.n_window + 1)
    for o in origins:
        out += b_series[:, o, None] * a_series[:, o:o + job.n_lags]
    return out / len(origins)


def correlation_ensemble(spec: SystemSpec, scheme: MassScheme, method: str, A: Observable, B: Observable,
                         n_traj: int, t_max: float, dt_out: float, sampler_cfg: SamplerConfig | None = None,
                         integrator_cfg: IntegratorConfig | None = None, *, t_window: float = 0.0,
                         origin_offset: int = 0, reverse_momenta: bool = False, sampler: str = "auto",
                         workers: int | None = 1, batch_size: int = 1024, return_samples: bool = False):
    """Ensemble estimate of <B_0(0) A_0(t)> on t = 0, dt_out, ..., t_max.

    ``method="rpmd"`` evolves beads with physical masses; ``"nm_ccd"``
    evolves normal modes with the mode masses of ``scheme``.  Each
    trajectory starts from an independent equilibrium configuration and is
    run for ``t_max + t_window``; correlations are averaged over time
    origins spaced ``dt_out`` apart inside the first ``t_window``.
    Standard errors come from 32 blocks of contiguous trajectories.

    Trajectories are processed in fixed batches of ``batch_size``; batch b
    draws from the random substream keyed by (seed, index of its first
    trajectory), so results are identical for any ``workers``.
    """
    validate_system(spec)
    if method not in (RPMD, NM_CCD):
        raise ModelError(f"ensemble method must be 'rpmd' or 'nm_ccd', got {method!r}")
    if method == RPMD and not is_physical(scheme, spec):
        raise ModelError("rpmd requires physical fictitious masses; use nm_ccd for other schemes")
    if n_traj < MIN_TRAJECTORIES:
        raise ModelError(f"n_traj must be >= {MIN_TRAJECTORIES} for meaningful error bars (got {n_traj})")
    if not (t_max >= 0 and dt_out > 0 and t_window >= 0):
        raise ModelError("t_max, t_window must be >= 0 and dt_out > 0")
    if sampler not in ("auto", "exact", "metropolis"):
        raise ModelError(f"unknown sampler {sampler!r}")
    sampler_cfg = sampler_cfg or SamplerConfig()
    if integrator_cfg is None:
        integrator_cfg = IntegratorConfig(dt=_dividing_dt(default_dt(spec, scheme, MODE_SPLIT), dt_out))
    stride = _output_stride(dt_out, integrator_cfg.dt)

    uses_momenta = A.kind == "momentum" or B.kind == "momentum"
    controlled = not uses_momenta or is_physical(scheme, spec)
    if not controlled:
        warnings.warn("momentum correlation with non-physical fictitious masses: fictitious momenta are "
                      "not tied to the physical momentum centroid; result is uncontrolled", stacklevel=2)

    n_lags = int(round(t_max / dt_out)) + 1
    n_window = int(round(t_window / dt_out))
    jobs = []
    for first in range(0, n_traj, batch_size):
        jobs.append(_Job(spec, scheme, method, A, B, sampler_cfg, integrator_cfg, stride, n_lags, n_window,
                         int(origin_offset), bool(reverse_momenta), sampler, first, min(batch_size, n_traj - first)))
    workers = resolve_workers(workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_run_batch, jobs))
    else:
        parts = [_run_batch(job) for job in jobs]
    per_traj = np.concatenate(parts, axis=0)
    mean, err = block_average(per_traj, N_BLOCKS)

    times = np.arange(n_lags) * dt_out
    meta = {
        "method": method,
        "observable_A": observable_to_dict(A),
        "observable_B": observable_to_dict(B),
        "system": system_to_dict(spec),
        "mass_scheme": scheme_to_dict(scheme),
        "n_trajectories": n_traj,
        "seed": sampler_cfg.seed,
        "dt": integrator_cfg.dt,
        "integrator": integrator_cfg.scheme,
        "t_window": n_window * dt_out,
        "controlled": controlled,
    }
    series = CorrelationSeries(times, mean, err, meta)
    return (series, per_traj) if return_samples else series


def _dividing_dt(dt: float, dt_out: float) -> float:
    """Largest step <= dt that divides dt_out exactly."""
    return dt_out / max(1, int(np.ceil(dt_out / dt - 1e-9)))


def density_histogram(spec: SystemSpec, observable: Observable, samples, bin_edges) -> DensityHistogram:
    """Normalized histogram of the centroid O_0 over equilibrium samples.

    ``samples`` is a batched bead-representation RingPolymerState, or a
    plain (n, P) array of bead positions for position observables.
    """
    if not isinstance(samples, RingPolymerState):
        if observable.kind != "position":
            raise ModelError("momentum observables need a RingPolymerState with momenta")
        positions = np.atleast_2d(np.asarray(samples, dtype=float))
        samples = RingPolymerState(positions, np.zeros_like(positions), BEAD)
    if samples.positions.shape[-1] != spec.n_beads:
        raise ModelError("samples do not match n_beads")
    values = np.ravel(centroid(observable, samples))
    if values.size == 0:
        raise ModelError("density histogram needs at least one sample")
    edges = np.asarray(bin_edges, dtype=float)
    counts, _ = np.histogram(values, bins=edges)
    inside = counts.sum()
    if inside == 0:
        raise ModelError("no samples fall inside the bin edges")
    density = counts / (inside * np.diff(edges))
    return DensityHistogram(observable, edges, density, int(values.size))


__all__ = [
    "CorrelationSeries", "DensityHistogram", "centroid", "block_average", "oscillation_envelope",
    "correlation_ensemble", "density_histogram", "static_control_variate", "resolve_workers", "RPMD", "NM_CCD", "METHODS",
]
