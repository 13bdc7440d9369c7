"""Equilibrium sampling of ring-polymer configurations and fictitious momenta.

Positions are drawn from exp(-beta_P V_P) with V_P the ring-polymer
potential (springs plus the physical potential on every bead); momenta are
independent Gaussians of variance m~ / beta_P.  Harmonic systems can be
sampled exactly mode by mode; everything else goes through a Metropolis
chain in normal-mode coordinates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import Harmonic, MassScheme, ModelError, SystemSpec, bead_masses, is_parity_symmetric, validate_system
from .normal_modes import NormalModeBasis, build_basis
from .potentials import global_minima, local_harmonic_frequency, potential_value

log = logging.getLogger(__name__)

TUNING_FACTOR = 1.3
TUNING_ROUNDS = 10
ACCEPTANCE_WINDOW = (0.2, 0.8)


class SamplerTuningError(RuntimeError):
    """Metropolis acceptance could not be brought into the target window."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SamplerConfig:
    burn_in_sweeps: int = 1000
    decorrelation_sweeps: int = 10
    step_scale: float = 1.0
    seed: int = 0
    tuning_sweeps: int = 20
    n_chains: int = 64

    def __post_init__(self):
        if self.burn_in_sweeps < 0:
            raise ModelError("burn_in_sweeps must be >= 0")
        if self.decorrelation_sweeps < 1:
            raise ModelError("decorrelation_sweeps must be >= 1")
        if not self.step_scale > 0:
            raise ModelError("step_scale must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ModelError("seed must be a 64-bit unsigned integer")
        if self.tuning_sweeps < 1 or self.n_chains < 1:
            raise ModelError("tuning_sweeps and n_chains must be >= 1")


@dataclass
class MetropolisDiagnostics:
    step_scales: np.ndarray
    mode_acceptance: np.ndarray
    overall_acceptance: float
    tuning_rounds: int
    omega_ref: float
    history: list = field(default_factory=list)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream keyed by (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_momenta(spec: SystemSpec, scheme: MassScheme, rng: np.random.Generator, n_samples=None,
                   representation: str = "bead") -> np.ndarray:
    """Gaussian fictitious momenta with variance m~/beta_P.

    ``representation="bead"`` needs uniform masses; ``"normal_mode"`` uses
    the mode-indexed masses of ``scheme``.
    """
    if representation == "bead":
        masses = bead_masses(scheme, spec)
    elif representation == "normal_mode":
        masses = scheme.mode_masses(spec)
    else:
        raise ModelError(f"unknown representation {representation!r}")
    shape = (spec.n_beads,) if n_samples is None else (n_samples, spec.n_beads)
    return rng.standard_normal(shape) * np.sqrt(masses / spec.beta_p)


def harmonic_mode_variances(spec: SystemSpec, basis: NormalModeBasis) -> np.ndarray:
    """Variance 1 / (beta_P m omega_n^2) of each normal-mode coordinate."""
    omega_n = basis.mode_frequencies_with_harmonic(spec.potential.omega)
    return 1.0 / (spec.beta_p * spec.mass * omega_n**2)


def sample_positions_harmonic(spec: SystemSpec, n_samples: int, rng: np.random.Generator,
                              basis: NormalModeBasis | None = None) -> np.ndarray:
    """Exact Gaussian bead configurations, shape (n_samples, P)."""
    if not isinstance(spec.potential, Harmonic):
        raise ModelError("exact Gaussian sampling requires a harmonic potential")
    basis = basis or build_basis(spec)
    sd = np.sqrt(harmonic_mode_variances(spec, basis))
    modes = rng.standard_normal((n_samples, spec.n_beads)) * sd
    return basis.inverse(modes)


class _Chains:
    """A batch of independent Metropolis chains moving one normal mode at a time."""

    def __init__(self, spec, basis, rng, n_chains, widths):
        self.spec = spec
        self.basis = basis
        self.rng = rng
        self.widths = widths
        P = spec.n_beads
        q0 = global_minima(spec.potential, spec.mass)
        start = np.full(n_chains, q0[-1])
        if is_parity_symmetric(spec.potential):
            start[1::2] = -q0[-1]
        self.beads = np.repeat(start[:, None], P, axis=1)
        self.modes = basis.forward(self.beads)
        self.vbead = potential_value(spec.potential, self.beads, spec.mass)
        self.accepted = np.zeros(P)
        self.proposed = 0

    def sweep(self):
        spec, U = self.spec, self.basis.matrix
        springs = 0.5 * self.basis.spring_constants
        bp = spec.beta_p
        n_chains = self.beads.shape[0]
        deltas = self.widths[:, None] * self.rng.standard_normal((spec.n_beads, n_chains))
        log_u = np.log(self.rng.random((spec.n_beads, n_chains)))
        for n in range(spec.n_beads):
            delta = deltas[n]
            trial = self.beads + delta[:, None] * U[n]
            vtrial = potential_value(spec.potential, trial, spec.mass)
            xn = self.modes[:, n]
            dv = np.sum(vtrial - self.vbead, axis=1) + springs[n] * ((xn + delta) ** 2 - xn**2)
            accept = log_u[n] < -bp * dv
            mask = accept[:, None]
            np.copyto(self.beads, trial, where=mask)
            np.copyto(self.vbead, vtrial, where=mask)
            self.modes[:, n] += np.where(accept, delta, 0.0)
            self.accepted[n] += np.count_nonzero(accept)
        self.proposed += n_chains

    def reset_counters(self):
        self.accepted[:] = 0.0
        self.proposed = 0

    def acceptance(self):
        return self.accepted / max(self.proposed, 1)

    def resync(self):
        # keep bead and mode copies from drifting apart by round-off
        self.beads = self.basis.inverse(self.modes)
        self.vbead = potential_value(self.spec.potential, self.beads, self.spec.mass)


def sample_positions_metropolis(spec: SystemSpec, config: SamplerConfig, n_samples: int,
                                rng: np.random.Generator, basis: NormalModeBasis | None = None,
                                return_diagnostics: bool = False):
    """Metropolis samples of bead configurations, shape (n_samples, P).

    ``config.n_chains`` chains (fewer if ``n_samples`` is smaller) are run
    side by side.  Each proposal displaces one normal mode n by a Gaussian
    of width s_n / sqrt(beta_P m (f_n + w_ref^2)); the per-mode multipliers
    s_n start at ``config.step_scale`` and are tuned by factors of 1.3
    until the acceptance of every mode lies in [0.2, 0.8] (at most 10
    rounds).  Tuning happens before the burn-in, so the retained chain has
    fixed proposals and satisfies detailed balance.
    """
    validate_system(spec)
    basis = basis or build_basis(spec)
    P = spec.n_beads
    omega_ref = local_harmonic_frequency(spec.potential, spec.mass, spec.beta)
    base = 1.0 / np.sqrt(spec.beta_p * spec.mass * (basis.free_mode_factors + omega_ref**2))
    scales = np.full(P, float(config.step_scale))
    n_chains = max(1, min(config.n_chains, n_samples))
    chains = _Chains(spec, basis, rng, n_chains, scales * base)

    lo, hi = ACCEPTANCE_WINDOW
    history = []
    rounds = 0
    for rounds in range(1, TUNING_ROUNDS + 1):
        chains.reset_counters()
        for _ in range(config.tuning_sweeps):
            chains.sweep()
        acc = chains.acceptance()
        history.append(acc.copy())
        if np.all((acc >= lo) & (acc <= hi)):
            break
        scales = np.where(acc > hi, scales * TUNING_FACTOR, np.where(acc < lo, scales / TUNING_FACTOR, scales))
        chains.widths = scales * base
    overall = float(np.mean(history[-1]))
    diag = MetropolisDiagnostics(scales.copy(), history[-1], overall, rounds, omega_ref, history)
    if not lo <= overall <= hi:
        raise SamplerTuningError(
            f"overall acceptance {overall:.3f} outside [{lo}, {hi}] after {rounds} tuning rounds", diag)
    bad = np.flatnonzero((history[-1] < lo) | (history[-1] > hi))
    if bad.size:
        log.warning("modes %s still outside the acceptance window after tuning", (bad + 1).tolist())

    for _ in range(config.burn_in_sweeps):
        chains.sweep()
    chains.resync()

    per_chain = -(-n_samples // n_chains)
    out = np.empty((per_chain, n_chains, P))
    chains.reset_counters()
    for k in range(per_chain):
        for _ in range(config.decorrelation_sweeps):
            chains.sweep()
        chains.resync()
        out[k] = chains.beads
    diag.mode_acceptance = chains.acceptance()
    diag.overall_acceptance = float(np.mean(diag.mode_acceptance))
    # chain-major order: all samples of chain 0 first
    samples = out.transpose(1, 0, 2).reshape(-1, P)[:n_samples]
    if return_diagnostics:
        return samples, diag
    return samples
