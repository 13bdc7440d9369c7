"""Microcanonical ring-polymer dynamics in bead or normal-mode coordinates.

Two integrators are available:

* ``velocity_verlet`` -- the plain reference scheme with all forces
  (springs included) in the kick.
* ``mode_split`` -- the quadratic part of the Hamiltonian (free-polymer
  springs plus a reference harmonic term m w_ref^2 q^2 / 2) is propagated
  exactly as a set of independent oscillators, sandwiched between half
  kicks from the remaining anharmonic force.  For a harmonic potential the
  remainder vanishes and each step is the exact flow.

States may carry leading batch axes; every replica is advanced together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (BEAD, NORMAL_MODE, Harmonic, MassScheme, ModelError, RingPolymerState, SystemSpec,
                    bead_masses)
from .normal_modes import NormalModeBasis, build_basis, spring_energy
from .potentials import potential_gradient, potential_value

VELOCITY_VERLET = "velocity_verlet"
MODE_SPLIT = "mode_split"
STABILITY_LIMIT = 0.2


class StabilityError(RuntimeError):
    """Time step too large for the fastest mode, or the state blew up."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    scheme: str = MODE_SPLIT
    n_steps: int = 0
    omega_local: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ModelError("dt must be > 0")
        if self.scheme not in (VELOCITY_VERLET, MODE_SPLIT):
            raise ModelError(f"unknown integrator scheme {self.scheme!r}")
        if self.n_steps < 0:
            raise ModelError("n_steps must be >= 0")


def reference_frequency(spec: SystemSpec, cfg: IntegratorConfig) -> float:
    """Harmonic frequency treated exactly by ``mode_split`` (and used by the stability guard)."""
    if isinstance(spec.potential, Harmonic):
        return float(spec.potential.omega)
    return float(cfg.omega_local or 0.0)


def max_frequency(spec: SystemSpec, mode_masses: np.ndarray, basis: NormalModeBasis, omega_loc: float) -> float:
    return float(np.max(np.sqrt(basis.free_mode_factors + omega_loc**2) * np.sqrt(spec.mass / mode_masses)))


def check_stability(spec: SystemSpec, mode_masses, basis: NormalModeBasis, cfg: IntegratorConfig):
    if cfg.scheme != VELOCITY_VERLET:
        return
    w = max_frequency(spec, mode_masses, basis, reference_frequency(spec, cfg))
    if cfg.dt * w > STABILITY_LIMIT:
        raise StabilityError(
            f"velocity Verlet needs dt * omega_max <= {STABILITY_LIMIT}; got dt={cfg.dt:g}, omega_max={w:g}")


def default_dt(spec: SystemSpec, scheme: MassScheme, integrator: str = MODE_SPLIT,
               basis: NormalModeBasis | None = None) -> float:
    """0.02 / omega for harmonic runs, 0.01 otherwise; velocity Verlet is
    further limited to dt * omega_max <= 0.02."""
    if isinstance(spec.potential, Harmonic):
        dt = 0.02 / spec.potential.omega
        omega_loc = spec.potential.omega
    else:
        dt = 0.01
        omega_loc = 0.0
    if integrator == VELOCITY_VERLET:
        basis = basis or build_basis(spec)
        w = max_frequency(spec, scheme.mode_masses(spec), basis, omega_loc)
        if w > 0:
            dt = min(dt, 0.02 / w)
    return dt


# ---------------------------------------------------------------------------
# array kernels (modes along the last axis)


def _exact_rotation(x, p, masses, omega, dt):
    """Exact flow of H = p^2/2m~ + m~ Omega^2 x^2 / 2 for each mode."""
    c = np.cos(omega * dt)
    s = np.sin(omega * dt)
    mw = masses * omega
    # free drift where Omega == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sin_over = np.where(omega > 0, s / mw, dt / masses)
    x_new = c * x + sin_over * p
    p_new = c * p - mw * s * x
    return x_new, p_new


def _mode_split_frequencies(spec, basis, masses, cfg):
    """Omega_n for the exactly-propagated quadratic part, and w_ref."""
    w_ref = reference_frequency(spec, cfg)
    stiffness = spec.mass * (basis.free_mode_factors + w_ref**2)
    return np.sqrt(stiffness / masses), w_ref


def _remainder_gradient_beads(spec, beads, w_ref):
    if isinstance(spec.potential, Harmonic):
        return np.zeros_like(beads)
    grad = potential_gradient(spec.potential, beads, spec.mass)
    if w_ref:
        grad = grad - spec.mass * w_ref**2 * beads
    return grad


def _vv_bead(spec, q, p, m, cfg):
    def force(q):
        springs = spec.k_p * (2.0 * q - np.roll(q, 1, axis=-1) - np.roll(q, -1, axis=-1))
        return -springs - potential_gradient(spec.potential, q, spec.mass)

    dt = cfg.dt
    p = p + 0.5 * dt * force(q)
    q = q + dt * p / m
    p = p + 0.5 * dt * force(q)
    return q, p


def _vv_mode(spec, basis, x, p, masses, cfg):
    def force(x):
        beads = basis.inverse(x)
        return -basis.spring_constants * x - basis.forward(potential_gradient(spec.potential, beads, spec.mass))

    dt = cfg.dt
    p = p + 0.5 * dt * force(x)
    x = x + dt * p / masses
    p = p + 0.5 * dt * force(x)
    return x, p


def _split_mode(spec, basis, x, p, masses, cfg):
    omega, w_ref = _mode_split_frequencies(spec, basis, masses, cfg)
    dt = cfg.dt
    if not isinstance(spec.potential, Harmonic):
        p = p - 0.5 * dt * basis.forward(_remainder_gradient_beads(spec, basis.inverse(x), w_ref))
    x, p = _exact_rotation(x, p, masses, omega, dt)
    if not isinstance(spec.potential, Harmonic):
        p = p - 0.5 * dt * basis.forward(_remainder_gradient_beads(spec, basis.inverse(x), w_ref))
    return x, p


def _split_bead(spec, basis, q, p, masses, cfg):
    omega, w_ref = _mode_split_frequencies(spec, basis, masses, cfg)
    dt = cfg.dt
    harmonic = isinstance(spec.potential, Harmonic)
    if not harmonic:
        p = p - 0.5 * dt * _remainder_gradient_beads(spec, q, w_ref)
    x, pn = _exact_rotation(basis.forward(q), basis.forward(p), masses, omega, dt)
    q, p = basis.inverse(x), basis.inverse(pn)
    if not harmonic:
        p = p - 0.5 * dt * _remainder_gradient_beads(spec, q, w_ref)
    return q, p


# ---------------------------------------------------------------------------
# public steppers


def step_ring_polymer(spec: SystemSpec, scheme: MassScheme, state: RingPolymerState, cfg: IntegratorConfig,
                      basis: NormalModeBasis | None = None) -> RingPolymerState:
    """Advance a bead-representation state by one ``cfg.dt``.

    Masses must be uniform over beads.  The force on bead j is
    -k_P (2 q_j - q_{j+1} - q_{j-1}) - V'(q_j) with cyclic indexing.
    """
    state.require(BEAD)
    masses = bead_masses(scheme, spec)
    basis = basis or build_basis(spec)
    check_stability(spec, masses, basis, cfg)
    if cfg.scheme == VELOCITY_VERLET:
        q, p = _vv_bead(spec, state.positions, state.momenta, masses[0], cfg)
    else:
        q, p = _split_bead(spec, basis, state.positions, state.momenta, masses, cfg)
    return RingPolymerState(q, p, BEAD)


def step_normal_mode(spec: SystemSpec, scheme: MassScheme, basis: NormalModeBasis, state: RingPolymerState,
                     cfg: IntegratorConfig) -> RingPolymerState:
    """Advance a normal-mode state by one ``cfg.dt`` with mode-indexed masses.

    The physical-potential gradient is obtained by mapping modes back to
    beads, evaluating V' per bead and forward-transforming the result.
    """
    state.require(NORMAL_MODE)
    masses = scheme.mode_masses(spec)
    check_stability(spec, masses, basis, cfg)
    if cfg.scheme == VELOCITY_VERLET:
        x, p = _vv_mode(spec, basis, state.positions, state.momenta, masses, cfg)
    else:
        x, p = _split_mode(spec, basis, state.positions, state.momenta, masses, cfg)
    return RingPolymerState(x, p, NORMAL_MODE)


def propagate(spec: SystemSpec, scheme: MassScheme, state: RingPolymerState, cfg: IntegratorConfig,
              basis: NormalModeBasis | None = None, n_steps: int | None = None) -> RingPolymerState:
    """Take ``n_steps`` (default ``cfg.n_steps``) steps in the state's own representation."""
    basis = basis or build_basis(spec)
    n_steps = cfg.n_steps if n_steps is None else n_steps
    for _ in range(n_steps):
        if state.representation == BEAD:
            state = step_ring_polymer(spec, scheme, state, cfg, basis)
        else:
            state = step_normal_mode(spec, scheme, basis, state, cfg)
    return state


def conserved_energy(spec: SystemSpec, scheme: MassScheme, state: RingPolymerState,
                     basis: NormalModeBasis | None = None):
    """Ring-polymer Hamiltonian in whichever representation ``state`` is in."""
    if state.representation == BEAD:
        m = bead_masses(scheme, spec)
        q = state.positions
        kinetic = np.sum(state.momenta**2 / (2.0 * m), axis=-1)
        return kinetic + spring_energy(spec, q) + np.sum(potential_value(spec.potential, q, spec.mass), axis=-1)
    basis = basis or build_basis(spec)
    masses = scheme.mode_masses(spec)
    x = state.positions
    kinetic = np.sum(state.momenta**2 / (2.0 * masses), axis=-1)
    springs = np.sum(0.5 * basis.spring_constants * x * x, axis=-1)
    return kinetic + springs + np.sum(potential_value(spec.potential, basis.inverse(x), spec.mass), axis=-1)
