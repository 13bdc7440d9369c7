"""Reference correlation functions.

Closed forms for the harmonic oscillator (exact Kubo q^2 autocorrelation,
its finite-P ring-polymer and normal-mode counterparts), and a numerically
exact Kubo oracle for any 1-D potential built on grid diagonalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .estimators import CorrelationSeries
from .model import (Harmonic, MassScheme, ModelError, Observable, SystemSpec, observable_to_dict, scheme_to_dict,
                    system_to_dict, validate_system)
from .normal_modes import build_basis
from .potentials import potential_value

DEGENERACY_TOL = 1e-10
KEEP_WEIGHT = 1e-14
LEAKAGE_TOL = 1e-12


def _require_harmonic(spec: SystemSpec) -> float:
    if not isinstance(spec.potential, Harmonic):
        raise ModelError("closed-form correlation functions need a harmonic potential")
    return float(spec.potential.omega)


def _meta(method, spec, **extra):
    q2 = observable_to_dict(Observable.q_squared())
    meta = {"method": method, "observable_A": q2, "observable_B": q2, "system": system_to_dict(spec),
            "n_trajectories": 0, "seed": None}
    meta.update(extra)
    return meta


def analytic_kubo_q2(spec: SystemSpec, times) -> CorrelationSeries:
    """Exact Kubo-transformed <q^2(0) q^2(t)> of the harmonic oscillator."""
    omega = _require_harmonic(spec)
    m, beta, hbar = spec.mass, spec.beta, spec.hbar
    times = np.asarray(times, dtype=float)
    x = beta * hbar * omega
    coth = 1.0 / np.tanh(0.5 * x)
    values = hbar**2 / (4.0 * m**2 * omega**2) * (
        2.0 / x * coth * np.cos(2.0 * omega * times) + 2.0 * coth**2 - 1.0)
    return CorrelationSeries.exact(times, values, **_meta("analytic_kubo", spec))


def analytic_kubo_qq(spec: SystemSpec, times) -> CorrelationSeries:
    """Exact Kubo <q(0) q(t)> = cos(omega t) / (beta m omega^2) of the harmonic oscillator."""
    omega = _require_harmonic(spec)
    times = np.asarray(times, dtype=float)
    values = np.cos(omega * times) / (spec.beta * spec.mass * omega**2)
    meta = _meta("analytic_kubo", spec)
    meta["observable_A"] = meta["observable_B"] = observable_to_dict(Observable.q())
    return CorrelationSeries.exact(times, values, **meta)


def _ring_polymer_q2(spec: SystemSpec, times, mode_frequencies, oscillation_frequencies):
    w2 = mode_frequencies**2
    inv4 = 1.0 / w2**2
    times = np.asarray(times, dtype=float)
    static = np.sum(inv4) + np.sum(1.0 / w2) ** 2
    osc = np.cos(2.0 * np.outer(times, oscillation_frequencies)) @ inv4
    return (osc + static) / (spec.beta**2 * spec.mass**2)


def analytic_rpmd_q2(spec: SystemSpec, times, n_beads: int | None = None) -> CorrelationSeries:
    """Finite-P ring-polymer <q^2_0(0) q^2_0(t)> for the harmonic oscillator.

    Mode n oscillates at omega_n = sqrt(omega^2 + (4 k_P / m) sin^2(pi n / P)).
    """
    omega = _require_harmonic(spec)
    if n_beads is not None:
        spec = spec.replace(n_beads=n_beads)
    validate_system(spec)
    wn = build_basis(spec).mode_frequencies_with_harmonic(omega)
    values = _ring_polymer_q2(spec, times, wn, wn)
    return CorrelationSeries.exact(times, values, **_meta("analytic_rpmd", spec))


def analytic_nm_ccd_q2(spec: SystemSpec, scheme: MassScheme, times) -> CorrelationSeries:
    """Normal-mode dynamics counterpart: mode n oscillates at omega_n sqrt(m / m~_n)."""
    omega = _require_harmonic(spec)
    validate_system(spec)
    wn = build_basis(spec).mode_frequencies_with_harmonic(omega)
    big_omega = wn * np.sqrt(spec.mass / scheme.mode_masses(spec))
    values = _ring_polymer_q2(spec, times, wn, big_omega)
    return CorrelationSeries.exact(times, values, **_meta("analytic_nm", spec, mass_scheme=scheme_to_dict(scheme)))


# ---------------------------------------------------------------------------
# grid oracle


class GridError(RuntimeError):
    """The grid box is too small for the thermal state."""


@dataclass(frozen=True)
class GridSpec:
    q_min: float
    q_max: float
    n_points: int

    def __post_init__(self):
        if not self.q_min < self.q_max:
            raise ModelError("grid needs q_min < q_max")
        if self.n_points < 16:
            raise ModelError("grid needs n_points >= 16")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """All grid eigenpairs of H = p^2 / 2m + V(q).

    ``states[:, i]`` is eigenvector i with unit Euclidean norm, so that
    sum_k |states[k, i]|^2 = 1; the wavefunction is states / sqrt(h).
    ``n_kept`` counts levels with exp(-beta (E_i - E_0)) >= 1e-14.
    """

    energies: np.ndarray
    states: np.ndarray
    grid: GridSpec
    mass: float
    hbar: float
    beta: float
    n_kept: int
    kinetic: str

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def first_derivative(self) -> np.ndarray:
        """Grid matrix of d/dq consistent with the kinetic discretization."""
        n, h = self.grid.n_points, self.grid.spacing
        if self.kinetic == "sinc":
            d = np.subtract.outer(np.arange(n), np.arange(n)).astype(float)
            with np.errstate(divide="ignore"):
                D = np.where(d == 0, 0.0, (-1.0) ** np.abs(d) / (np.where(d == 0, 1.0, d) * h))
            return D
        return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2.0 * h)

    def second_derivative(self) -> np.ndarray:
        return _second_derivative(self.grid, self.kinetic)

    def operator_matrix(self, observable: Observable) -> np.ndarray:
        """Grid representation of a position or momentum polynomial."""
        if observable.kind == "position":
            return np.diag(observable(self.points))
        hb = self.hbar
        p1 = -1j * hb * self.first_derivative()
        p2 = -(hb**2) * self.second_derivative()
        n = self.grid.n_points
        total = np.zeros((n, n), dtype=complex)
        power = np.eye(n, dtype=complex)  # p2^(k // 2)
        for k, c in enumerate(observable.coefficients):
            if k >= 2 and k % 2 == 0:
                power = power @ p2
            if c == 0.0:
                continue
            term = power if k % 2 == 0 else power @ p1
            total += c * term
        return total

    def eigen_matrix(self, observable: Observable) -> np.ndarray:
        """<i|O|j> in the eigenbasis."""
        S = self.states
        if observable.kind == "position":
            return (S.T * observable(self.points)) @ S
        return S.T @ self.operator_matrix(observable) @ S

    def thermal_density(self) -> np.ndarray:
        w = np.exp(-self.beta * (self.energies[: self.n_kept] - self.energies[0]))
        return (self.states[:, : self.n_kept] ** 2) @ w / (np.sum(w) * self.grid.spacing)

    def thermal_expectation(self, observable: Observable) -> float:
        """Ordinary canonical average Tr[e^{-beta H} O] / Z."""
        w = np.exp(-self.beta * (self.energies - self.energies[0]))
        diag = np.real(np.diag(self.eigen_matrix(observable)))
        return float(np.sum(w * diag) / np.sum(w))


def _second_derivative(grid: GridSpec, kinetic: str) -> np.ndarray:
    n, h = grid.n_points, grid.spacing
    if kinetic == "sinc":
        d = np.subtract.outer(np.arange(n), np.arange(n)).astype(float)
        with np.errstate(divide="ignore"):
            off = -2.0 * (-1.0) ** np.abs(d) / np.where(d == 0, 1.0, d) ** 2
        return np.where(d == 0, -np.pi**2 / 3.0, off) / h**2
    if kinetic == "fd3":
        return (np.eye(n, k=1) - 2.0 * np.eye(n) + np.eye(n, k=-1)) / h**2
    raise ModelError(f"unknown kinetic discretization {kinetic!r}")


def solve_schrodinger(spec: SystemSpec, grid: GridSpec, kinetic: str = "sinc",
                      check_leakage: bool = True) -> EigenSolution:
    """Diagonalize the grid Hamiltonian.

    ``kinetic="sinc"`` is the Colbert-Miller sinc DVR (spectral accuracy);
    ``"fd3"`` is the three-point finite difference, kept for convergence
    studies.  Raises GridError when the thermal density at either end of
    the box exceeds 1e-12 of its peak.
    """
    validate_system(spec)
    D2 = _second_derivative(grid, kinetic)
    H = -(spec.hbar**2) / (2.0 * spec.mass) * D2 + np.diag(potential_value(spec.potential, grid.points, spec.mass))
    energies, states = eigh(H)
    weights = np.exp(-spec.beta * (energies - energies[0]))
    n_kept = int(np.sum(weights >= KEEP_WEIGHT))
    sol = EigenSolution(energies, states, grid, float(spec.mass), float(spec.hbar), float(spec.beta), n_kept, kinetic)
    if check_leakage:
        rho = sol.thermal_density()
        edge = max(rho[0], rho[-1]) / rho.max()
        if edge > LEAKAGE_TOL:
            raise GridError(f"thermal density at the box edge is {edge:.2e} of its peak; enlarge the box "
                            f"[{grid.q_min}, {grid.q_max}]")
    return sol


def kubo_weights(energies: np.ndarray, beta: float, rows: np.ndarray) -> np.ndarray:
    """w_ij = (e^{-beta E_i} - e^{-beta E_j}) / (beta (E_j - E_i)) for i in ``rows``, all j.

    Evaluated as e^{-beta min(E_i, E_j)} (1 - e^{-beta |E_j - E_i|}) / (beta |E_j - E_i|)
    with energies measured from E_0; the degenerate limit is e^{-beta E_i}.
    """
    e = energies - energies[0]
    ei = e[rows][:, None]
    ej = e[None, :]
    gap = np.abs(ej - ei)
    degenerate = gap < DEGENERACY_TOL * np.maximum(1.0, np.abs(ei))
    x = beta * np.where(degenerate, 1.0, gap)
    ratio = np.where(degenerate, 1.0, -np.expm1(-x) / x)
    return np.exp(-beta * np.minimum(ei, ej)) * ratio


def kubo_correlation(sol: EigenSolution, A: Observable, B: Observable, beta: float, times) -> CorrelationSeries:
    """Exact Kubo-transformed <B(0) A(t)> from the grid eigenbasis.

    C(t) = (1/Z) sum_ij w_ij B_ij A_ji cos((E_i - E_j) t / hbar); every pair
    with at least one thermally populated level enters.
    """
    if (A.kind == "momentum") != (B.kind == "momentum"):
        raise ModelError("mixed position/momentum correlations are not supported")
    times = np.asarray(times, dtype=float)
    e = sol.energies
    weights = np.exp(-beta * (e - e[0]))
    n_kept = int(np.sum(weights >= KEEP_WEIGHT))
    Z = np.sum(weights)
    Am = sol.eigen_matrix(A)
    Bm = sol.eigen_matrix(B)
    N = e.size
    kept = np.arange(n_kept)
    rest = np.arange(n_kept, N)

    def block(rows, cols):
        w = kubo_weights(e, beta, rows)[:, cols]
        amp = np.real(Bm[np.ix_(rows, cols)] * Am[np.ix_(cols, rows)].T)
        gap = (e[rows][:, None] - e[cols][None, :]) / sol.hbar
        return (w * amp).ravel(), gap.ravel()

    w1, g1 = block(kept, np.arange(N))
    w2, g2 = block(rest, kept) if rest.size else (np.zeros(0), np.zeros(0))
    amps = np.concatenate([w1, w2])
    gaps = np.concatenate([g1, g2])
    values = np.empty_like(times)
    for start in range(0, times.size, 64):
        chunk = times[start:start + 64]
        values[start:start + 64] = np.cos(np.outer(chunk, gaps)) @ amps / Z
    meta = {"method": "dvr_oracle", "observable_A": observable_to_dict(A), "observable_B": observable_to_dict(B),
            "beta": beta, "grid": {"q_min": sol.grid.q_min, "q_max": sol.grid.q_max, "n_points": sol.grid.n_points},
            "kinetic": sol.kinetic, "n_trajectories": 0, "seed": None}
    return CorrelationSeries.exact(times, values, **meta)
