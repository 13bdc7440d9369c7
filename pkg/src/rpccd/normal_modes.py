"""Orthogonal bead <-> normal-mode transform of a cyclic ring polymer.

Modes are numbered n = 1..P and stored at index n - 1; mode P is the
centroid mode with zero spring frequency.  The default matrix is the real
Hartley-type basis

    U[n, j] = (cos(2 pi n j / P) - sin(2 pi n j / P)) / sqrt(P),

which is orthogonal and diagonalizes the spring term because rows n and
P - n mix only the two Fourier components sharing the eigenvalue
4 k_P sin^2(pi n / P).  ``convention="fourier"`` gives the paired cos/sin
basis instead; both carry identical mode frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BEAD, NORMAL_MODE, RingPolymerState, SystemSpec


@dataclass(frozen=True, eq=False)
class NormalModeBasis:
    """Transform matrix and free-polymer mode factors for one (m, beta, P).

    Attributes:
        n_beads: number of beads P.
        matrix: P x P orthogonal matrix; row n - 1 maps beads to mode n.
        free_mode_factors: f_n = 4 k_P sin^2(pi n / P) / m, the squared
            free-polymer frequency of mode n.
        mass: physical mass m (for converting f_n to spring constants).
    """

    n_beads: int
    matrix: np.ndarray
    free_mode_factors: np.ndarray
    mass: float
    convention: str = "hartley"

    def mode_frequencies_with_harmonic(self, omega: float) -> np.ndarray:
        """omega_n = sqrt(omega^2 + f_n)."""
        return np.sqrt(omega**2 + self.free_mode_factors)

    @property
    def spring_constants(self) -> np.ndarray:
        return self.mass * self.free_mode_factors

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Beads -> modes along the last axis."""
        return values @ self.matrix.T

    def inverse(self, values: np.ndarray) -> np.ndarray:
        """Modes -> beads along the last axis."""
        return values @ self.matrix


def _hartley(P: int) -> np.ndarray:
    n = np.arange(1, P + 1)[:, None]
    j = np.arange(1, P + 1)[None, :]
    arg = 2.0 * np.pi * ((n * j) % P) / P
    return (np.cos(arg) - np.sin(arg)) / np.sqrt(P)


def _fourier(P: int) -> np.ndarray:
    j = np.arange(1, P + 1)
    U = np.empty((P, P))
    for n in range(1, P + 1):
        arg = 2.0 * np.pi * ((n * j) % P) / P
        if n == P:
            U[n - 1] = 1.0 / np.sqrt(P)
        elif 2 * n == P:
            U[n - 1] = np.cos(arg) / np.sqrt(P)
        elif 2 * n < P:
            U[n - 1] = np.sqrt(2.0 / P) * np.cos(arg)
        else:
            U[n - 1] = np.sqrt(2.0 / P) * np.sin(arg)
    return U


def build_basis(spec: SystemSpec, convention: str = "hartley") -> NormalModeBasis:
    P = spec.n_beads
    if convention == "hartley":
        U = _hartley(P)
    elif convention == "fourier":
        U = _fourier(P)
    else:
        raise ValueError(f"unknown normal-mode convention {convention!r}")
    n = np.arange(1, P + 1)
    f = 4.0 * spec.k_p * np.sin(np.pi * n / P) ** 2 / spec.mass
    f[-1] = 0.0  # sin(pi) is not exactly zero in floating point
    U.setflags(write=False)
    f.setflags(write=False)
    return NormalModeBasis(P, U, f, float(spec.mass), convention)


def to_modes(basis: NormalModeBasis, state: RingPolymerState) -> RingPolymerState:
    state.require(BEAD)
    return RingPolymerState(basis.forward(state.positions), basis.forward(state.momenta), NORMAL_MODE)


def from_modes(basis: NormalModeBasis, state: RingPolymerState) -> RingPolymerState:
    state.require(NORMAL_MODE)
    return RingPolymerState(basis.inverse(state.positions), basis.inverse(state.momenta), BEAD)


def spring_energy(spec: SystemSpec, beads: np.ndarray) -> np.ndarray:
    """sum_j k_P (q_j - q_{j-1})^2 / 2 with q_0 = q_P, along the last axis."""
    diff = beads - np.roll(beads, 1, axis=-1)
    return 0.5 * spec.k_p * np.sum(diff * diff, axis=-1)


def spring_matrix(spec: SystemSpec) -> np.ndarray:
    """Circulant matrix K with spring energy q^T K q / 2."""
    P = spec.n_beads
    if P == 1:
        return np.zeros((1, 1))
    eye = np.eye(P)
    K = 2.0 * eye - np.roll(eye, 1, axis=1) - np.roll(eye, -1, axis=1)
    return spec.k_p * K
