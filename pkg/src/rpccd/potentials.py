"""Values and derivatives of the 1-D potentials.

Every function accepts scalars or arrays for ``q`` and broadcasts.  The
harmonic potential needs the particle mass; the other variants ignore it.
"""

from __future__ import annotations

import numpy as np

from .model import DoubleWell, Harmonic, ModelError, Polynomial, PotentialSpec, Quartic, horner


def as_polynomial(potential: PotentialSpec, mass: float = 1.0) -> Polynomial:
    """Rewrite any supported potential as an explicit polynomial."""
    if isinstance(potential, Harmonic):
        return Polynomial((0.0, 0.0, 0.5 * mass * potential.omega**2))
    if isinstance(potential, Quartic):
        return Polynomial((0.0, 0.0, 0.0, 0.0, 0.25 * potential.a))
    if isinstance(potential, DoubleWell):
        return Polynomial((0.0, 0.0, -0.5 * potential.b, 0.0, 0.25 * potential.a))
    if isinstance(potential, Polynomial):
        return potential
    raise ModelError(f"unknown potential {potential!r}")


def _derivative_coefficients(coefficients, order=1):
    c = np.asarray(coefficients, dtype=float)
    for _ in range(order):
        if len(c) == 1:
            return np.zeros(1)
        c = c[1:] * np.arange(1, len(c))
    return c


def potential_value(potential: PotentialSpec, q, mass: float = 1.0):
    q = np.asarray(q, dtype=float)
    if isinstance(potential, Harmonic):
        return 0.5 * mass * potential.omega**2 * q * q
    if isinstance(potential, Quartic):
        q2 = q * q
        return 0.25 * potential.a * q2 * q2
    if isinstance(potential, DoubleWell):
        q2 = q * q
        return 0.25 * potential.a * q2 * q2 - 0.5 * potential.b * q2
    if isinstance(potential, Polynomial):
        return horner(potential.coefficients, q)
    raise ModelError(f"unknown potential {potential!r}")


def potential_gradient(potential: PotentialSpec, q, mass: float = 1.0):
    """dV/dq; the force is its negation."""
    q = np.asarray(q, dtype=float)
    if isinstance(potential, Harmonic):
        return mass * potential.omega**2 * q
    if isinstance(potential, Quartic):
        return potential.a * q * q * q
    if isinstance(potential, DoubleWell):
        return potential.a * q * q * q - potential.b * q
    if isinstance(potential, Polynomial):
        return horner(_derivative_coefficients(potential.coefficients), q)
    raise ModelError(f"unknown potential {potential!r}")


def potential_curvature(potential: PotentialSpec, q, mass: float = 1.0):
    """d^2V/dq^2."""
    poly = as_polynomial(potential, mass)
    return horner(_derivative_coefficients(poly.coefficients, 2), np.asarray(q, dtype=float))


def global_minima(potential: PotentialSpec, mass: float = 1.0) -> np.ndarray:
    """Positions of the lowest minimum (all of them when degenerate), ascending."""
    poly = as_polynomial(potential, mass)
    dcoef = _derivative_coefficients(poly.coefficients)
    if not np.any(dcoef):
        return np.zeros(1)
    roots = np.roots(dcoef[::-1])
    real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    if real.size == 0:
        raise ModelError("potential has no stationary point")
    values = potential_value(potential, real, mass)
    vmin = values.min()
    tol = 1e-12 * max(1.0, abs(vmin))
    best = real[values <= vmin + tol]
    # merge numerically repeated roots (e.g. the triple root of q^4)
    merged = [best[0]]
    for r in best[1:]:
        if abs(r - merged[-1]) > 1e-6:
            merged.append(r)
    return np.array(merged)


def local_harmonic_frequency(potential: PotentialSpec, mass: float, beta: float, floor: float = 1e-3) -> float:
    """Frequency of the best harmonic fit to V around its global minimum.

    The fit is a least-squares fit of V - V_min ~ m w^2 (q - q_min)^2 / 2
    over the contiguous window where V - V_min <= 1/beta, so flat-bottomed
    potentials (pure quartic) still get a thermally sensible frequency.
    Harmonic potentials return their own frequency exactly.
    """
    if isinstance(potential, Harmonic):
        return float(potential.omega)
    q0 = float(global_minima(potential, mass)[0])
    v0 = float(potential_value(potential, q0, mass))
    limit = 1.0 / beta

    def edge(direction):
        step = 1e-3
        while step < 1e6 and potential_value(potential, q0 + direction * step, mass) - v0 < limit:
            step *= 2.0
        lo, hi = step / 2.0, step
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if potential_value(potential, q0 + direction * mid, mass) - v0 < limit:
                lo = mid
            else:
                hi = mid
        return hi

    dq = np.linspace(-edge(-1.0), edge(1.0), 401)
    dv = potential_value(potential, q0 + dq, mass) - v0
    x = 0.5 * dq * dq
    k = float(np.dot(x, dv) / np.dot(x, x))
    return max(float(np.sqrt(max(k, 0.0) / mass)), floor)
