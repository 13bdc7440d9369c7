"""Core value types: physical system, potentials, mass schemes, observables.

Units follow hbar = k_B = 1 unless ``hbar`` is set explicitly; temperature
always enters through the inverse temperature ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


class ModelError(ValueError):
    """A domain type was built or used with inconsistent parameters."""


class RepresentationError(ValueError):
    """A ring-polymer state is in the wrong (bead / normal-mode) representation."""


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Harmonic:
    """V(q) = m omega^2 q^2 / 2 (the mass is supplied at evaluation time)."""

    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ModelError("harmonic omega must be > 0")


@dataclass(frozen=True)
class Quartic:
    """V(q) = a q^4 / 4."""

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ModelError("quartic a must be > 0")


@dataclass(frozen=True)
class DoubleWell:
    """V(q) = a q^4 / 4 - b q^2 / 2, minima at q = +-sqrt(b/a)."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise ModelError("double_well a must be > 0")
        if not self.b > 0:
            raise ModelError("double_well b must be > 0")


@dataclass(frozen=True)
class Polynomial:
    """V(q) = sum_k c_k q^k."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ModelError("polynomial needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ModelError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.coefficients) if c != 0.0]
        return nz[-1] if nz else 0


PotentialSpec = Union[Harmonic, Quartic, DoubleWell, Polynomial]


def is_parity_symmetric(potential: PotentialSpec) -> bool:
    if isinstance(potential, (Harmonic, Quartic, DoubleWell)):
        return True
    return all(c == 0.0 for c in potential.coefficients[1::2])


# ---------------------------------------------------------------------------
# system


@dataclass(frozen=True)
class SystemSpec:
    """A 1-D particle of mass ``mass`` in ``potential`` at inverse temperature
    ``beta``, discretized into a ring polymer of ``n_beads`` beads."""

    mass: float
    beta: float
    n_beads: int
    potential: PotentialSpec
    hbar: float = 1.0

    @property
    def beta_p(self) -> float:
        return self.beta / self.n_beads

    @property
    def k_p(self) -> float:
        """Spring constant m / (beta_P hbar)^2 between neighbouring beads."""
        return self.mass / (self.beta_p**2 * self.hbar**2)

    def replace(self, **changes) -> "SystemSpec":
        from dataclasses import replace

        return replace(self, **changes)


def validate_system(spec: SystemSpec) -> SystemSpec:
    """Return ``spec`` unchanged, or raise ModelError naming the first broken invariant."""
    for name in ("mass", "beta", "hbar"):
        value = getattr(spec, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ModelError(f"{name} must be > 0 (got {value!r})")
    if not isinstance(spec.n_beads, (int, np.integer)) or isinstance(spec.n_beads, bool):
        raise ModelError(f"n_beads must be an integer (got {spec.n_beads!r})")
    if spec.n_beads < 1:
        raise ModelError("n_beads must be >= 1")
    if not isinstance(spec.potential, (Harmonic, Quartic, DoubleWell, Polynomial)):
        raise ModelError(f"unknown potential {spec.potential!r}")
    if isinstance(spec.potential, Polynomial):
        deg = spec.potential.degree
        lead = spec.potential.coefficients[deg]
        if deg % 2 == 1 or lead < 0:
            raise ModelError("potential unbounded below")
        if deg < 2:
            raise ModelError("potential not confining (polynomial degree must be >= 2)")
    if not (math.isfinite(spec.k_p) and spec.k_p > 0):
        raise ModelError("derived spring constant k_P is not finite and positive")
    return spec


# ---------------------------------------------------------------------------
# fictitious masses


def _sin2(n_beads: int) -> np.ndarray:
    n = np.arange(1, n_beads + 1)
    return np.sin(np.pi * n / n_beads) ** 2


@dataclass(frozen=True)
class Physical:
    """All fictitious masses equal the physical mass (RPMD)."""

    def mode_masses(self, spec: SystemSpec) -> np.ndarray:
        return np.full(spec.n_beads, float(spec.mass))


@dataclass(frozen=True)
class MatchedFrequency:
    """Mode masses m (1 + 4 sin^2(pi n / P) / (beta_P hbar omega)^2).

    With a harmonic potential of frequency ``omega`` every normal mode then
    oscillates at ``omega``.
    """

    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ModelError("matched_frequency omega must be > 0")

    def mode_masses(self, spec: SystemSpec) -> np.ndarray:
        scale = 4.0 * spec.mass / (spec.beta_p**2 * spec.hbar**2 * self.omega**2)
        return spec.mass + scale * _sin2(spec.n_beads)


@dataclass(frozen=True)
class Custom:
    """Explicit mode-indexed masses, entry n-1 belonging to mode n (n = P is the centroid)."""

    masses: tuple

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        if not all(math.isfinite(m) and m > 0 for m in masses):
            raise ModelError("every fictitious mass must be > 0")
        object.__setattr__(self, "masses", masses)

    def mode_masses(self, spec: SystemSpec) -> np.ndarray:
        if len(self.masses) != spec.n_beads:
            raise ModelError(f"custom scheme has {len(self.masses)} masses, need n_beads={spec.n_beads}")
        return np.array(self.masses)


MassScheme = Union[Physical, MatchedFrequency, Custom]


def bead_masses(scheme: MassScheme, spec: SystemSpec) -> np.ndarray:
    """Per-bead masses; defined only when every mode mass is the same."""
    masses = scheme.mode_masses(spec)
    if not np.all(masses == masses[0]):
        raise ModelError("non-uniform fictitious masses are mode-indexed; use normal-mode dynamics")
    return masses


def is_physical(scheme: MassScheme, spec: SystemSpec) -> bool:
    return bool(np.all(scheme.mode_masses(spec) == spec.mass))


# ---------------------------------------------------------------------------
# observables


def horner(coefficients: Sequence[float], x):
    """sum_k c_k x^k by Horner's rule."""
    result = np.zeros_like(np.asarray(x, dtype=float))
    for c in reversed(coefficients):
        result = result * x + c
    return result


@dataclass(frozen=True)
class Observable:
    """Polynomial in position only or in momentum only.

    Mixed position-momentum products are not representable; use the
    ``position`` / ``momentum`` constructors or the ``q``, ``p``,
    ``q_squared`` shortcuts.
    """

    kind: str
    coefficients: tuple

    def __post_init__(self):
        if self.kind not in ("position", "momentum"):
            raise ModelError(
                f"observable kind must be 'position' or 'momentum' (got {self.kind!r}); "
                "mixed q-p composites are not supported"
            )
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ModelError("observable needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def position(cls, coefficients) -> "Observable":
        return cls("position", tuple(coefficients))

    @classmethod
    def momentum(cls, coefficients) -> "Observable":
        return cls("momentum", tuple(coefficients))

    @classmethod
    def q(cls) -> "Observable":
        return cls.position((0.0, 1.0))

    @classmethod
    def p(cls) -> "Observable":
        return cls.momentum((0.0, 1.0))

    @classmethod
    def q_squared(cls) -> "Observable":
        return cls.position((0.0, 0.0, 1.0))

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.coefficients) if c != 0.0]
        return nz[-1] if nz else 0

    def __call__(self, values):
        return horner(self.coefficients, np.asarray(values, dtype=float))

    def label(self) -> str:
        var = "q" if self.kind == "position" else "p"
        terms = []
        for k, c in enumerate(self.coefficients):
            if c == 0.0:
                continue
            mono = "1" if k == 0 else (var if k == 1 else f"{var}^{k}")
            terms.append(mono if c == 1.0 and k > 0 else f"{c:g}*{mono}")
        return " + ".join(terms) if terms else "0"


# ---------------------------------------------------------------------------
# ring-polymer state


BEAD = "bead"
NORMAL_MODE = "normal_mode"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RingPolymerState:
    """Positions and fictitious momenta of a ring polymer.

    The last axis runs over beads (or normal modes); leading axes, if any,
    index independent replicas so that whole ensembles move together.
    """

    positions: np.ndarray
    momenta: np.ndarray
    representation: str = BEAD

    def __post_init__(self):
        q = _frozen_array(self.positions)
        p = _frozen_array(self.momenta)
        if q.ndim == 0 or q.shape != p.shape:
            raise ModelError(f"positions {q.shape} and momenta {p.shape} must share a non-scalar shape")
        if self.representation not in (BEAD, NORMAL_MODE):
            raise ModelError(f"unknown representation {self.representation!r}")
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "momenta", p)

    @property
    def n_beads(self) -> int:
        return self.positions.shape[-1]

    def require(self, representation: str) -> "RingPolymerState":
        if self.representation != representation:
            raise RepresentationError(f"state is in {self.representation} representation, expected {representation}")
        return self

    def with_momenta(self, momenta) -> "RingPolymerState":
        return RingPolymerState(self.positions, momenta, self.representation)


# ---------------------------------------------------------------------------
# plain-dict views (metadata, config round trips)


def potential_to_dict(potential: PotentialSpec) -> dict:
    if isinstance(potential, Harmonic):
        return {"kind": "harmonic", "omega": potential.omega}
    if isinstance(potential, Quartic):
        return {"kind": "quartic", "a": potential.a}
    if isinstance(potential, DoubleWell):
        return {"kind": "double_well", "a": potential.a, "b": potential.b}
    return {"kind": "polynomial", "coefficients": list(potential.coefficients)}


def scheme_to_dict(scheme: MassScheme) -> dict:
    if isinstance(scheme, Physical):
        return {"kind": "physical"}
    if isinstance(scheme, MatchedFrequency):
        return {"kind": "matched_frequency", "omega": scheme.omega}
    return {"kind": "custom", "masses": list(scheme.masses)}


def system_to_dict(spec: SystemSpec) -> dict:
    return {
        "mass": spec.mass,
        "beta": spec.beta,
        "hbar": spec.hbar,
        "n_beads": spec.n_beads,
        "potential": potential_to_dict(spec.potential),
    }


def observable_to_dict(obs: Observable) -> dict:
    return {"kind": obs.kind, "coefficients": list(obs.coefficients)}
