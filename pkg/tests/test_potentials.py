import numpy as np
import pytest

from rpccd.model import DoubleWell, Harmonic, Polynomial, Quartic
from rpccd.potentials import (as_polynomial, global_minima, local_harmonic_frequency, potential_curvature,
                              potential_gradient, potential_value)

VARIANTS = [Harmonic(1.3), Quartic(0.7), DoubleWell(1.0, 2.0), Polynomial((0.5, -1.0, 0.3, 0.2, 0.05))]


@pytest.mark.parametrize("pot,q,expected", [(Harmonic(1.0), 2.0, 2.0), (Harmonic(1.0), 0.0, 0.0),
                                            (Quartic(1.0), 2.0, 4.0)])
def test_values(pot, q, expected):
    assert potential_value(pot, q) == expected


@pytest.mark.parametrize("pot,q,expected", [(Harmonic(1.0), 3.0, 3.0), (Quartic(1.0), 1.0, 1.0),
                                            (DoubleWell(1.0, 1.0), 1.0, 0.0)])
def test_gradients(pot, q, expected):
    assert potential_gradient(pot, q) == expected


def test_harmonic_uses_mass():
    assert potential_value(Harmonic(2.0), 1.0, mass=3.0) == 6.0
    assert potential_gradient(Harmonic(2.0), 1.0, mass=3.0) == 12.0


@pytest.mark.parametrize("pot", VARIANTS)
def test_gradient_matches_finite_difference(pot):
    q = np.random.default_rng(4).uniform(-5, 5, 100)
    h = 1e-5
    fd = (potential_value(pot, q + h) - potential_value(pot, q - h)) / (2 * h)
    grad = potential_gradient(pot, q)
    assert np.all(np.abs(grad - fd) <= 1e-6 * (1 + np.abs(grad)))


@pytest.mark.parametrize("pot", VARIANTS)
def test_polynomial_rewrite_agrees(pot):
    q = np.linspace(-3, 3, 41)
    np.testing.assert_allclose(potential_value(as_polynomial(pot, 1.7), q, 1.7), potential_value(pot, q, 1.7),
                               rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("pot", VARIANTS[:3])
def test_parity(pot):
    q = np.random.default_rng(1).uniform(-5, 5, 50)
    assert np.array_equal(potential_value(pot, q), potential_value(pot, -q))


def test_curvature_and_minima():
    assert potential_curvature(DoubleWell(1.0, 1.0), 1.0) == pytest.approx(2.0)
    np.testing.assert_allclose(global_minima(DoubleWell(2.0, 8.0)), [-2.0, 2.0])
    np.testing.assert_allclose(global_minima(Harmonic(1.0)), [0.0], atol=1e-12)


def test_local_frequency():
    assert local_harmonic_frequency(Harmonic(1.7), 1.0, 1.0) == pytest.approx(1.7, rel=1e-8)
    w = local_harmonic_frequency(Quartic(1.0), 1.0, 1.0)
    assert w > 0.1
    assert local_harmonic_frequency(Polynomial((0.0, 0.0, 0.0, 0.0, 1e-12)), 1.0, 1e-6) >= 1e-3
