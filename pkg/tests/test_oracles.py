import numpy as np
import pytest

from rpccd import (DoubleWell, GridError, GridSpec, Harmonic, MatchedFrequency, ModelError, Observable, Physical,
                   Polynomial, Quartic, SystemSpec, analytic_kubo_q2, analytic_kubo_qq, analytic_nm_ccd_q2,
                   analytic_rpmd_q2, kubo_correlation, solve_schrodinger)
from rpccd.oracles import kubo_weights

HO = SystemSpec(1.0, 1.0, 1000, Harmonic(1.0))
T4 = np.array([0.0, 1.0, 5.0, 20.0])
Q, Q2 = Observable.q(), Observable.q_squared()

# frozen values: closed forms at beta = 1, P = 1000 and grid results for V = q^4 / 4
KUBO_Q2 = [3.173323895284911, 1.6410860046342197, 1.1834913385576344, 1.3697357407832587]
RPMD_Q2 = [3.1733237120811593, 1.7571613553461205, 1.3338832171434118, 1.5038543034919516]
NM_Q2 = [3.1733237120811593, 1.755300249060696, 1.331815112053639, 1.5041766845115565]
QUARTIC_LEVELS = [0.42080497447543763, 1.507901241160396, 2.9587956874792862, 4.621220318665947]
QUARTIC_QQ = [0.6160404378081678, 0.49627293222970675, 0.191996543719284, -0.440744050184154]
QUARTIC_Q2Q2 = [0.9611161760296796, 0.6776494429153238, 0.34866564087641533, 0.8290151419932066]


def quartic(beta=1.0):
    return SystemSpec(1.0, beta, 1, Quartic(1.0))


def test_closed_forms_frozen():
    np.testing.assert_allclose(analytic_kubo_q2(HO, T4).values, KUBO_Q2, rtol=1e-12)
    np.testing.assert_allclose(analytic_rpmd_q2(HO, T4).values, RPMD_Q2, rtol=1e-12)
    np.testing.assert_allclose(analytic_nm_ccd_q2(HO, MatchedFrequency(1.0), T4).values, NM_Q2, rtol=1e-12)


def test_kubo_q2_reference_value():
    x = 1.0
    coth = 1 / np.tanh(x / 2)
    expected = 0.25 * (2 / x * coth + 2 * coth**2 - 1)
    assert analytic_kubo_q2(HO, [0.0]).values[0] == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(3.1733239, abs=1e-7)


def test_kubo_q2_undamped_oscillation():
    t = np.linspace(0, 40, 4001)
    c = analytic_kubo_q2(HO, t).values
    amplitude = 0.5 * 1 / np.tanh(0.5)  # (hbar^2 / 2 m^2 w^2) (1 / x) coth(x / 2) at x = 1
    late = c[t > 40 - np.pi]
    assert 0.5 * (late.max() - late.min()) == pytest.approx(amplitude, rel=1e-4)


def test_kubo_q2_classical_limit():
    spec = HO.replace(beta=0.01)
    c0 = analytic_kubo_q2(spec, [0.0]).values[0]
    assert c0 == pytest.approx(3 / spec.beta**2, rel=0.01)


def test_kubo_qq_closed_form():
    t = np.linspace(0, 10, 11)
    np.testing.assert_allclose(analytic_kubo_qq(HO.replace(beta=2.0), t).values, np.cos(t) / 2.0, rtol=1e-14)


def test_rpmd_single_bead_is_classical():
    t = np.linspace(0, 5, 11)
    spec = SystemSpec(1.0, 2.0, 1, Harmonic(1.5))
    expected = (np.cos(3.0 * t) + 2) / (4.0 * 1.5**4)
    np.testing.assert_allclose(analytic_rpmd_q2(spec, t).values, expected, rtol=1e-13)


@pytest.mark.parametrize("P", [2, 7, 64])
def test_rpmd_static_formula(P):
    spec = SystemSpec(1.0, 1.0, P, Harmonic(1.0))
    n = np.arange(1, P + 1)
    w2 = 1 + 4 * spec.k_p * np.sin(np.pi * n / P) ** 2
    expected = 2 * np.sum(1 / w2**2) + np.sum(1 / w2) ** 2
    assert analytic_rpmd_q2(spec, [0.0]).values[0] == pytest.approx(expected, rel=1e-12)


def test_rpmd_converges_monotonically_in_p():
    exact = analytic_kubo_q2(HO, [0.0]).values[0]
    vals = [analytic_rpmd_q2(HO.replace(n_beads=P), [0.0]).values[0] for P in (8, 16, 32, 64)]
    gaps = np.abs(exact - np.array(vals))
    assert np.all(np.diff(gaps) < 0)


def test_nm_physical_equals_rpmd_and_static_shared():
    t = np.linspace(0, 10, 51)
    spec = HO.replace(n_beads=32)
    np.testing.assert_allclose(analytic_nm_ccd_q2(spec, Physical(), t).values, analytic_rpmd_q2(spec, t).values,
                               rtol=1e-13)
    assert analytic_nm_ccd_q2(spec, MatchedFrequency(1.0), [0.0]).values[0] == pytest.approx(
        analytic_rpmd_q2(spec, [0.0]).values[0], rel=1e-13)


def test_nm_matched_is_single_frequency():
    t = np.linspace(0, 20, 401)
    c = analytic_nm_ccd_q2(HO, MatchedFrequency(1.0), t).values
    design = np.column_stack([np.cos(2 * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, c, rcond=None)
    np.testing.assert_allclose(design @ coef, c, atol=1e-12)


def test_closed_forms_need_harmonic():
    with pytest.raises(ModelError):
        analytic_kubo_q2(quartic(), [0.0])


def test_harmonic_spectrum():
    sol = solve_schrodinger(SystemSpec(1.0, 1.0, 1, Harmonic(1.0)), GridSpec(-10, 10, 512))
    np.testing.assert_allclose(sol.energies[:11], np.arange(11) + 0.5, rtol=1e-5)
    S = sol.states[:, : sol.n_kept]
    np.testing.assert_allclose(S.T @ S, np.eye(sol.n_kept), atol=1e-10)
    assert np.all(np.diff(sol.energies) > 0)


def test_harmonic_spectrum_fd3():
    sol = solve_schrodinger(SystemSpec(1.0, 1.0, 1, Harmonic(1.0)), GridSpec(-10, 10, 512), kinetic="fd3")
    np.testing.assert_allclose(sol.energies[:11], np.arange(11) + 0.5, rtol=2e-3)


def test_quartic_levels_frozen_and_richardson():
    sol = solve_schrodinger(quartic(), GridSpec(-7, 7, 256))
    np.testing.assert_allclose(sol.energies[:4], QUARTIC_LEVELS, rtol=1e-10)
    gaps = []
    for n in (257, 513):
        s = solve_schrodinger(quartic(), GridSpec(-7, 7, n), kinetic="fd3")
        gaps.append(s.energies[1] - s.energies[0])
    richardson = (4 * gaps[1] - gaps[0]) / 3
    assert abs((sol.energies[1] - sol.energies[0]) - richardson) < 1e-5


def test_double_well_doublet():
    sol = solve_schrodinger(SystemSpec(1.0, 1.0, 1, DoubleWell(1.0, 4.0)), GridSpec(-6, 6, 256))
    split = sol.energies[1] - sol.energies[0]
    assert 0 < split < 0.1 * (sol.energies[2] - sol.energies[1])


def test_leakage_detected():
    with pytest.raises(GridError, match="enlarge"):
        solve_schrodinger(SystemSpec(1.0, 0.1, 1, Harmonic(1.0)), GridSpec(-2, 2, 64))


def test_grid_spec_validation():
    with pytest.raises(ModelError):
        GridSpec(1.0, -1.0, 64)
    with pytest.raises(ModelError):
        GridSpec(-1.0, 1.0, 8)
    with pytest.raises(ModelError):
        solve_schrodinger(quartic(), GridSpec(-7, 7, 64), kinetic="spline")


def test_dvr_matches_eq40():
    sol = solve_schrodinger(HO, GridSpec(-10, 10, 256))
    t = np.linspace(0, 20, 401)
    ref = analytic_kubo_q2(HO, t).values
    got = kubo_correlation(sol, Q2, Q2, 1.0, t)
    assert np.max(np.abs(got.values - ref) / np.abs(ref)) < 1e-4
    assert got.meta["method"] == "dvr_oracle" and np.all(got.std_errors == 0)


def test_dvr_qq_harmonic():
    sol = solve_schrodinger(HO, GridSpec(-10, 10, 256))
    t = np.linspace(0, 20, 401)
    np.testing.assert_allclose(kubo_correlation(sol, Q, Q, 1.0, t).values, np.cos(t), atol=1e-4)


def test_constant_observable():
    sol = solve_schrodinger(quartic(), GridSpec(-7, 7, 128))
    one = Observable.position((1.0,))
    np.testing.assert_allclose(kubo_correlation(sol, one, one, 1.0, np.linspace(0, 5, 6)).values, 1.0, atol=1e-12)


def test_quartic_kubo_frozen():
    sol = solve_schrodinger(quartic(), GridSpec(-7, 7, 256))
    t = [0.0, 0.5, 1.0, 2.0]
    np.testing.assert_allclose(kubo_correlation(sol, Q, Q, 1.0, t).values, QUARTIC_QQ, rtol=1e-9)
    np.testing.assert_allclose(kubo_correlation(sol, Q2, Q2, 1.0, t).values, QUARTIC_Q2Q2, rtol=1e-9)


def test_weight_symmetry_and_positivity():
    sol = solve_schrodinger(quartic(2.0), GridSpec(-7, 7, 128))
    k = sol.n_kept
    W = kubo_weights(sol.energies, 2.0, np.arange(k))[:, :k]
    np.testing.assert_allclose(W, W.T, rtol=1e-12)
    assert np.all(W > 0)
    e = sol.energies - sol.energies[0]
    np.testing.assert_allclose(np.diag(W), np.exp(-2.0 * e[:k]), rtol=1e-14)
    i, j = 0, 3
    direct = (np.exp(-2.0 * e[i]) - np.exp(-2.0 * e[j])) / (2.0 * (e[j] - e[i]))
    assert W[i, j] == pytest.approx(direct, rel=1e-12)


def test_degenerate_weight_limit():
    e = np.array([0.0, 1.0, 1.0 + 1e-13])
    w = kubo_weights(e, 1.0, np.arange(3))
    assert np.all(np.isfinite(w))
    assert w[1, 2] == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_grid_convergence():
    t = np.linspace(0, 5, 26)
    a = kubo_correlation(solve_schrodinger(quartic(), GridSpec(-7, 7, 128)), Q2, Q2, 1.0, t).values
    b = kubo_correlation(solve_schrodinger(quartic(), GridSpec(-7, 7, 256)), Q2, Q2, 1.0, t).values
    assert np.max(np.abs(a - b) / np.max(np.abs(b))) < 1e-4


def test_static_response_rule():
    # Kubo <q; q> = <q>^2 + (1/beta) d<q>/d(eps) for H - eps q
    beta, eps = 1.3, 1e-4
    grid = GridSpec(-7, 7, 200)

    def mean_q(e):
        spec = SystemSpec(1.0, beta, 1, Polynomial((0.0, -e - 0.2, 0.0, 0.0, 0.25)))
        return solve_schrodinger(spec, grid).thermal_expectation(Q)

    spec0 = SystemSpec(1.0, beta, 1, Polynomial((0.0, -0.2, 0.0, 0.0, 0.25)))
    sol = solve_schrodinger(spec0, grid)
    kubo0 = kubo_correlation(sol, Q, Q, beta, [0.0]).values[0]
    response = (mean_q(eps) - mean_q(-eps)) / (2 * eps * beta)
    assert kubo0 == pytest.approx(sol.thermal_expectation(Q) ** 2 + response, rel=1e-7)
    # and the Kubo value sits below the plain second moment
    assert kubo0 < sol.thermal_expectation(Q2)


def test_momentum_observables():
    sol = solve_schrodinger(SystemSpec(1.0, 1.0, 1, Harmonic(1.0)), GridSpec(-10, 10, 256))
    P_ = Observable.p()
    c = kubo_correlation(sol, P_, P_, 1.0, np.linspace(0, 5, 11)).values
    np.testing.assert_allclose(c, np.cos(np.linspace(0, 5, 11)), atol=1e-6)
    # <p^2> = (1/2) coth(1/2)
    assert sol.thermal_expectation(Observable.momentum((0, 0, 1))) == pytest.approx(0.5 / np.tanh(0.5), rel=1e-8)
    with pytest.raises(ModelError):
        kubo_correlation(sol, Q, P_, 1.0, [0.0])
