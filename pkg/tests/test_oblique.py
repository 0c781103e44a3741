import math

import numpy as np
import pytest
from scipy.optimize import brentq

from bentguide import oblique
from bentguide.errors import DomainError, NoNullSpaceError
from bentguide.geometry import geometry_from_slope


def taylor_expm(A, terms=60):
    """Plain power series; exact enough for the small matrices used here."""
    out = np.eye(len(A))
    term = np.eye(len(A))
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_mode_matrix_entries():
    assert oblique.build_mode_matrices(2).M[0, 1] == pytest.approx(-4.0 / 3.0, rel=1e-15)
    assert oblique.build_mode_matrices(3).M[1, 2] == pytest.approx(-12.0 / 5.0, rel=1e-15)
    for size in (1, 2, 5, 8):
        mm = oblique.build_mode_matrices(size)
        assert np.all(np.diag(mm.M) == 0.0)
        np.testing.assert_array_equal(mm.M, -mm.M.T)


def test_mode_matrix_size_validation():
    for bad in (0, -1, 2.5):
        with pytest.raises(DomainError):
            oblique.build_mode_matrices(bad)


def test_one_mode_commutator_vanishes():
    assert np.all(oblique.build_mode_matrices(1).commutator_N2_M() == 0.0)


def test_effective_potential_at_corner():
    g = geometry_from_slope(0.3, 2.0)
    mm = oblique.build_mode_matrices(3)
    V = oblique.effective_potential(g, mm, 0.0)
    ref = (math.pi / 2.0) ** 2 * (0.09 + 1.0) * mm.N2 + (0.6 / 2.0) ** 2 * (mm.M @ mm.M)
    np.testing.assert_allclose(V, ref, rtol=1e-14, atol=1e-14)


def test_effective_potential_straight():
    g = geometry_from_slope(0.0)
    mm = oblique.build_mode_matrices(3)
    for x in (0.0, 1.3, -7.0):
        np.testing.assert_allclose(oblique.effective_potential(g, mm, x), mm.N2, atol=1e-15)


def test_effective_potential_series_oracle():
    g = geometry_from_slope(0.1)
    mm = oblique.build_mode_matrices(2)
    th = 2 * 0.1 * 1.0 / math.pi
    Nt = taylor_expm(-th * mm.M) @ mm.N @ taylor_expm(th * mm.M)
    ref = (1.01) * Nt @ Nt + (0.2 / math.pi) ** 2 * (mm.M @ mm.M)
    np.testing.assert_allclose(oblique.effective_potential(g, mm, 1.0), ref, rtol=1e-13)
    np.testing.assert_allclose(oblique.gauge_factor(g, mm, -1.0), taylor_expm(-th * mm.M), rtol=1e-14)


def test_effective_potential_rejects_nonfinite():
    with pytest.raises(DomainError):
        oblique.effective_potential(geometry_from_slope(0.1), oblique.build_mode_matrices(2), math.inf)


def test_straight_determinant_positive():
    g = geometry_from_slope(0.0)
    for size in (1, 2, 4):
        mm = oblique.build_mode_matrices(size)
        expected = np.prod(2.0 * (np.arange(1, size + 1) ** 2 - 0.5) ** 1.5)
        assert oblique.corner_determinant(g, mm, 0.5) == pytest.approx(expected, rel=1e-12)
        assert oblique.determinant_roots(g, mm) == []


def test_determinant_rejects_threshold():
    with pytest.raises(DomainError):
        oblique.corner_determinant(geometry_from_slope(0.1), oblique.build_mode_matrices(2), 1.0)


@pytest.mark.parametrize("a", [0.01, 0.05, 0.1, 0.2, 0.5])
def test_root_matches_closed_form(a):
    g = geometry_from_slope(a)
    root = oblique.determinant_roots(g, oblique.build_mode_matrices(2))[0]
    assert root == pytest.approx(oblique.ground_state_scaled(g), abs=1e-10)


def test_root_independent_bracketing():
    g = geometry_from_slope(0.1)
    mm = oblique.build_mode_matrices(2)
    ref = brentq(lambda e: oblique.corner_determinant(g, mm, e), 0.98, 0.999, xtol=1e-15)
    assert oblique.determinant_roots(g, mm)[0] == pytest.approx(ref, abs=1e-12)


def test_closed_form_values():
    assert oblique.ground_state_scaled(geometry_from_slope(0.0)) == 1.0
    # high-precision evaluation of the two-mode formula
    assert oblique.ground_state_scaled(geometry_from_slope(0.1)) == pytest.approx(0.9915505046329191, abs=1e-14)
    assert oblique.ground_state_scaled(geometry_from_slope(0.2)) == pytest.approx(0.9788, abs=1e-4)
    g = geometry_from_slope(0.1, 1.0)
    assert oblique.ground_state_closed_form(g) == pytest.approx(math.pi**2 * 0.9915505046329191, rel=1e-14)


def test_bound_state_vector():
    state = oblique.solve_ground_state(geometry_from_slope(0.1), 2)
    assert np.linalg.norm(state.u0) == pytest.approx(1.0, abs=1e-14)
    # mode 1 carries most of the norm; it decays far more slowly than mode 2
    kappa = np.sqrt(np.array([1.0, 4.0]) - state.scaled_energy)
    weight = state.u0**2 / kappa**2
    assert weight[0] / weight.sum() > 0.9
    assert state.u0[0] > 0
    assert not state.extended


def test_larger_truncation_still_binds():
    state = oblique.solve_ground_state(geometry_from_slope(0.1), 4)
    assert 0.98 < state.scaled_energy < 1.0
    assert state.extended


@pytest.mark.parametrize("a, size", [(0.0, 2), (0.3, 1)])
def test_no_null_space(a, size):
    with pytest.raises(NoNullSpaceError):
        oblique.solve_ground_state(geometry_from_slope(a), size)


def test_no_null_space_off_root():
    g = geometry_from_slope(0.1)
    with pytest.raises(NoNullSpaceError):
        oblique.bound_state_vector(g, oblique.build_mode_matrices(2), 0.5)


def test_wavefunction_walls_and_outside():
    g = geometry_from_slope(0.2)
    state = oblique.solve_ground_state(g)
    x = np.linspace(-6, 6, 101)
    np.testing.assert_allclose(oblique.oblique_wavefunction(state, g, x, g.slope_a * np.abs(x)), 0.0, atol=1e-14)
    np.testing.assert_allclose(oblique.oblique_wavefunction(state, g, x, g.slope_a * np.abs(x) - g.l), 0.0, atol=1e-14)
    assert oblique.oblique_wavefunction(state, g, 0.0, 1.0) == 0.0
    assert oblique.oblique_wavefunction(state, g, 0.0, -0.5 * g.l) > 0.0


def test_wavefunction_even_and_normalized():
    g = geometry_from_slope(0.2)
    state = oblique.solve_ground_state(g)
    x = np.linspace(-60, 60, 2401)
    y = np.linspace(-g.l, g.slope_a * 60, 1201)
    X, Y = np.meshgrid(x, y)
    psi = oblique.oblique_wavefunction(state, g, X, Y)
    np.testing.assert_allclose(psi, psi[:, ::-1], atol=1e-14)
    norm = np.sum(psi**2) * (x[1] - x[0]) * (y[1] - y[0])
    assert norm == pytest.approx(1.0, abs=0.02)
