import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bentguide import potentials
from bentguide.errors import DomainError


def mp_element(q, n, m, v, dps=25):
    """Independent tanh-sinh quadrature of the mode-strip potential."""
    mp.mp.dps = dps
    c2 = mp.cos(mp.pi * q / 2) ** 2
    d = 1 / mp.cos(mp.pi * q / 2)
    f = lambda x: mp.sin(n * x) * mp.sin(m * x) * c2 * abs(mp.tan((x + 1j * v / d) / 2)) ** (2 * q)
    return float(2 / mp.pi * mp.quad(f, [0, mp.pi / 2, mp.pi]))


def test_straight_guide_is_identity():
    V = potentials.mode_potential_matrix(1e-14, 4, np.array([0.0, 0.7, 5.0]))
    for k in range(3):
        np.testing.assert_allclose(V[k], np.eye(4), atol=1e-12)
    assert potentials.potential_matrix_element(0.0, 2, 2, 0.3) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("q, n, m, v", [(0.5, 1, 2, 0.0), (0.5, 1, 1, 0.0), (0.3, 2, 3, 0.4), (0.8, 1, 1, 1.5)])
def test_element_matches_mpmath(q, n, m, v):
    assert potentials.potential_matrix_element(q, n, m, v) == pytest.approx(mp_element(q, n, m, v), abs=1e-9)


def test_l_shape_peak_value():
    # closed form at q = 1/2, n = m = 1, v = 0
    assert potentials.potential_matrix_element(0.5, 1, 1, 0.0) == pytest.approx(2.0 / math.pi, abs=1e-10)


@pytest.mark.parametrize("q", [0.2, 0.5, 0.7])
def test_far_value_normalized(q):
    c2 = potentials.far_field_value(q)
    for v in (10.0, -10.0):
        assert potentials.potential_matrix_element(q, 1, 1, v) / c2 == pytest.approx(1.0, abs=1e-3)


def test_far_field_decay_rate():
    q = 0.5
    d = 1.0 / math.cos(math.pi * q / 2)
    v = np.linspace(4.0, 16.0, 13)
    V = potentials.mode_potential_matrix(q, 2, v)
    # the first-order term cancels on the diagonal, leaving twice the rate
    diag = -np.polyfit(v, np.log(np.abs(V[:, 0, 0] - potentials.far_field_value(q))), 1)[0]
    off = -np.polyfit(v, np.log(np.abs(V[:, 0, 1])), 1)[0]
    assert diag == pytest.approx(2.0 / d, rel=0.05)
    assert off == pytest.approx(1.0 / d, rel=0.05)


def test_symmetries():
    v = np.array([-2.0, -0.3, 0.0, 0.3, 2.0])
    V = potentials.mode_potential_matrix(0.6, 5, v)
    np.testing.assert_allclose(V, np.transpose(V, (0, 2, 1)), atol=1e-12)
    np.testing.assert_allclose(V, V[::-1], atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0.0, 8.0))
def test_diagonal_positive_and_bounded(q, v):
    V = potentials.mode_potential_matrix(q, 3, np.array([v]))[0]
    c2 = potentials.far_field_value(q)
    assert np.all(np.diag(V) > 0)
    # the weight peaks at v = 0; V_11 decreases toward c2
    assert c2 * (1 - 1e-9) <= V[0, 0] <= potentials.potential_matrix_element(q, 1, 1, 0.0) + 1e-12


@pytest.mark.parametrize("q", [0.2, 0.5])
def test_diagonal_dominance(q):
    V = potentials.mode_potential_matrix(q, 6, np.array([0.0, 0.3, 1.0, 3.0]))
    for M in V:
        off = np.abs(M - np.diag(np.diag(M))).max(axis=1)
        assert np.all(off < np.diag(M))


def test_curve_flat_limit():
    curve = potentials.diagonal_potential_curve(1e-12, 1, 6.0, 65)
    np.testing.assert_allclose(curve.values, 1.0, atol=1e-10)
    assert curve.vprime_max < 1e-10
    assert curve.far_value == pytest.approx(1.0)


def test_curve_layout():
    curve = potentials.diagonal_potential_curve(0.5, 1, 6.0, 121)
    assert curve.v_samples[0] == -6.0 and curve.v_samples[-1] == 6.0
    assert curve.v0_at == pytest.approx(2 / math.pi, abs=1e-10)
    assert curve.epsilon_n == pytest.approx(-0.5, rel=1e-14)
    slope = curve.derivative()
    assert slope.shape == curve.values.shape
    np.testing.assert_allclose(slope, -slope[::-1], atol=1e-10)


def test_curve_argument_checks():
    with pytest.raises(DomainError):
        potentials.diagonal_potential_curve(0.5, 1, 6.0, 10)
    with pytest.raises(DomainError):
        potentials.diagonal_potential_curve(0.5, 1, 2.0, 65)
    with pytest.raises(DomainError):
        potentials.mode_potential_matrix(1.0, 2, [0.0])
    with pytest.raises(DomainError):
        potentials.mode_potential_matrix(0.5, 0, [0.0])


def test_numeric_features_l_shape():
    v0, vp = potentials.numeric_features(0.5, 1)
    assert v0 == pytest.approx(0.63662, abs=1e-5)
    assert vp == pytest.approx(0.100051, abs=1e-5)


def test_estimate_features():
    assert potentials.estimate_features(0.0, 1) == (1.0, 0.0)
    v0, vp = potentials.estimate_features(0.5, 1)
    assert v0 == pytest.approx(0.7937, abs=1e-4)
    assert vp == pytest.approx(0.07874, abs=1e-5)
    v0, vp = potentials.estimate_features(0.9, 3)
    assert 0 < v0 < 1 and vp > 0
    with pytest.raises(DomainError):
        potentials.estimate_features(1.0, 1)


@pytest.mark.parametrize("q", [0.1, 0.3])
def test_estimate_close_for_gentle_bends(q):
    v0, _ = potentials.numeric_features(q, 1)
    assert potentials.estimate_features(q, 1)[0] == pytest.approx(v0, rel=0.15)


def test_near_origin_structure():
    # at v = 0 the integrand reduces to a pure power of u
    q = 0.5
    f, _ = __import__("bentguide.conformal", fromlist=["prefactors"]).prefactors(q)
    d = 1.0 / math.cos(math.pi * q / 2)
    mp.mp.dps = 20
    ref = 2 * f / (math.pi * d) * mp.quad(lambda u: mp.sin(u / d) ** 2 * u ** (2 * q / (q + 1)), [0, mp.pi * d])
    assert potentials.near_origin_potential(q, 1, 1, 0.0) == pytest.approx(float(ref), rel=1e-8)
    with pytest.raises(DomainError):
        potentials.near_origin_potential(q, 1, 1, 0.2 * d)


def test_near_origin_offdiagonal_smaller():
    tab = np.array([[potentials.near_origin_potential(0.5, n, m, 0.01) for m in range(1, 7)] for n in range(1, 7)])
    np.testing.assert_allclose(tab, tab.T, atol=1e-12)
    for n in range(6):
        for m in range(6):
            if n != m:
                assert abs(tab[n, m]) < tab[n, n]
