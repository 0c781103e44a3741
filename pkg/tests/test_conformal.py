import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta

from bentguide import conformal
from bentguide.errors import CornerSingularityError, DomainError, MapInversionError
from bentguide.validation import far_field_rate, inner_corner_slope


def mp_forward(q, z):
    f = lambda t: mp.tan(t * z / 2) ** q * z
    return complex(mp.quad(f, [0, 0.5, 1]))


def test_origin_and_identity(backend):
    assert conformal.forward_map(0.5, 0.0) == 0.0
    z = np.array([0.3 + 0.2j, 2.0 + 5.0j, math.pi + 1.0j])
    np.testing.assert_array_equal(conformal.forward_map(0.0, z), z)


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8, 0.95])
def test_outer_corner_beta_identity(backend, q):
    assert conformal.outer_corner(q) == pytest.approx(beta((1 - q) / 2, (1 + q) / 2), abs=1e-12)
    assert conformal.outer_corner(q) == pytest.approx(math.pi / math.cos(math.pi * q / 2), abs=1e-12)
    assert conformal.forward_map(q, math.pi) == pytest.approx(math.pi / math.cos(math.pi * q / 2), abs=1e-12)


def test_lower_half_by_reflection():
    z = 1.0 + 0.5j
    assert conformal.forward_map(0.5, np.conj(z)) == np.conj(conformal.forward_map(0.5, z))


def test_l_shape_corner_value():
    assert conformal.forward_map(0.5, math.pi) == pytest.approx(math.pi * math.sqrt(2.0), abs=1e-12)


@pytest.mark.parametrize("z", [0.7 + 0.0j, 1.1 + 0.6j, 2.9 + 0.05j, 0.01 + 3.0j, 3.1 + 7.0j])
@pytest.mark.parametrize("q", [0.3, 0.7])
def test_forward_matches_mpmath(backend, q, z):
    mp.mp.dps = 30
    assert abs(conformal.forward_map(q, z) - mp_forward(q, z)) < 1e-12 * max(1.0, abs(z))


def test_forward_real_on_real_segment(backend):
    x = np.linspace(0.0, math.pi, 33)
    assert np.all(conformal.forward_map(0.6, x + 0j).imag == 0.0)


def test_forward_domain_errors():
    for bad in (-0.1 + 1j, 3.5 + 0j, complex(math.nan, 1.0)):
        with pytest.raises(DomainError):
            conformal.forward_map(0.5, bad)
    with pytest.raises(DomainError):
        conformal.forward_map(1.0, 1.0)


def test_backends_agree(rng):
    names = conformal.available_backends()
    if len(names) < 2:
        pytest.skip("compiled kernel not built")
    z = rng.uniform(0, math.pi, 400) + 1j * rng.uniform(0, 6, 400)
    results = {}
    previous = conformal.get_backend()
    for name in names:
        conformal.set_backend(name)
        fz = conformal.forward_map(0.45, z)
        results[name] = (fz, conformal.inverse_map(0.45, fz))
    conformal.set_backend(previous)
    (fa, ia), (fb, ib) = results.values()
    np.testing.assert_allclose(fa, fb, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(ia, ib, rtol=1e-9, atol=1e-9)


def test_set_backend_rejects_unknown():
    with pytest.raises(DomainError):
        conformal.set_backend("fortran")


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 0.9),
    st.floats(1e-3, math.pi - 1e-3),
    st.floats(1e-3, 12.0),
)
def test_round_trip(q, u, v):
    z0 = complex(u, v)
    xi = conformal.forward_map(q, z0)
    z = conformal.inverse_map(q, xi)
    assert abs(z - z0) < 1e-9
    assert abs(conformal.forward_map(q, z) - xi) < 1e-10 * max(1.0, abs(xi))


def test_round_trip_with_seed(backend):
    z0 = 1.2 + 0.8j
    xi = conformal.forward_map(0.5, z0)
    assert abs(conformal.inverse_map(0.5, xi, seed=z0) - z0) < 1e-9


def test_inverse_special_points(backend):
    assert conformal.inverse_map(0.5, 0.0, seed=1 + 1j) == 0.0
    assert abs(conformal.inverse_map(0.5, math.pi * math.sqrt(2.0)) - math.pi) < 1e-9


def test_inverse_reflection():
    z0 = 2.0 + 1.5j
    xi = conformal.forward_map(0.4, z0)
    assert abs(conformal.inverse_map(0.4, np.conj(xi)) - np.conj(z0)) < 1e-9


def test_inverse_reports_failing_index():
    xi = np.array([1.0 + 1.0j, 50.0 - 0.0j, 2.0 + 0.5j])
    with pytest.raises(MapInversionError) as info:
        conformal.inverse_map(0.5, xi, maxiter=5)
    assert info.value.index == 1


def test_jacobian_exact_values():
    assert conformal.jacobian_exact(0.5, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert conformal.jacobian_exact(0.0, 1.0 + 0.3j) == 1.0
    for q in (0.2, 0.8):
        assert conformal.jacobian_exact(q, 1.0 + 40j) == pytest.approx(1.0, abs=1e-14)
    assert conformal.jacobian_exact(0.5, 0.5 + 0.5j) > 0


@pytest.mark.parametrize("z", [0.0, 1e-7j, math.pi, math.pi - 1e-8])
def test_jacobian_corner_error(z):
    with pytest.raises(CornerSingularityError):
        conformal.jacobian_exact(0.5, z)


def test_prefactors_quoted():
    f, g = conformal.prefactors(0.5)
    assert f == pytest.approx(0.75 ** (-2.0 / 3.0), rel=1e-15)
    assert f == pytest.approx(1.2114, abs=1e-4)
    assert g == 1.0


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_near_inner_asymptote(q):
    d = conformal.strip_geometry(q).d
    for r in (1e-4, 1e-3):
        xi = r * d * np.exp(0.3j)
        exact = conformal.jacobian_exact(q, conformal.inverse_map(q, xi))
        approx = conformal.jacobian_asymptotic(q, xi, "near_inner")
        assert approx == pytest.approx(exact, rel=0.01)


@pytest.mark.parametrize("q", [0.2, 0.5])
def test_near_outer_asymptote(q):
    sg = conformal.strip_geometry(q)
    for r in (3e-3, 1e-2):
        xi = sg.width + r * sg.d * np.exp(2.5j)
        exact = conformal.jacobian_exact(q, conformal.inverse_map(q, xi))
        approx = conformal.jacobian_asymptotic(q, xi, "near_outer")
        assert approx == pytest.approx(exact, rel=0.02)


@pytest.mark.parametrize("q", [0.3, 0.7])
def test_far_asymptote(q):
    z = np.array([1.0 + 4.0j, 2.0 + 8.0j, 0.5 + 20.0j])
    xi = conformal.forward_map(q, z)
    exact = conformal.jacobian_exact(q, z)
    approx = conformal.jacobian_asymptotic(q, xi, "far")
    np.testing.assert_allclose(approx, exact, atol=4 * q * math.exp(-2 * 4.0) * 4)
    assert conformal.jacobian_asymptotic(q, conformal.forward_map(q, 1.0 + 60j), "far") == pytest.approx(1.0, abs=1e-20)


def test_asymptotic_patch_errors():
    with pytest.raises(DomainError):
        conformal.jacobian_asymptotic(0.5, 1.0, "near_inner")
    with pytest.raises(DomainError):
        conformal.jacobian_asymptotic(0.5, 1.0, "near_outer")
    with pytest.raises(DomainError):
        conformal.jacobian_asymptotic(0.5, 1.0 + 0.5j, "far")
    with pytest.raises(DomainError):
        conformal.jacobian_asymptotic(0.5, 1e-3, "middle")


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_inner_corner_exponent(q):
    assert inner_corner_slope(q) == pytest.approx(-2 * q / (q + 1), rel=0.02)


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_far_field_rate(q):
    assert far_field_rate(q) == pytest.approx(1.0, abs=0.1)


def test_physical_frame_round_trip():
    q, l = 0.5, 2.0
    x, y = conformal.strip_to_physical(np.array([0.0, conformal.outer_corner(q)]), l, q)
    np.testing.assert_allclose(x, [0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(y, [0.0, -l], atol=1e-14)
    xi = np.array([1.0 + 2.0j, 3.0 - 1.0j])
    np.testing.assert_allclose(conformal.physical_to_strip(*conformal.strip_to_physical(xi, l, q), l, q), xi, rtol=1e-15)


def test_contours_identity_limit():
    grid = conformal.export_contours(1e-12, 5, 7, 2.0)
    np.testing.assert_allclose(grid.xi, grid.z, atol=1e-10)
    assert grid.jacobian.shape == (7, 5)


def test_contours_jacobian_at_corners():
    grid = conformal.export_contours(0.5, 3, 3, 1.0)
    centre = grid.v[:, 0] == 0.0
    assert np.isinf(grid.jacobian[centre, 0]).all()
    assert grid.jacobian[centre, -1][0] == pytest.approx(0.0, abs=1e-12)
    assert len(list(grid.samples())) == 9


def test_contours_inverse_recheck():
    grid = conformal.export_contours(0.5, 11, 21, 3.0)
    inner = np.abs(grid.xi) > 1e-3
    outer = np.abs(grid.xi - conformal.outer_corner(0.5)) > 1e-3
    keep = inner & outer
    z = conformal.inverse_map(0.5, grid.xi[keep])
    assert np.max(np.abs(conformal.forward_map(0.5, z) - grid.xi[keep])) < 1e-8
    assert np.max(np.abs(z - grid.z[keep])) < 1e-8


@pytest.mark.parametrize("q", [0.3, 0.5, 0.8])
def test_contours_meet_walls_orthogonally(q):
    # an iso-v line leaves the inner wall (image of u = 0) at right angles
    step = 1e-6
    wall_dir = np.exp(0.5j * math.pi * (1 + q))
    for y in (0.5, 1.0, 3.0):
        a = conformal.forward_map(q, 1j * y)
        b = conformal.forward_map(q, step + 1j * y)
        angle = abs(np.angle((b - a) / wall_dir))
        assert abs(angle - math.pi / 2) < 1e-3


def test_contour_argument_checks():
    with pytest.raises(DomainError):
        conformal.export_contours(0.5, 1, 5, 1.0)
    with pytest.raises(DomainError):
        conformal.export_contours(0.5, 5, 5, -1.0)
