"""Schwarz-Christoffel map between the straight strip and the bent guide.

``F(z) = int_0^z tan(phi/2)**q dphi`` sends the straight half strip
``0 <= Re z <= pi, Im z >= 0`` onto one half of the bent guide.  The inner
(re-entrant) corner sits at ``F(0) = 0`` and the outer corner at
``F(pi) = pi*d`` with ``d = sec(pi*q/2)``.  The arm runs off in the
direction ``exp(i*pi*(1+q)/2)`` with perpendicular width ``pi``.  Reflection
``F(conj z) = conj F(z)`` supplies the other half, so the full guide is the
strip ``0 <= Re z <= pi`` with ``Im z`` of either sign.

Mode-strip coordinates are ``zeta = u + i v = d*z``, with width ``pi*d``.

The Jacobian ``|dz/dxi|**2 = |cot(z/2)|**(2q)`` is exposed as
:func:`jacobian_exact`; its reciprocal :func:`strip_weight` is the
metric factor the Helmholtz operator picks up in the straight frame.

Two interchangeable kernels evaluate ``F`` and its Newton inverse: a compiled
Cython module and a numpy fallback.  The compiled one is used when it
imports; :func:`set_backend` switches explicitly.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.integrate import quad

from . import _mapkernel_py
from .errors import CornerSingularityError, DomainError, MapInversionError

try:
    from . import _mapkernel as _compiled
except ImportError:  # extension not built
    _compiled = None

CORNER_DELTA = 1e-6
INVERSE_TOL = 1e-10
FORWARD_RTOL = 1e-11
NEWTON_MAXITER = 60

# default and verification quadrature rules: (order, sigma, levels, max_panel)
_BASE_RULE = (16, 0.25, 10, 1.0)
_FINE_RULE = (24, 0.2, 14, 0.5)

_kernel = _compiled if _compiled is not None else _mapkernel_py


def available_backends() -> list[str]:
    out = ["python"]
    if _compiled is not None:
        out.insert(0, "cython")
    return out


def get_backend() -> str:
    return _kernel.BACKEND


def set_backend(name: str) -> None:
    """Select ``"cython"`` or ``"python"`` for all subsequent map evaluations."""
    global _kernel
    if name == "python":
        _kernel = _mapkernel_py
    elif name == "cython":
        if _compiled is None:
            raise DomainError("compiled map kernel is not available")
        _kernel = _compiled
    else:
        raise DomainError(f"unknown backend {name!r}")
    _outer_corner.cache_clear()


@functools.lru_cache(maxsize=None)
def _rule(params):
    order, sigma, levels, max_panel = params
    x, w = np.polynomial.legendre.leggauss(order)
    return (x, w, sigma, levels, max_panel)


def _check_q(q: float) -> float:
    q = float(q)
    if not (0.0 <= q < 1.0) or not math.isfinite(q):
        raise DomainError(f"q must lie in [0, 1), got {q!r}")
    return q


@dataclass(frozen=True)
class StripGeometry:
    """Constants of the map for one bend."""

    q: float
    d: float
    width: float


def strip_geometry(q: float) -> StripGeometry:
    q = _check_q(q)
    d = 1.0 / math.cos(0.5 * math.pi * q)
    return StripGeometry(q=q, d=d, width=math.pi * d)


@functools.lru_cache(maxsize=None)
def _outer_corner(q: float, params=_BASE_RULE) -> complex:
    # F(pi) assembled from both corner expansions meeting at pi/2
    rule = _rule(params)
    mid = np.array([0.5 * math.pi + 0j])
    left = _kernel.segment(q, False, mid, *rule)[0]
    right = _kernel.segment(q, True, mid, *rule)[0]
    return complex(left - right).real + 0j


def outer_corner(q: float) -> float:
    """Numerically integrated ``F(pi)``; equals ``pi*sec(pi*q/2)``."""
    return _outer_corner(_check_q(q)).real


@functools.lru_cache(maxsize=None)
def far_field_offset(q: float) -> float:
    """``K_q = int_0^inf (1 - tanh(t/2)**q) dt``.

    Far along the arm ``F(z) ~ exp(i*pi*q/2) (z - i K_q)``.
    """
    q = _check_q(q)
    if q == 0.0:
        return 0.0
    val, _ = quad(lambda t: 1.0 - math.tanh(0.5 * t) ** q, 0.0, math.inf, epsabs=1e-14, epsrel=1e-13)
    return val


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DomainError("coordinates must be finite")
    return arr


def _validate_strip(z: np.ndarray) -> None:
    bad = (z.real < -1e-14) | (z.real > math.pi + 1e-14)
    if bad.any():
        idx = np.unravel_index(np.flatnonzero(bad)[0], z.shape) if z.ndim else None
        raise DomainError(f"Re z must lie in [0, pi] (first offending index {idx})")


def _forward_raw(q: float, z: np.ndarray, params=_BASE_RULE) -> np.ndarray:
    """``F`` on any points of the closed strip, using reflection for Im z < 0."""
    flat = z.ravel()
    lower = flat.imag < 0
    work = np.where(lower, np.conj(flat), flat)
    work = np.clip(work.real, 0.0, math.pi) + 1j * work.imag
    if q == 0.0:
        out = work.copy()
    else:
        out = _kernel.forward(q, work, _outer_corner(q, params), *_rule(params))
    out = np.where(lower, np.conj(out), out)
    return out.reshape(z.shape)


def forward_map(q: float, z, rtol: float = FORWARD_RTOL):
    """Evaluate ``xi = F(z)``.

    Each point is integrated with the default panel rule and with a finer
    one; disagreement beyond ``rtol`` (relative to ``max(1, |F|)``) raises.
    The finer value is returned.

    Parameters
    ----------
    q : float
        Complementary bend fraction in ``[0, 1)``; ``q = 0`` is the identity.
    z : complex or array_like
        Points with ``0 <= Re z <= pi``.
    """
    q = _check_q(q)
    arr = _as_complex(z)
    _validate_strip(arr)
    if q == 0.0:
        out = arr.copy()
    else:
        base = _forward_raw(q, arr, _BASE_RULE)
        out = _forward_raw(q, arr, _FINE_RULE)
        dev = np.abs(out - base) / np.maximum(1.0, np.abs(out))
        if np.any(dev > rtol):
            raise MapInversionError(
                f"map quadrature did not reach rtol={rtol:g} (max deviation {dev.max():.2e})",
                index=int(np.argmax(dev)),
            )
    return complex(out) if out.ndim == 0 else out


def map_derivative(q: float, z):
    """``F'(z) = tan(z/2)**q`` on the principal branch (reflected for Im z < 0)."""
    q = _check_q(q)
    arr = _as_complex(z)
    lower = arr.imag < 0
    work = np.where(lower, np.conj(arr), arr)
    out = np.tan(work / 2.0) ** q
    out = np.where(lower, np.conj(out), out)
    return complex(out) if out.ndim == 0 else out


def strip_weight(q: float, z):
    """``|F'(z)|**2 = |tan(z/2)|**(2q)``, the reciprocal of the Jacobian.

    No corner check; it is 0 at ``z = 0`` and infinite at ``z = pi``.
    """
    arr = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore"):
        out = np.abs(np.tan(arr / 2.0)) ** (2.0 * q)
    return float(out) if out.ndim == 0 else out


def _near_corner(z: np.ndarray, delta: float) -> np.ndarray:
    return (np.abs(z) < delta) | (np.abs(z - math.pi) < delta)


def jacobian_exact(q: float, z, delta: float = CORNER_DELTA):
    """``|dz/dxi|**2 = |cot(z/2)|**(2q)``.

    Raises :class:`CornerSingularityError` for any point within ``delta`` of
    a corner (``z = 0`` or ``z = pi``).
    """
    q = _check_q(q)
    arr = _as_complex(z)
    close = _near_corner(arr, delta)
    if close.any():
        flat = int(np.flatnonzero(close.ravel())[0])
        raise CornerSingularityError(f"point {flat} lies within {delta:g} of a corner")
    out = np.abs(1.0 / np.tan(arr / 2.0)) ** (2.0 * q)
    return float(out) if out.ndim == 0 else out


def _inner_seed(q, xi):
    return 2.0 * ((1.0 + q) * xi / 2.0) ** (1.0 / (1.0 + q))


def inverse_map(q: float, xi, seed=None, tol: float = INVERSE_TOL, maxiter: int = NEWTON_MAXITER):
    """Solve ``F(z) = xi`` by damped Newton iteration.

    The start point is ``seed`` when given (scalar or matching array),
    otherwise the best of three asymptotic guesses (inner corner, outer
    corner, far arm).  Points that fail from the start point are retried by
    continuation: ``xi`` is approached in small steps from the image of the
    start point.  Points below the real axis are handled by reflection.

    Raises
    ------
    MapInversionError
        If a point does not converge; ``index`` is its flat position.
    """
    q = _check_q(q)
    target = _as_complex(xi)
    flat = target.ravel()
    if q == 0.0:
        out = flat.copy()
        _validate_strip(out)
        return complex(out[0]) if target.ndim == 0 else out.reshape(target.shape)

    lower = flat.imag < 0
    work = np.where(lower, np.conj(flat), flat)
    fpi = _outer_corner(q)
    rule = _rule(_BASE_RULE)
    if seed is None:
        z0 = _kernel.initial_guess(q, work, fpi, far_field_offset(q), rule)
    else:
        s = np.broadcast_to(np.asarray(seed, dtype=complex), target.shape).ravel()
        z0 = np.where(lower, np.conj(s), s)
    z, ok, err = _kernel.newton(q, work, z0, fpi, rule, tol, maxiter)
    z = np.array(z)
    exact_zero = work == 0
    z[exact_zero] = 0.0
    ok = np.array(ok) | exact_zero
    for i in np.flatnonzero(~ok):
        z[i] = _continuation(q, complex(work[i]), complex(z0[i]), fpi, rule, tol, maxiter, i)
    z = np.where(lower, np.conj(z), z)
    return complex(z[0]) if target.ndim == 0 else z.reshape(target.shape)


def _continuation(q, xi, z_start, fpi, rule, tol, maxiter, index):
    z_start = complex(np.clip(z_start.real, 0.0, math.pi) + 1j * max(z_start.imag, 0.0))
    xi_start = complex(_kernel.forward(q, np.array([z_start]), fpi, *rule)[0])
    for steps in (16, 128):
        z = z_start
        ok = True
        for j in range(1, steps + 1):
            xj = xi_start + (xi - xi_start) * j / steps
            zj, conv, _ = _kernel.newton(q, np.array([xj]), np.array([z]), fpi, rule, tol, maxiter)
            z = complex(np.asarray(zj)[0])
            ok = bool(np.asarray(conv)[0])
            if not ok:
                break
        if ok:
            return z
    raise MapInversionError(f"inverse map did not converge for xi={xi!r}", index=int(index))


def prefactors(q: float) -> tuple[float, float]:
    """Corner prefactors of the Jacobian expansion as conventionally quoted.

    ``f(q) = ((1+q)/2)**(-2q/(q+1))`` and ``g(q) = (2(1-q))**(2q/(1-q))``.
    The quoted ``g`` does not match the exact outer-corner expansion; see
    :func:`outer_prefactor`.
    """
    q = _check_q(q)
    f = ((1.0 + q) / 2.0) ** (-2.0 * q / (1.0 + q))
    g = (2.0 * (1.0 - q)) ** (2.0 * q / (1.0 - q))
    return f, g


def outer_prefactor(q: float) -> float:
    """Exact outer-corner constant ``((1-q)/2)**(2q/(1-q))``."""
    q = _check_q(q)
    return ((1.0 - q) / 2.0) ** (2.0 * q / (1.0 - q))


def _far_coordinate(q: float, xi: np.ndarray) -> np.ndarray:
    """Leading far-arm inverse ``z ~ exp(-i*pi*q/2) xi + i K_q`` (upper arm)."""
    return np.exp(-0.5j * math.pi * q) * xi + 1j * far_field_offset(q)


NEAR_PATCH = 0.1
FAR_PATCH = 3.0


def jacobian_asymptotic(q: float, xi, regime: str):
    """Asymptotic Jacobian in one of three regimes.

    ``near_inner``: ``f(q) |xi|**(-2q/(q+1))`` for ``|xi| <= 0.1 d``.
    ``near_outer``: ``c_out |pi d - xi|**(2q/(1-q))`` for ``|xi - pi d| <= 0.1 d``,
    with the exact constant from :func:`outer_prefactor`.
    ``far``: ``1 + 4q cos(Re z) exp(-|Im z|)`` in straight coordinates
    ``z ~ exp(-i pi q/2) xi + i K_q``, valid for ``|Im z| >= 3``.

    ``xi`` may be scalar or array; any point outside the patch raises
    :class:`DomainError`.
    """
    q = _check_q(q)
    sg = strip_geometry(q)
    arr = _as_complex(xi)
    lower = arr.imag < 0
    work = np.where(lower, np.conj(arr), arr)
    if regime == "near_inner":
        r = np.abs(work)
        if np.any(r > NEAR_PATCH * sg.d) or np.any(r == 0):
            raise DomainError("near_inner regime requires 0 < |xi| <= 0.1 d")
        f, _ = prefactors(q)
        out = f * r ** (-2.0 * q / (q + 1.0))
    elif regime == "near_outer":
        r = np.abs(sg.width - work)
        if np.any(r > NEAR_PATCH * sg.d):
            raise DomainError("near_outer regime requires |xi - pi d| <= 0.1 d")
        out = outer_prefactor(q) * r ** (2.0 * q / (1.0 - q))
    elif regime == "far":
        z = _far_coordinate(q, work)
        if np.any(z.imag < FAR_PATCH):
            raise DomainError("far regime requires the arm coordinate |Im z| >= 3")
        out = 1.0 + 4.0 * q * np.cos(z.real) * np.exp(-z.imag)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    return float(out) if out.ndim == 0 else out


def strip_to_physical(xi, l: float, q: float):
    """Map-plane point ``xi`` to physical ``(x, y)`` with corner distance ``l``.

    The inner corner goes to the origin and the outer corner to ``(0, -l)``.
    """
    sg = strip_geometry(q)
    w = -1j * np.asarray(xi, dtype=complex) * (l / sg.width)
    return w.real, w.imag


def physical_to_strip(x, y, l: float, q: float):
    """Inverse of :func:`strip_to_physical` (returns the map-plane point)."""
    sg = strip_geometry(q)
    w = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    return 1j * w * (sg.width / l)


@dataclass(frozen=True)
class MapSample:
    z: complex
    xi: complex
    jacobian: float


@dataclass(frozen=True)
class MapGrid:
    """Iso-coordinate grid in mode-strip coordinates ``u, v`` and its image.

    Arrays have shape ``(nv, nu)``; ``x, y`` are physical coordinates for
    corner distance ``l``.  The jacobian is infinite at the inner corner and
    zero at the outer one.
    """

    q: float
    l: float
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    xi: np.ndarray
    jacobian: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def samples(self) -> Iterator[MapSample]:
        for z, xi, j in zip(self.z.ravel(), self.xi.ravel(), self.jacobian.ravel()):
            yield MapSample(z=complex(z), xi=complex(xi), jacobian=float(j))


def export_contours(q: float, nu: int, nv: int, v_max: float, l: float = math.pi) -> MapGrid:
    """Sample iso-u and iso-v lines of the strip over the full guide.

    ``u`` spans ``[0, pi d]`` and ``v`` spans ``[-v_max, v_max]``; the
    negative ``v`` half is the mirror image of the positive one.
    """
    if nu < 2 or nv < 2:
        raise DomainError("nu and nv must be at least 2")
    if not (v_max > 0) or not math.isfinite(v_max):
        raise DomainError("v_max must be positive")
    sg = strip_geometry(q)
    u = np.linspace(0.0, sg.width, nu)
    v = np.linspace(-v_max, v_max, nv)
    U, V = np.meshgrid(u, v)
    z = (U + 1j * V) / sg.d
    xi = forward_map(q, z)
    with np.errstate(divide="ignore"):
        jac = (np.abs(np.cos(z / 2.0)) / np.abs(np.sin(z / 2.0))) ** (2.0 * q)
    x, y = strip_to_physical(xi, l, q)
    return MapGrid(q=sg.q, l=l, u=U, v=V, z=z, xi=xi, jacobian=jac, x=x, y=y)
