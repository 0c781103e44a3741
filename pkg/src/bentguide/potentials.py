"""Transverse-mode potentials of the bent guide in mode-strip coordinates.

In the straight frame the Helmholtz equation picks up the metric factor
``|F'(z)|**2``.  Expanding in strip modes ``sin(n u / d)`` on
``0 <= u <= pi d`` (``u + i v = d z``) gives the coupled equations

    sum_m (-delta_nm d^2/dv^2 - E V_nm(v)) psi_m = eps_n psi_n,
    eps_n = -n^2 / d^2,

with

    V_nm(v) = (2/pi) int_0^pi sin(n x) sin(m x) cos(pi q/2)^2
              |tan((x + i v/d)/2)|^(2q) dx.

The weight ``cos(pi q/2)^2 |tan|^(2q)`` is ``c^2 / jacobian_exact`` so
``V_nm -> cos(pi q/2)^2 delta_nm`` far along the arms; every mode then
reaches its continuum at ``E = n^2`` (threshold 1 for ``n = 1``).  The
diagonal ``V_n(v)`` peaks at ``v = 0``, so ``-E V_n`` is a well centered on
the bend.

The ``x`` quadrature is composite Gauss-Legendre with the end panels
refined geometrically toward both corners, where the weight has power-law
behaviour, and with the uniform panel count doubled until the result
settles.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .conformal import prefactors, strip_geometry
from .errors import DomainError

GL_ORDER = 10
MIN_PANELS = 64
MAX_PANELS = 1024
GRADING = 0.25
GRADING_LEVELS = 14
QUAD_TOL = 1e-8

VPRIME_STEP = 1e-3
VPRIME_RANGE = 1.0
_CHUNK = 2048


@functools.lru_cache(maxsize=None)
def _x_rule(panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, pi]``; end panels split geometrically."""
    t, w = np.polynomial.legendre.leggauss(GL_ORDER)
    edges = np.linspace(0.0, math.pi, panels + 1)
    h = edges[1]
    left = [0.0] + [h * GRADING**k for k in range(GRADING_LEVELS, 0, -1)]
    right = [math.pi - h * GRADING**k for k in range(1, GRADING_LEVELS + 1)] + [math.pi]
    bp = np.concatenate([left, edges[1:-1], right])
    a, b = bp[:-1, None], bp[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * t
    wx = 0.5 * (b - a) * w
    return x.ravel(), wx.ravel()


def _validate(q: float, n_modes: int) -> None:
    if not (0.0 <= q < 1.0):
        raise DomainError(f"q must lie in [0, 1), got {q!r}")
    if int(n_modes) != n_modes or n_modes < 1:
        raise DomainError("mode indices must be positive integers")


def _mode_matrix_on_rule(q: float, n_modes: int, v: np.ndarray, panels: int) -> np.ndarray:
    sg = strip_geometry(q)
    x, w = _x_rule(panels)
    c2 = math.cos(0.5 * math.pi * q) ** 2
    n = np.arange(1, n_modes + 1)
    S = np.sin(np.outer(n, x))
    # (n, m, x) basis products folded with the quadrature weights
    B = (S[:, None, :] * S[None, :, :] * w).reshape(n_modes * n_modes, -1)
    out = np.empty((len(v), n_modes * n_modes))
    for lo in range(0, len(v), _CHUNK):
        y = np.abs(v[lo:lo + _CHUNK])[:, None] / sg.d
        weight = c2 * np.abs(np.tan((x[None, :] + 1j * y) / 2.0)) ** (2.0 * q)
        out[lo:lo + _CHUNK] = (2.0 / math.pi) * (weight @ B.T)
    return out.reshape(len(v), n_modes, n_modes)


def mode_potential_matrix(q: float, n_modes: int, v) -> np.ndarray:
    """``V_nm(v)`` for ``n, m = 1..n_modes``; shape ``(len(v), n_modes, n_modes)``.

    Panels start at 64 and double until two successive results agree to
    ``1e-8``.
    """
    _validate(q, n_modes)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise DomainError("v must be finite")
    panels = MIN_PANELS
    prev = _mode_matrix_on_rule(q, n_modes, v, panels)
    while True:
        panels *= 2
        cur = _mode_matrix_on_rule(q, n_modes, v, panels)
        if np.max(np.abs(cur - prev)) < QUAD_TOL or panels >= MAX_PANELS:
            return cur
        prev = cur


def potential_matrix_element(q: float, n: int, m: int, v):
    """Single element ``V_nm(v)``; ``v`` may be scalar or array."""
    _validate(q, max(n, m))
    if min(n, m) < 1:
        raise DomainError("mode indices must be positive integers")
    vals = mode_potential_matrix(q, max(n, m), v)[:, n - 1, m - 1]
    return float(vals[0]) if np.ndim(v) == 0 else vals


def far_field_value(q: float) -> float:
    """Limit of ``V_nn`` far along the arms, ``cos(pi q/2)**2``."""
    return math.cos(0.5 * math.pi * q) ** 2


def mode_epsilon(q: float, n: int) -> float:
    """Transverse eigenvalue ``eps_n = -n^2/d^2 = -n^2 cos(pi q/2)^2``."""
    return -(n**2) / strip_geometry(q).d ** 2


@dataclass(frozen=True)
class PotentialCurve:
    """Diagonal potential ``V_n(v)`` on a symmetric uniform grid.

    ``vprime_max`` is the largest slope magnitude of ``V_n`` on ``(0, 1]``
    from centered differences with step ``1e-3``.
    """

    q: float
    n: int
    v_samples: np.ndarray
    values: np.ndarray
    v0_at: float
    vprime_max: float

    @property
    def epsilon_n(self) -> float:
        return mode_epsilon(self.q, self.n)

    @property
    def far_value(self) -> float:
        return far_field_value(self.q)

    def derivative(self) -> np.ndarray:
        """Centered-difference slope on the sample grid (one-sided at the ends)."""
        return np.gradient(self.values, self.v_samples)


def numeric_features(q: float, n: int) -> tuple[float, float]:
    """``(V_n(0), max |V_n'|)`` with the slope scanned on ``(0, 1]``."""
    _validate(q, n)
    v = np.arange(0.0, VPRIME_RANGE + 1.5 * VPRIME_STEP, VPRIME_STEP)
    vals = mode_potential_matrix(q, n, v)[:, n - 1, n - 1]
    slope = (vals[2:] - vals[:-2]) / (2.0 * VPRIME_STEP)
    return float(vals[0]), float(np.max(np.abs(slope)))


def diagonal_potential_curve(q: float, n: int, v_max: float = 12.0, samples: int = 4001) -> PotentialCurve:
    """Sample ``V_n`` on ``samples`` points spanning ``[-v_max, v_max]``."""
    _validate(q, n)
    if samples < 33 or int(samples) != samples:
        raise DomainError("samples must be an integer >= 33")
    if not (v_max >= 5.0) or not math.isfinite(v_max):
        raise DomainError("v_max must be at least 5")
    v = np.linspace(-v_max, v_max, int(samples))
    vals = mode_potential_matrix(q, n, v)[:, n - 1, n - 1]
    v0, vp = numeric_features(q, n)
    return PotentialCurve(q=float(q), n=int(n), v_samples=v, values=vals, v0_at=v0, vprime_max=vp)


def estimate_features(q: float, n: int) -> tuple[float, float]:
    """Closed-form feature estimates, independent of ``n``.

    ``V_n(0) ~ cos(pi q/2)**(2q/(q+1))`` and
    ``V'_max ~ (q/4) cos(pi q/2)**((2q+1)/(q+1))``.
    """
    if not (0.0 <= q < 1.0):
        raise DomainError(f"q must lie in [0, 1), got {q!r}")
    c = math.cos(0.5 * math.pi * q)
    return c ** (2.0 * q / (q + 1.0)), 0.25 * q * c ** ((2.0 * q + 1.0) / (q + 1.0))


def near_origin_potential(q: float, n: int, m: int, v: float) -> float:
    """Corner approximation of ``V_nm`` built from the inner-corner power law.

    ``(2 f(q) / (pi d)) int_0^{pi d} sin(n u/d) sin(m u/d) (u^2 + v^2)^(q/(q+1)) du``
    with ``f`` from :func:`bentguide.conformal.prefactors`.  Only defined for
    ``|v| <= 0.1 d``.
    """
    _validate(q, max(n, m))
    sg = strip_geometry(q)
    if abs(v) > 0.1 * sg.d:
        raise DomainError("near-origin form requires |v| <= 0.1 d")
    f, _ = prefactors(q)
    x, w = _x_rule(MIN_PANELS)
    u = sg.d * x
    integrand = np.sin(n * x) * np.sin(m * x) * (u**2 + v**2) ** (q / (q + 1.0))
    return float(2.0 * f / (math.pi * sg.d) * sg.d * np.dot(integrand, w))
