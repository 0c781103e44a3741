"""Oblique transverse modes and the corner-corrected WKB ground state.

The wavefunction is expanded in box modes taken along the slanted vertical
cross-section of the guide,

    psi(x, y) = sum_n psi_n(x) sin(n*pi/l * (y - a|x| + l)),

which turns the Helmholtz problem into a matrix Schroedinger equation with
the mode-index matrix ``N`` and the coupling matrix ``M``.  Only the kink of
the effective potential at ``x = 0`` is retained; it acts as a matrix delta
source whose jump condition fixes the bound-state energy and the mode
amplitudes ``u0``.

Energies are reported in scaled units ``E*(l/pi)**2`` unless noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, svd
from scipy.optimize import brentq

from .errors import DomainError, NoNullSpaceError
from .geometry import Geometry

# scan step and bracket refinement for determinant roots
SCAN_STEP = 1e-3
SCAN_TOP = 1.0 - 1e-6
ROOT_XTOL = 1e-13
NULL_SPACE_RTOL = 1e-8


@dataclass(frozen=True)
class ModeMatrices:
    size: int
    N: np.ndarray
    M: np.ndarray

    @property
    def N2(self) -> np.ndarray:
        return self.N @ self.N

    def commutator_N2_M(self) -> np.ndarray:
        """``[N^2, M]``; identically zero for a single mode."""
        return self.N2 @ self.M - self.M @ self.N2


@dataclass(frozen=True)
class ObliqueBoundState:
    scaled_energy: float
    u0: np.ndarray
    truncation: int
    slope_a: float

    @property
    def extended(self) -> bool:
        """True when the truncation exceeds the 2x2 case solved in closed form."""
        return self.truncation > 2


def build_mode_matrices(size: int) -> ModeMatrices:
    """Return the truncated ``N`` and ``M`` matrices with 1-based mode labels.

    ``M[m, n] = (1 - (-1)**(m+n)) * m*n / (m**2 - n**2)`` off the diagonal and
    zero on it.
    """
    if int(size) != size or size < 1:
        raise DomainError(f"truncation size must be a positive integer, got {size!r}")
    size = int(size)
    idx = np.arange(1, size + 1, dtype=float)
    N = np.diag(idx)
    m = idx[:, None]
    n = idx[None, :]
    odd = ((np.arange(1, size + 1)[:, None] + np.arange(1, size + 1)[None, :]) % 2) == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        M = np.where(odd, 2.0 * m * n / (m**2 - n**2), 0.0)
    return ModeMatrices(size=size, N=N, M=M)


def gauge_factor(g: Geometry, mm: ModeMatrices, x: float, sign: float = -1.0) -> np.ndarray:
    """``exp(sign * 2a|x|/l * M)``.  ``sign=-1`` is the forward gauge transform."""
    theta = 2.0 * g.slope_a * abs(x) / g.corner_distance_l
    return expm(sign * theta * mm.M)


def effective_potential(g: Geometry, mm: ModeMatrices, x: float) -> np.ndarray:
    """Matrix potential of the gauge-transformed oblique-mode equation.

    ``(pi/l)^2 (a^2+1) Nt(x)^2 + (2a/l)^2 M^2`` with
    ``Nt(x) = exp(-2a|x|/l M) N exp(2a|x|/l M)``.  Returned exactly as built;
    truncation can leave it slightly nonsymmetric.
    """
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    l = g.corner_distance_l
    a = g.slope_a
    fwd = gauge_factor(g, mm, x, -1.0)
    back = gauge_factor(g, mm, x, +1.0)
    Nt = fwd @ mm.N @ back
    return (math.pi / l) ** 2 * (a * a + 1.0) * (Nt @ Nt) + (2.0 * a / l) ** 2 * (mm.M @ mm.M)


def _power_32(mm: ModeMatrices, E_scaled: float) -> np.ndarray:
    if E_scaled >= 1.0:
        raise DomainError(
            f"scaled energy must lie below the first threshold 1, got {E_scaled!r}"
        )
    diag = np.diag(mm.N2) - E_scaled
    return np.diag(diag**1.5)


def corner_operator(g: Geometry, mm: ModeMatrices, E_scaled: float) -> np.ndarray:
    """``(a/pi)[N^2, M] + 2 (N^2 - E)^{3/2}`` in scaled units."""
    return (g.slope_a / math.pi) * mm.commutator_N2_M() + 2.0 * _power_32(mm, E_scaled)


def corner_determinant(g: Geometry, mm: ModeMatrices, E_scaled: float) -> float:
    """Determinant whose zeros in (0, 1) are scaled bound-state energies."""
    return float(np.linalg.det(corner_operator(g, mm, E_scaled)))


def determinant_roots(g: Geometry, mm: ModeMatrices) -> list[float]:
    """All sign changes of :func:`corner_determinant` on (0, 1), refined.

    The scan uses steps of ``SCAN_STEP`` up to ``1 - 1e-6``; each bracket is
    refined to ``ROOT_XTOL``.  Roots are returned in increasing order.
    """
    grid = np.append(np.arange(0.0, SCAN_TOP, SCAN_STEP), SCAN_TOP)
    vals = np.array([corner_determinant(g, mm, e) for e in grid])
    roots = []
    for i in range(len(grid) - 1):
        lo, hi = vals[i], vals[i + 1]
        if lo == 0.0:
            roots.append(float(grid[i]))
        elif lo * hi < 0.0:
            r = brentq(
                lambda e: corner_determinant(g, mm, e),
                grid[i], grid[i + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps,
            )
            roots.append(float(r))
    return roots


def ground_state_closed_form(g: Geometry) -> float:
    """Two-mode ground state energy in physical units.

    ``(pi/l)^2 (5/2 - 3/2 sqrt(1 + (2/3)^2 (2a/pi)^{4/3}))``.  Derived to
    first order in the slope; it degrades as ``a`` grows.
    """
    a = g.slope_a
    scaled = 2.5 - 1.5 * math.sqrt(1.0 + (4.0 / 9.0) * (2.0 * a / math.pi) ** (4.0 / 3.0))
    return (math.pi / g.corner_distance_l) ** 2 * scaled


def ground_state_scaled(g: Geometry) -> float:
    """:func:`ground_state_closed_form` in scaled units."""
    return ground_state_closed_form(g) * (g.corner_distance_l / math.pi) ** 2


def bound_state_vector(g: Geometry, mm: ModeMatrices, E_scaled: float) -> ObliqueBoundState:
    """Null vector of the corner jump operator at a root of the determinant.

    The operator is ``[(a/pi)[N^2,M] + 2(N^2-E)^{3/2}] (E - N^2)^{-1}`` (scaled
    form).  The right singular vector of its smallest singular value is
    returned, unit-normalized, with its first nonzero component positive.
    """
    A = corner_operator(g, mm, E_scaled)
    D_inv = np.diag(1.0 / (E_scaled - np.diag(mm.N2)))
    op = A @ D_inv
    _, s, vh = svd(op)
    if s[0] == 0.0 or s[-1] > NULL_SPACE_RTOL * s[0]:
        raise NoNullSpaceError(
            f"no null space at E={E_scaled!r}: sigma_min/sigma_max = "
            f"{(s[-1] / s[0]) if s[0] else float('nan'):.3e}"
        )
    u0 = vh[-1].copy()
    u0 /= np.linalg.norm(u0)
    first = np.flatnonzero(np.abs(u0) > 1e-14)[0]
    if u0[first] < 0:
        u0 = -u0
    return ObliqueBoundState(
        scaled_energy=float(E_scaled), u0=u0, truncation=mm.size, slope_a=g.slope_a
    )


def solve_ground_state(g: Geometry, size: int = 2) -> ObliqueBoundState:
    """Lowest determinant root below threshold together with its mode vector."""
    mm = build_mode_matrices(size)
    roots = determinant_roots(g, mm)
    if not roots:
        raise NoNullSpaceError(f"no bound state below threshold for a={g.slope_a!r}, size={size}")
    return bound_state_vector(g, mm, roots[0])


def _decay_rates(state: ObliqueBoundState, l: float) -> np.ndarray:
    n = np.arange(1, state.truncation + 1, dtype=float)
    return (math.pi / l) * np.sqrt(n**2 - state.scaled_energy)


def normalization(state: ObliqueBoundState, g: Geometry) -> float:
    """Factor making the reconstructed field square-integrate to one."""
    kappa = _decay_rates(state, g.corner_distance_l)
    return math.sqrt(2.0 / (g.corner_distance_l * np.sum(state.u0**2 / kappa**2)))


def oblique_wavefunction(state: ObliqueBoundState, g: Geometry, x, y):
    """Evaluate the bound state on physical points ``(x, y)``.

    Longitudinal profiles ``Nrm * kappa_n^{-1/2} exp(-kappa_n|x|) u0_n`` live in
    the gauge-transformed frame and are rotated back with
    ``exp(+2a|x|/l M)``.  The field is exactly zero outside
    ``a|x| - l < y < a|x|``.  Accepts scalars or broadcastable arrays.
    """
    l = g.corner_distance_l
    a = g.slope_a
    x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x_arr.shape)
    ax = np.abs(x_arr)
    inside = (y_arr < a * ax) & (y_arr > a * ax - l)
    if not inside.any():
        return out if out.ndim else float(out)

    mm = build_mode_matrices(state.truncation)
    kappa = _decay_rates(state, l)
    nrm = normalization(state, g)
    n = np.arange(1, state.truncation + 1, dtype=float)

    xs = ax[inside]
    ys = y_arr[inside]
    uniq, inv = np.unique(xs, return_inverse=True)
    # longitudinal amplitudes per distinct |x|, then inverse gauge rotation
    amps = np.empty((len(uniq), state.truncation))
    for k, xv in enumerate(uniq):
        ut = nrm * kappa**-0.5 * np.exp(-xv * kappa) * state.u0
        amps[k] = gauge_factor(g, mm, xv, +1.0) @ ut
    phase = (math.pi / l) * (ys - a * xs + l)
    modes = np.sin(np.outer(phase, n))
    out[inside] = np.sum(amps[inv] * modes, axis=1)
    return out if out.ndim else float(out)
