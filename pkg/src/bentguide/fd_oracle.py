"""Brute-force finite-difference Helmholtz solver on the bent guide.

The guide ``a|x| - l < y < a|x|`` is truncated by cuts perpendicular to
each arm, placed where the arm midline crosses ``|x| = x_cut``.  The
negative Laplacian is discretized with the Shortley-Weller five-point
stencil: at sites next to a slanted wall the arm length toward the wall is
shortened to the exact wall distance, which keeps the scheme second order
without a body-fitted mesh.  Sites closer than ``1e-9 h`` to a wall are
treated as wall points.

The lowest eigenvalues come from shift-invert Arnoldi around zero with a
deterministic all-ones start vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from .errors import BentGuideError, ConvergenceError, DomainError, GridTooCoarseError
from .geometry import Geometry, arm_threshold, geometry_from_q

WALL_TOL = 1e-9
GUARD_BAND = 1e-4
EIG_TOL = 1e-12
# a state counts as localized when less than this fraction of its weight
# sits in the outer halves of the arms; extended arm states carry about 1/2
LOCALIZATION_FRACTION = 0.25
ARM_LENGTH = 32.0


@dataclass(frozen=True)
class BentDomainGrid:
    """Interior lattice sites and the discrete operator.

    ``x, y`` list the interior sites row-major in ``(x, y)``; ``operator`` is
    the sparse negative Laplacian on them (Dirichlet walls).
    """

    geometry: Geometry
    h: float
    x_cut: float
    x: np.ndarray
    y: np.ndarray
    i: np.ndarray
    j: np.ndarray
    operator: sp.csc_matrix = field(repr=False)

    @property
    def interior_points(self) -> int:
        return len(self.x)

    @property
    def threshold(self) -> float:
        """Arm continuum edge ``(pi / (l cos(pi q/2)))**2``."""
        return arm_threshold(self.geometry)


def _x_interval(a: float, l: float, C: float, x: np.ndarray, y: np.ndarray, x_cut: float):
    """Left and right ends of the horizontal guide chord through each site."""
    if a == 0.0:
        return np.full_like(x, -x_cut), np.full_like(x, x_cut)
    outer = (y + l) / a
    inner = y / a
    above = y >= 0
    left = np.where(above & (x > 0), inner, -outer)
    right = np.where(above & (x < 0), -inner, outer)
    reach = (C - a * y) if a > 0 else np.inf
    return np.maximum(left, -reach), np.minimum(right, reach)


def build_grid(g: Geometry, h: float, x_cut: float) -> BentDomainGrid:
    """Enumerate interior sites and assemble the Shortley-Weller operator.

    Parameters
    ----------
    g : Geometry
        Bend; the slope ``a`` and corner distance ``l`` define the region.
    h : float
        Lattice spacing; must be below ``l/20``.
    x_cut : float
        Horizontal position where each arm midline is cut off.
    """
    l = g.corner_distance_l
    a = g.slope_a
    if not (h > 0) or not math.isfinite(h):
        raise DomainError("h must be positive")
    if h >= l / 20.0:
        raise GridTooCoarseError(f"h must be below l/20 = {l / 20.0:g}, got {h:g}")
    if not (x_cut > 0) or not math.isfinite(x_cut):
        raise DomainError("x_cut must be positive")
    tol = WALL_TOL * h
    C = x_cut * (1.0 + a * a) - a * l / 2.0
    nx = int(math.ceil((x_cut + a * l / (2.0 * (1.0 + a * a))) / h)) + 2
    xs = np.arange(-nx, nx + 1) * h
    ymax = a * nx * h
    js = np.arange(int(math.floor(-l / h)) - 1, int(math.ceil(ymax / h)) + 2)
    X, Y = np.meshgrid(xs, js * h, indexing="ij")
    up = a * np.abs(X) - Y
    lo = Y - (a * np.abs(X) - l)
    cut = C - np.abs(X) - a * Y if a > 0 else x_cut - np.abs(X)
    inside = (up > tol) & (lo > tol) & (cut > tol)
    count = int(inside.sum())
    if count == 0:
        raise DomainError("grid has no interior points")
    idx = -np.ones(X.shape, dtype=np.int64)
    idx[inside] = np.arange(count)
    I, J = np.nonzero(inside)
    x = X[I, J]
    y = Y[I, J]

    # distances to the nearest wall in each lattice direction
    h_north = np.minimum(h, up[I, J])
    if a > 0:
        h_north = np.minimum(h_north, cut[I, J] / a)
    h_south = np.minimum(h, lo[I, J])
    left, right = _x_interval(a, l, C, x, y, x_cut)
    h_east = np.minimum(h, right - x)
    h_west = np.minimum(h, x - left)

    rows = [np.arange(count)]
    cols = [np.arange(count)]
    vals = [2.0 / (h_east * h_west) + 2.0 / (h_north * h_south)]
    for di, dj, arm, opp in ((1, 0, h_east, h_west), (-1, 0, h_west, h_east),
                             (0, 1, h_north, h_south), (0, -1, h_south, h_north)):
        nb = idx[I + di, J + dj]
        # couple only to a neighbour reached without crossing a wall
        ok = (nb >= 0) & (arm >= h * (1.0 - WALL_TOL))
        rows.append(np.flatnonzero(ok))
        cols.append(nb[ok])
        vals.append((-2.0 / (arm * (arm + opp)))[ok])
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(count, count)
    )
    return BentDomainGrid(geometry=g, h=h, x_cut=x_cut, x=x, y=y, i=I - nx, j=J, operator=A)


@dataclass
class EigenPair:
    """One discrete eigenvalue with its field and diagnostics.

    ``energy`` is in physical units and ``normalized`` divides it by the arm
    threshold.  ``bound`` requires the energy to sit below the guard band and
    the field to be localized at the bend.
    """

    energy: float
    normalized: float
    field: np.ndarray = field(repr=False)
    residual: float = 0.0
    tail_fraction: float = 0.0
    bound: bool = False


def lowest_eigenpairs(grid: BentDomainGrid, k: int = 4) -> list[EigenPair]:
    """``k`` smallest eigenvalues of the discrete negative Laplacian, ascending.

    Fields are real and unit-norm, with the sign fixed so their largest component is
    positive.  Residual norms ``|A v - E v|`` are reported per pair.
    """
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    A = grid.operator
    n = A.shape[0]
    if k >= n - 1:
        raise DomainError("k must be smaller than the number of interior points minus one")
    try:
        vals, vecs = eigs(A, k=k, sigma=0.0, v0=np.ones(n), tol=EIG_TOL)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(vals.real)
    thr = grid.threshold
    outer = np.abs(grid.x) > 0.5 * grid.x_cut
    out = []
    for m in order:
        vec = vecs[:, m]
        # fix the arbitrary complex phase, then keep the real field
        vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
        f = vec.real / np.linalg.norm(vec.real)
        E = float(vals[m].real)
        res = float(np.linalg.norm(A @ f - E * f))
        tail = float(np.sum(f[outer] ** 2))
        bound = E < thr * (1.0 - GUARD_BAND) and tail < LOCALIZATION_FRACTION
        out.append(EigenPair(energy=E, normalized=E / thr, field=f, residual=res,
                             tail_fraction=tail, bound=bound))
    return out


def resolution_policy(g: Geometry) -> tuple[float, float]:
    """``(h, x_cut)`` used by :func:`bound_count_vs_q`.

    ``h = min(l/40, w/16)`` keeps at least 16 sites across the arm width
    ``w``.  The arms extend ``32 l`` along their axis, long enough for the
    weakly bound state of a shallow bend (decay length of several ``l`` at
    ``q = 0.1``) to fit.
    """
    l = g.corner_distance_l
    h = min(l / 40.0, g.arm_width / 16.0)
    return h, ARM_LENGTH * l * math.cos(g.bend_half_angle)


def bound_count_vs_q(q_grid, l: float = math.pi, k: int = 6) -> list[tuple[float, int | None, str | None]]:
    """Number of bound FD eigenvalues for each ``q``.

    Returns ``(q, count, error)`` triples; a failure at one ``q`` is recorded
    with ``count = None`` and the sweep continues.
    """
    out = []
    for q in q_grid:
        try:
            if not (0.0 < q <= 0.95):
                raise DomainError("q must lie in (0, 0.95]")
            g = geometry_from_q(q, l)
            h, x_cut = resolution_policy(g)
            pairs = lowest_eigenpairs(build_grid(g, h, x_cut), k)
            out.append((float(q), sum(p.bound for p in pairs), None))
        except (BentGuideError, ValueError) as exc:
            out.append((float(q), None, str(exc)))
    return out


def ground_state_scaled(grid: BentDomainGrid) -> float:
    """Lowest eigenvalue in oblique scaled units ``E (l/pi)**2``."""
    E = lowest_eigenpairs(grid, 1)[0].energy
    return E * (grid.geometry.corner_distance_l / math.pi) ** 2
