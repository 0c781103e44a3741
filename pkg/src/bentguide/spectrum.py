"""Corner-corrected WKB spectrum in conformal coordinates, with FD cross-checks.

The quantization condition keeps only the corner phase shift
``Delta = E (V'(0+) - V'(0-)) |2 (eps_n + E V_n(0))|^(-3/2)`` and requires
``Delta / 4 = 1``.  With the derivative jump replaced by ``2 V'_max`` and
``eps_n = -n^2 cos(pi q/2)^2`` this is the cubic

    (n^2 cos(pi q/2)^2 - E V_n(0))^3 = E^2 V'_max^2 / 32,

solved here in closed form.  Energies are in units where the arm threshold
is 1.  ``below_threshold`` compares against that global threshold; the
per-mode continuum onset ``n^2`` (where ``E V_n`` reaches the transverse
energy far along the arm) is carried as a diagnostic.

Direct finite-difference solutions of the diagonal and the coupled
mode equations serve as internal oracles.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import simpson
from scipy.interpolate import interp1d
from scipy.sparse.linalg import eigsh

from .conformal import forward_map, map_derivative, strip_geometry, strip_to_physical
from .errors import BentGuideError, DomainError, GridTooCoarseError, NoAdmissibleRootError
from .potentials import (
    PotentialCurve,
    diagonal_potential_curve,
    estimate_features,
    far_field_value,
    mode_epsilon,
    mode_potential_matrix,
    numeric_features,
)

GLOBAL_THRESHOLD = 1.0
PHASE_GUARD = 1e-12

# FD defaults: bound states near threshold decay slowly in v, so the box
# must reach well past the decay length for the tail test to mean anything
FD_V_MAX = 100.0
FD_SAMPLES = 10001
FD_EIGS = 6
DECAY_RATIO = 1e-4
RESOLUTION_TOL = 1e-3

METHODS = ("cubic_estimate", "cubic_numeric_features", "fd_1d", "fd_coupled")


@dataclass
class SpectrumResult:
    """One energy level indexed by ``(q, n)``.

    ``threshold`` is the global continuum edge (1); ``mode_onset`` is where
    mode ``n`` itself joins the continuum.  ``delta`` and ``action`` are
    diagnostics; ``error`` records a failure inside a sweep.
    """

    q: float
    n: int
    energy: float
    method: str
    epsilon_n: float
    below_threshold: bool
    threshold: float = GLOBAL_THRESHOLD
    mode_onset: float = float("nan")
    delta: float = float("nan")
    action: float = float("nan")
    error: str | None = None


def classical_action(curve: PotentialCurve, E: float) -> float:
    """``sqrt(2) int_0^{v0} sqrt(eps_n + E V_n(v)) dv`` up to the turning point.

    The radicand is interpolated linearly between samples and integrated
    exactly.  Returns 0 with no allowed region at ``v = 0`` and ``inf`` when
    the radicand never vanishes on the sampled range (an unbound orbit).
    """
    if not (E > 0) or not math.isfinite(E):
        raise DomainError("E must be positive")
    v = curve.v_samples
    half = v >= 0
    vs = v[half]
    r = curve.epsilon_n + E * curve.values[half]
    if r[0] <= 0.0:
        return 0.0
    neg = np.flatnonzero(r <= 0.0)
    if neg.size == 0:
        return math.inf
    k = neg[0]
    # turning point on the last segment
    v_turn = vs[k - 1] + (vs[k] - vs[k - 1]) * r[k - 1] / (r[k - 1] - r[k])
    vv = np.append(vs[:k], v_turn)
    rr = np.append(r[:k], 0.0)
    dv = np.diff(vv)
    r0, r1 = rr[:-1], rr[1:]
    slope = (r1 - r0) / dv
    flat = np.abs(slope) < 1e-14
    seg = np.where(
        flat,
        np.sqrt(np.maximum(r0, 0.0)) * dv,
        (2.0 / 3.0) * (np.maximum(r1, 0.0) ** 1.5 - np.maximum(r0, 0.0) ** 1.5) / np.where(flat, 1.0, slope),
    )
    return math.sqrt(2.0) * float(np.sum(seg))


def corner_phase_shift(curve_features: tuple[float, float], epsilon_n: float, E: float) -> float:
    """``Delta = 2 E V'_max |2 (eps_n + E V_n(0))|^(-3/2)``."""
    v0, vp = curve_features
    gap = epsilon_n + E * v0
    if abs(gap) < PHASE_GUARD:
        raise DomainError("eps_n + E V_n(0) is too close to zero for the phase shift")
    return 2.0 * E * vp * abs(2.0 * gap) ** -1.5


def real_cubic_roots(a: float, b: float, c: float, d: float) -> list[float]:
    """Real roots of ``a x^3 + b x^2 + c x + d`` by Cardano's method, ascending."""
    if a == 0.0:
        raise DomainError("leading coefficient must be nonzero")
    b, c, d = b / a, c / a, d / a
    shift = b / 3.0
    p = c - b * b / 3.0
    qq = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (qq / 2.0) ** 2 + (p / 3.0) ** 3
    # a discriminant at rounding level of its terms is a double root
    if abs(disc) <= 16.0 * sys.float_info.epsilon * ((qq / 2.0) ** 2 + abs(p / 3.0) ** 3):
        disc = 0.0
    if p == 0.0 and qq == 0.0:
        roots = [0.0]
    elif disc > 0.0:
        s = math.sqrt(disc)
        roots = [math.copysign(abs(-qq / 2.0 + s) ** (1 / 3), -qq / 2.0 + s)
                 + math.copysign(abs(-qq / 2.0 - s) ** (1 / 3), -qq / 2.0 - s)]
    elif disc == 0.0:
        u = math.copysign(abs(qq / 2.0) ** (1 / 3), -qq / 2.0)
        roots = [2.0 * u, -u]
    else:
        # three real roots, trigonometric form
        r = 2.0 * math.sqrt(-p / 3.0)
        phi = math.acos(max(-1.0, min(1.0, 3.0 * qq / (p * r))))
        roots = [r * math.cos((phi - 2.0 * math.pi * k) / 3.0) for k in range(3)]
    out = []
    for x in sorted(x - shift for x in roots):
        # Newton polish recovers digits lost to cancellation in the closed form
        for _ in range(3):
            f = ((x + b) * x + c) * x + d
            df = (3.0 * x + 2.0 * b) * x + c
            if df == 0.0 or f == 0.0:
                break
            x_new = x - f / df
            if abs(((x_new + b) * x_new + c) * x_new + d) >= abs(f):
                break
            x = x_new
        out.append(x)
    return out


def solve_cubic_energy(q: float, n: int, features: tuple[float, float], method: str = "cubic_estimate") -> SpectrumResult:
    """Closed-form root of the corner quantization cubic.

    Written in ``x = n^2 cos(pi q/2)^2 - E V_n(0)`` the cubic reads
    ``x^3 - k x^2 + 2 k A x - k A^2 = 0`` with ``A = n^2 cos^2`` and
    ``k = V'_max^2 / (32 V_n(0)^2)``; it has exactly one root with
    ``0 <= x < A``, which gives the smallest admissible positive energy.
    """
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    v0, vp = features
    if not (v0 > 0.0):
        raise DomainError("V_n(0) must be positive")
    A = n**2 * math.cos(0.5 * math.pi * q) ** 2
    k = vp**2 / (32.0 * v0**2)
    roots = real_cubic_roots(1.0, -k, 2.0 * k * A, -k * A * A)
    admissible = [x for x in roots if -1e-14 * A <= x < A]
    if not admissible:
        raise NoAdmissibleRootError(f"no admissible root for q={q}, n={n}")
    x = max(admissible[0], 0.0)
    E = (A - x) / v0
    eps = mode_epsilon(q, n)
    try:
        delta = corner_phase_shift(features, eps, E)
    except DomainError:
        delta = float("nan")
    return SpectrumResult(
        q=float(q), n=int(n), energy=E, method=method, epsilon_n=eps,
        below_threshold=E < GLOBAL_THRESHOLD, mode_onset=float(n**2), delta=delta,
    )


def spectrum_sweep(q_grid, n_max: int, feature_source: str = "estimate") -> list[SpectrumResult]:
    """Cubic energies for every ``q`` in ``q_grid`` and ``n = 1..n_max``.

    ``feature_source`` is ``"estimate"`` (closed-form features) or
    ``"numeric"`` (features from the computed potential).  Failures at a
    point are stored on its result and the sweep continues.
    """
    if feature_source not in ("estimate", "numeric"):
        raise DomainError(f"unknown feature source {feature_source!r}")
    if int(n_max) != n_max or n_max < 1:
        raise DomainError("n_max must be a positive integer")
    method = "cubic_estimate" if feature_source == "estimate" else "cubic_numeric_features"
    out = []
    for q in q_grid:
        for n in range(1, n_max + 1):
            try:
                feats = estimate_features(q, n) if feature_source == "estimate" else numeric_features(q, n)
                out.append(solve_cubic_energy(q, n, feats, method=method))
            except (BentGuideError, ValueError) as exc:
                eps = mode_epsilon(q, n) if 0.0 <= q < 1.0 else float("nan")
                out.append(SpectrumResult(
                    q=float(q), n=n, energy=float("nan"), method=method,
                    epsilon_n=eps, below_threshold=False, error=str(exc),
                ))
    return out


@dataclass
class FDLevel:
    """One FD eigenvalue with its profile on the interior grid."""

    energy: float
    decays: bool
    v: np.ndarray
    profile: np.ndarray = field(repr=False)


def _laplacian(m: int, h: float) -> sp.csr_matrix:
    return sp.diags([np.full(m - 1, -1.0), np.full(m, 2.0), np.full(m - 1, -1.0)], [-1, 0, 1]) / h**2


def _generalized_lowest(q: float, v: np.ndarray, Vmats: np.ndarray, k: int) -> list[FDLevel]:
    """Block FD solve of ``(-d2/dv2 - eps) psi = E V psi`` with Dirichlet ends.

    ``v`` is the full uniform grid including the two boundary points;
    ``Vmats`` holds the potential matrix on the interior points.
    """
    h = v[1] - v[0]
    vi = v[1:-1]
    m = len(vi)
    nm = Vmats.shape[1]
    L = _laplacian(m, h)
    K = sp.block_diag([L + (-mode_epsilon(q, n)) * sp.identity(m) for n in range(1, nm + 1)], format="csc")
    B = sp.bmat(
        [[sp.diags(Vmats[:, i, j]) for j in range(nm)] for i in range(nm)], format="csc"
    )
    k = min(k, nm * m - 2)
    vals, vecs = eigsh(K, k=k, M=B, sigma=0.0, which="LM", v0=np.ones(nm * m))
    order = np.argsort(vals)
    levels = []
    for j in order:
        psi = vecs[:, j].reshape(nm, m)
        amp = np.sqrt(np.sum(psi**2, axis=0))
        peak = amp.max()
        decays = bool(peak > 0 and max(amp[0], amp[-1]) < DECAY_RATIO * peak)
        levels.append(FDLevel(energy=float(vals[j]), decays=decays, v=vi, profile=psi))
    return levels


def _bound(levels: list[FDLevel], onset: float) -> list[float]:
    return [lv.energy for lv in levels if lv.decays and 0.0 < lv.energy < onset]


def fd_levels_1d(curve: PotentialCurve, k: int = FD_EIGS) -> list[FDLevel]:
    """Lowest ``k`` FD levels of the diagonal equation on the curve's grid."""
    v = curve.v_samples
    steps = np.diff(v)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise DomainError("curve must be sampled on a uniform grid")
    h = v[1] - v[0]
    m = len(v) - 2
    K = (_laplacian(m, h) + (-curve.epsilon_n) * sp.identity(m)).tocsc()
    B = sp.diags(curve.values[1:-1], format="csc")
    vals, vecs = eigsh(K, k=min(k, m - 2), M=B, sigma=0.0, which="LM", v0=np.ones(m))
    out = []
    for j in np.argsort(vals):
        psi = vecs[:, j]
        amp = np.abs(psi)
        decays = bool(max(amp[0], amp[-1]) < DECAY_RATIO * amp.max())
        out.append(FDLevel(energy=float(vals[j]), decays=decays, v=v[1:-1], profile=psi[None, :]))
    return out


def solve_1d_fd(curve: PotentialCurve, epsilon_n: float | None = None, check_resolution: bool = False) -> list[float]:
    """Bound energies of ``(-d2/dv2 - E V_n) psi = eps_n psi`` by finite differences.

    Energies are generalized eigenvalues below the mode onset ``n^2`` whose
    eigenvectors decay to ``1e-4`` of their peak at the box ends.  With
    ``check_resolution`` the curve is resampled at twice the density and a
    shift above ``1e-3`` raises :class:`GridTooCoarseError`.
    """
    if epsilon_n is not None and not math.isclose(epsilon_n, curve.epsilon_n, rel_tol=1e-12):
        raise DomainError("epsilon_n does not match the curve's mode")
    levels = fd_levels_1d(curve)
    bound = _bound(levels, float(curve.n**2))
    if check_resolution and bound:
        fine = diagonal_potential_curve(curve.q, curve.n, float(curve.v_samples[-1]), 2 * len(curve.v_samples) - 1)
        fine_bound = _bound(fd_levels_1d(fine), float(curve.n**2))
        _compare_resolution(bound, fine_bound)
    return bound


def _compare_resolution(coarse: list[float], fine: list[float]) -> None:
    for j, e in enumerate(coarse):
        if j >= len(fine) or abs(fine[j] - e) > RESOLUTION_TOL:
            raise GridTooCoarseError(
                f"level {j} moved by more than {RESOLUTION_TOL:g} when the grid was refined"
            )


def fd_curve(q: float, n: int, v_max: float = FD_V_MAX, grid_n: int = FD_SAMPLES) -> PotentialCurve:
    """Potential curve on the default FD box."""
    return diagonal_potential_curve(q, n, v_max, grid_n)


def coupled_levels(q: float, n_modes: int, v_max: float = FD_V_MAX, grid_n: int = FD_SAMPLES, k: int = FD_EIGS) -> list[FDLevel]:
    if not (1 <= n_modes <= 6) or int(n_modes) != n_modes:
        raise DomainError("n_modes must be an integer in [1, 6]")
    if n_modes == 1:
        # the single block is exactly the diagonal problem
        return fd_levels_1d(diagonal_potential_curve(q, 1, v_max, int(grid_n)), k)
    v = np.linspace(-v_max, v_max, int(grid_n))
    Vm = mode_potential_matrix(q, n_modes, v[1:-1])
    return _generalized_lowest(q, v, Vm, k)


def solve_coupled_fd(q: float, n_modes: int, v_max: float = FD_V_MAX, grid_n: int = FD_SAMPLES,
                     check_resolution: bool = False) -> list[float]:
    """Bound energies of the coupled mode equations with the full ``V_nm``.

    The block system is assembled on the same grid as :func:`solve_1d_fd`;
    with ``n_modes = 1`` both reduce to the identical matrix problem.
    Energies below the first-mode onset 1 that decay are returned.
    """
    if q == 0.0:
        return []
    bound = _bound(coupled_levels(q, n_modes, v_max, grid_n), GLOBAL_THRESHOLD)
    if check_resolution and bound:
        fine = _bound(coupled_levels(q, n_modes, v_max, 2 * int(grid_n) - 1), GLOBAL_THRESHOLD)
        _compare_resolution(bound, fine)
    return bound


@dataclass(frozen=True)
class DensityField:
    """Probability density of a conformal-mode state sampled on the strip.

    ``x, y, density`` are flat arrays of physical points (both halves of the
    guide).  ``strip_norm`` is the normalization integral computed with the
    analytic Jacobian; ``lattice_norm`` re-integrates the same density using
    the areas of the mapped grid cells.
    """

    q: float
    n: int
    energy: float
    profile_energy: float
    x: np.ndarray
    y: np.ndarray
    density: np.ndarray
    strip_norm: float
    lattice_norm: float


def density_map(q: float, n: int = 1, E: float | None = None, grid: tuple[int, int] = (41, 801),
                l: float = math.pi, v_max: float | None = None) -> DensityField:
    """Density of ``phi(v) sin(n u/d)`` mapped onto the physical guide.

    ``phi`` is the lowest decaying FD profile of the diagonal equation.  The
    reported ``energy`` is ``E`` when given, otherwise the cubic root with
    closed-form features.  ``grid = (nu, nv)`` samples ``u`` across the
    strip and ``v >= 0`` along it; the ``v < 0`` half is the mirror image.
    """
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    nu, nv = grid
    if nu < 3 or nv < 3:
        raise DomainError("grid must have at least 3 points per direction")
    if E is None:
        E = solve_cubic_energy(q, n, estimate_features(q, n)).energy
    levels = fd_levels_1d(fd_curve(q, n))
    decaying = [lv for lv in levels if lv.decays and lv.energy < n**2]
    if not decaying:
        raise BentGuideError(f"no decaying FD profile for q={q}, n={n}")
    lev = decaying[0]
    phi = interp1d(lev.v, lev.profile[0], kind="cubic", bounds_error=False, fill_value=0.0)
    sg = strip_geometry(q)
    if v_max is None:
        amp = np.abs(lev.profile[0])
        v_max = float(np.max(np.abs(lev.v[amp > 1e-4 * amp.max()])))
    u = np.linspace(0.0, sg.width, nu)
    v = np.linspace(0.0, v_max, nv)
    U, V = np.meshgrid(u, v)
    psi = phi(V) * np.sin(n * U / sg.d)
    z = (U + 1j * V) / sg.d
    xi = forward_map(q, z)
    x, y = strip_to_physical(xi, l, q)
    scale = l / sg.width
    # physical area element: |F'(z)|^2 |dz|^2 scale^2, with dz = (du + i dv)/d
    with np.errstate(divide="ignore", invalid="ignore"):
        metric = np.abs(map_derivative(q, np.where(z == 0, 1e-300, z))) ** 2
    metric = np.where(np.isfinite(metric), metric, 0.0) * (scale / sg.d) ** 2
    half = simpson(simpson(psi**2 * metric, x=u, axis=1), x=v)
    strip_norm = 2.0 * half
    dens = psi**2 / strip_norm
    # shoelace area of every mapped cell, density averaged over its corners
    area = 0.5 * np.abs(
        (x[:-1, :-1] - x[1:, 1:]) * (y[:-1, 1:] - y[1:, :-1])
        - (x[:-1, 1:] - x[1:, :-1]) * (y[:-1, :-1] - y[1:, 1:])
    )
    cell = 0.25 * (dens[:-1, :-1] + dens[1:, :-1] + dens[:-1, 1:] + dens[1:, 1:])
    lattice_norm = 2.0 * float(np.sum(area * cell))
    X = np.concatenate([x.ravel(), -x[1:].ravel()])
    Y = np.concatenate([y.ravel(), y[1:].ravel()])
    D = np.concatenate([dens.ravel(), dens[1:].ravel()])
    return DensityField(
        q=float(q), n=int(n), energy=float(E), profile_energy=lev.energy,
        x=X, y=Y, density=D, strip_norm=float(strip_norm), lattice_norm=lattice_norm,
    )


def tail_decay_rate(level: FDLevel, q: float, n: int, v_lo: float, v_hi: float) -> tuple[float, float]:
    """Fitted and predicted log-amplitude slopes of an FD profile tail.

    The prediction is ``-sqrt(|eps_n| - E V_far)`` with ``V_far = cos(pi q/2)**2``.
    """
    amp = np.abs(level.profile[0])
    sel = (level.v >= v_lo) & (level.v <= v_hi)
    slope = np.polyfit(level.v[sel], np.log(amp[sel]), 1)[0]
    pred = -math.sqrt(abs(mode_epsilon(q, n)) - level.energy * far_field_value(q))
    return float(slope), pred
