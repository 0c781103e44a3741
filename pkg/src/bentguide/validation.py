"""Acceptance checks spanning the analytic pipelines and the finite-difference oracle.

Each ``criterion_N`` function runs one check at its stated tolerance and
returns a :class:`CriterionResult`; :func:`run_all` runs them in order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import beta

from . import conformal, fd_oracle, oblique, potentials, spectrum
from .geometry import geometry_from_q, geometry_from_slope

# FD regression constant: L-shape ground state / arm threshold at h = l/40, x_cut = 8l
L_SHAPE_FD_H40 = 0.930526


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.detail}; {self.seconds:.2f} s)"


def _timed(number: int, title: str, body: Callable[[], tuple[bool, str]], budget: float | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        ok = False
        detail += f"; exceeded {budget:g} s budget"
    return CriterionResult(number, title, bool(ok), detail, dt)


def criterion_1() -> CriterionResult:
    def body():
        mm = oblique.build_mode_matrices(2)
        worst = 0.0
        for a in (0.01, 0.05, 0.1, 0.2):
            g = geometry_from_slope(a)
            root = oblique.determinant_roots(g, mm)[0]
            worst = max(worst, abs(root - oblique.ground_state_scaled(g)))
        return worst < 1e-10, f"max |root - closed form| = {worst:.2e}"

    return _timed(1, "determinant root matches closed-form ground state", body, budget=1.0)


def criterion_2() -> CriterionResult:
    def body():
        e1 = oblique.ground_state_scaled(geometry_from_slope(0.1))
        e2 = oblique.ground_state_scaled(geometry_from_slope(0.2))
        e0 = oblique.ground_state_scaled(geometry_from_slope(0.0))
        ok = abs(e1 - 0.99154) <= 1e-5 and abs(e2 - 0.9788) <= 1e-4 and e0 == 1.0
        return ok, f"E(0.1)={e1:.6f}, E(0.2)={e2:.6f}, E(0)={e0!r}"

    return _timed(2, "closed-form spot values", body)


def criterion_3() -> CriterionResult:
    def body():
        rng = np.random.default_rng(12345)
        z = rng.uniform(0.0, math.pi, 100) + 1j * rng.uniform(0.0, 5.0, 100)
        ident = float(np.max(np.abs(conformal.forward_map(1e-12, z) - z)))
        worst = 0.0
        for q in (0.2, 0.5, 0.8):
            # beta identity: B((1-q)/2, (1+q)/2) = pi / sin(pi (1+q)/2) = pi sec(pi q/2)
            oracle = beta((1.0 - q) / 2.0, (1.0 + q) / 2.0)
            worst = max(worst, abs(conformal.outer_corner(q) - oracle))
        return ident < 1e-10 and worst < 1e-9, f"identity dev {ident:.1e}, max |F(pi) - B| = {worst:.1e}"

    return _timed(3, "map identity limit and outer-corner image", body, budget=5.0)


def inner_corner_slope(q: float) -> float:
    d = conformal.strip_geometry(q).d
    r = np.logspace(-6, -2, 41) * d
    z = conformal.inverse_map(q, r.astype(complex))
    J = conformal.jacobian_exact(q, z)
    return float(np.polyfit(np.log(r), np.log(J), 1)[0])


def far_field_rate(q: float, s_lo: float = 4.0, s_hi: float = 14.0) -> float:
    """Decay rate of ``|J - 1|`` per unit distance along the arm."""
    s = np.linspace(s_lo, s_hi, 41)
    xi = s * np.exp(0.5j * math.pi * (1.0 + q)) + 0.25 * math.pi * np.exp(0.5j * math.pi * q)
    z = conformal.inverse_map(q, xi)
    dev = np.abs(conformal.jacobian_exact(q, z) - 1.0)
    return float(-np.polyfit(s, np.log(dev), 1)[0])


def criterion_4() -> CriterionResult:
    def body():
        rel = []
        rates = []
        for q in (0.2, 0.5, 0.8):
            expect = -2.0 * q / (q + 1.0)
            rel.append(abs(inner_corner_slope(q) / expect - 1.0))
            rates.append(far_field_rate(q))
        ok = max(rel) < 0.02 and all(abs(r - 1.0) <= 0.1 for r in rates)
        return ok, f"max slope rel err {max(rel):.2e}, far rates {', '.join(f'{r:.4f}' for r in rates)}"

    return _timed(4, "Jacobian corner exponent and far-field decay", body)


def criterion_5() -> CriterionResult:
    def body():
        r = spectrum.solve_cubic_energy(0.5, 1, potentials.estimate_features(0.5, 1))
        return 0.51 <= r.energy <= 0.61, f"E = {r.energy:.6f}"

    return _timed(5, "conformal WKB ground state at q = 1/2", body, budget=1.0)


def sweep_trends(results: list[spectrum.SpectrumResult], q_grid, n_max: int) -> tuple[bool, str]:
    E = np.array([r.energy for r in results]).reshape(len(q_grid), n_max)
    below = np.array([r.below_threshold for r in results]).reshape(len(q_grid), n_max)
    counts = below.sum(axis=1)
    every = bool(np.all(counts >= 1))
    mono = bool(np.all(np.diff(E, axis=0) < 0))
    nondec = bool(np.all(np.diff(counts) >= 0))
    errors = sum(r.error is not None for r in results)
    ok = every and mono and nondec and errors == 0
    return ok, f"counts {counts.min()}..{counts.max()}, monotone={mono}, nondecreasing={nondec}, errors={errors}"


def criterion_6() -> CriterionResult:
    q_grid = np.linspace(0.05, 0.9, 40)

    def body():
        details = []
        ok = True
        for source in ("estimate", "numeric"):
            res = spectrum.spectrum_sweep(q_grid, 4, source)
            good, msg = sweep_trends(res, q_grid, 4)
            ok &= good
            details.append(f"{source}: {msg}")
        return ok, "; ".join(details)

    return _timed(6, "spectrum trends versus bend angle", body, budget=120.0)


def criterion_7() -> CriterionResult:
    def body():
        l = math.pi
        g = geometry_from_q(0.5, l)
        base = fd_oracle.lowest_eigenpairs(fd_oracle.build_grid(g, l / 40, 8 * l), 4)
        n_bound = sum(p.bound for p in base)
        straight = fd_oracle.lowest_eigenpairs(fd_oracle.build_grid(geometry_from_slope(0.0, l), l / 40, 8 * l), 4)
        n_straight = sum(p.bound for p in straight)
        fine = fd_oracle.lowest_eigenpairs(fd_oracle.build_grid(g, l / 80, 8 * l), 1)[0]
        long = fd_oracle.lowest_eigenpairs(fd_oracle.build_grid(g, l / 40, 16 * l), 1)[0]
        dh = abs(fine.normalized - base[0].normalized)
        dx = abs(long.normalized - base[0].normalized)
        ok = n_bound == 1 and n_straight == 0 and dh < 1e-3 and dx < 1e-3
        return ok, (f"L-shape bound={n_bound} E/thr={base[0].normalized:.6f}, straight bound={n_straight}, "
                    f"h/2 shift {dh:.1e}, 2x_cut shift {dx:.1e}")

    return _timed(7, "FD oracle existence and convergence", body, budget=300.0)


SMALL_ANGLE_X_CUT = 32.0


def criterion_8() -> CriterionResult:
    def body():
        l = math.pi
        diffs = []
        for a in (0.05, 0.1):
            g = geometry_from_slope(a, l)
            fd = fd_oracle.ground_state_scaled(fd_oracle.build_grid(g, l / 40, SMALL_ANGLE_X_CUT * l))
            diffs.append(abs(fd - oblique.ground_state_scaled(g)))
        return max(diffs) < 0.02, "|FD - closed form| = " + ", ".join(f"{d:.4f}" for d in diffs)

    return _timed(8, "small-angle FD versus closed form", body)


def criterion_9() -> CriterionResult:
    def body():
        diag = spectrum.solve_1d_fd(spectrum.fd_curve(0.5, 1))
        coup = spectrum.solve_coupled_fd(0.5, 4)
        diff = abs(coup[0] - diag[0])
        return diff < 0.1, f"diagonal {diag[0]:.5f}, coupled(4) {coup[0]:.5f}, diff {diff:.4f}"

    return _timed(9, "diagonal approximation audit", body)


def criterion_10() -> CriterionResult:
    def body():
        ls = (1.0, math.pi, 10.0)
        g_ob = [geometry_from_slope(0.2, l) for l in ls]
        mm = oblique.build_mode_matrices(2)
        closed = [oblique.ground_state_closed_form(g) * g.l**2 for g in g_ob]
        det = [oblique.determinant_roots(g, mm)[0] * (math.pi / g.l) ** 2 * g.l**2 for g in g_ob]
        fd = []
        for l in ls:
            g = geometry_from_q(0.5, l)
            fd.append(fd_oracle.lowest_eigenpairs(fd_oracle.build_grid(g, l / 40, 8 * l), 1)[0].energy * l**2)
        spreads = [max(v) / min(v) - 1.0 for v in (closed, det, fd)]
        return max(spreads) < 1e-9, "relative spread of E l^2: " + ", ".join(f"{s:.1e}" for s in spreads)

    return _timed(10, "l^-2 scale law", body)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_all(selected=None) -> list[CriterionResult]:
    keys = sorted(CRITERIA) if not selected else sorted(selected)
    return [CRITERIA[k]() for k in keys]
