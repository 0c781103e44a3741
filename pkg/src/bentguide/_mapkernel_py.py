"""Pure numpy implementation of the conformal-map kernels.

Mirrors ``_mapkernel.pyx`` exactly (same panels, same Newton policy) so the
two backends agree to rounding.  Inputs are validated by ``conformal``; here
``z`` is assumed to lie in the closed upper half of the straight strip.

Segment integrals ``S_b(z) = int_b^z tan(phi/2)^q dphi`` for a corner base
``b`` in {0, pi} split off the leading power behaviour at the base,

    b = 0:   (phi/2)^q          integrates to 2 (z/2)^{1+q} / (1+q)
    b = pi:  (2/(pi - phi))^q    integrates to -2^q (pi - z)^{1-q} / (1-q)

and integrate the remainder with Gauss-Legendre panels graded
geometrically toward the base and capped at ``max_panel`` in length.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _breakpoints(length, sigma, levels, max_panel):
    pts = [0.0] + [sigma**k for k in range(levels, 0, -1)] + [1.0]
    out = [0.0]
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil((b - a) * length / max_panel)))
        out.extend(a + (b - a) * np.arange(1, m + 1) / m)
    return np.asarray(out)


def _rule(length, gl_x, gl_w, sigma, levels, max_panel):
    bp = _breakpoints(length, sigma, levels, max_panel)
    a = bp[:-1, None]
    b = bp[1:, None]
    s = 0.5 * (a + b) + 0.5 * (b - a) * gl_x[None, :]
    w = 0.5 * (b - a) * gl_w[None, :]
    return s.ravel(), w.ravel()


def segment(q, base_pi, z, gl_x, gl_w, sigma, levels, max_panel):
    """Vectorized ``S_b(z)`` for a 1-D complex array ``z``."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    if z.size == 0:
        return out
    dz = z - (math.pi if base_pi else 0.0)
    nonzero = dz != 0
    # the closed-form part
    if base_pi:
        out[nonzero] = -(2.0**q) * (-dz[nonzero]) ** (1.0 - q) / (1.0 - q)
    else:
        out[nonzero] = 2.0 * (z[nonzero] / 2.0) ** (1.0 + q) / (1.0 + q)
    if q == 0.0:
        return out
    lengths = np.abs(dz)
    keys = np.ceil(lengths / max_panel).astype(int)
    for key in np.unique(keys[nonzero]):
        sel = nonzero & (keys == key)
        s, w = _rule(key * max_panel, gl_x, gl_w, sigma, levels, max_panel)
        if base_pi:
            # w = pi - phi is formed exactly so cot(w/2) keeps full accuracy
            w_ = -s[None, :] * dz[sel, None]
            f = (1.0 / np.tan(w_ / 2.0)) ** q - (2.0 / w_) ** q
        else:
            phi = s[None, :] * dz[sel, None]
            f = np.tan(phi / 2.0) ** q - (phi / 2.0) ** q
        out[sel] += (f @ w) * dz[sel]
    return out


def forward(q, z, fpi, gl_x, gl_w, sigma, levels, max_panel):
    """``F(z)`` for points in the closed upper half strip."""
    z = np.asarray(z, dtype=complex)
    use_pi = np.abs(z - math.pi) < np.abs(z)
    out = np.empty(z.shape, dtype=complex)
    out[~use_pi] = segment(q, False, z[~use_pi], gl_x, gl_w, sigma, levels, max_panel)
    out[use_pi] = fpi + segment(q, True, z[use_pi], gl_x, gl_w, sigma, levels, max_panel)
    return out


def derivative(q, z):
    return np.tan(np.asarray(z, dtype=complex) / 2.0) ** q


def _clamp(z):
    return np.clip(z.real, 0.0, math.pi) + 1j * np.maximum(z.imag, 0.0)


def initial_guess(q, xi, fpi, far_offset, rule):
    """Asymptotic start point with the smallest residual.

    Candidates come from the corner expansions and the far-arm expansion.
    """
    xi = np.asarray(xi, dtype=complex)
    cands = np.empty((3,) + xi.shape, dtype=complex)
    cands[0] = 2.0 * ((1.0 + q) * xi / 2.0) ** (1.0 / (1.0 + q))
    cands[1] = math.pi - ((1.0 - q) * (fpi - xi) / 2.0**q) ** (1.0 / (1.0 - q))
    cands[2] = np.exp(-0.5j * math.pi * q) * xi + 1j * far_offset
    cands = _clamp(cands)
    res = np.stack([np.abs(forward(q, c, fpi, *rule) - xi) for c in cands])
    best = np.argmin(res, axis=0)
    return np.take_along_axis(cands, best[None], axis=0)[0]


def newton(q, xi, z0, fpi, rule, tol, maxiter):
    """Damped Newton on ``F(z) - xi``.  Returns ``(z, converged, residual)``."""
    xi = np.asarray(xi, dtype=complex)
    z = _clamp(np.asarray(z0, dtype=complex).copy())
    res = forward(q, z, fpi, *rule) - xi
    err = np.abs(res)
    active = err >= tol
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        step = res[idx] / derivative(q, z[idx])
        t = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(40):
            if not pending.any():
                break
            j = np.flatnonzero(pending)
            trial = _clamp(z[idx[j]] - t[j] * step[j])
            r_try = forward(q, trial, fpi, *rule) - xi[idx[j]]
            ok = np.abs(r_try) < err[idx[j]]
            acc = j[ok]
            z[idx[acc]] = trial[ok]
            res[idx[acc]] = r_try[ok]
            err[idx[acc]] = np.abs(r_try[ok])
            pending[acc] = False
            t[j[~ok]] *= 0.5
        # a point whose residual cannot decrease any further stops here
        stalled = idx[pending]
        active[stalled] = False
        active[idx] &= err[idx] >= tol
    return z, err < tol, err
