# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled conformal-map kernels.

Same algorithm as ``_mapkernel_py`` evaluated point by point in C, with the
loop over points spread across OpenMP threads.  Each point is independent,
so results do not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp

from cython.parallel cimport prange
from libc.math cimport atan2, ceil, cos, exp, expm1, fabs, fmax, fmin, log, pow, sin, M_PI

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cpow(double complex, double complex)
    double complex cexp(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

BACKEND = "cython"

# beyond this imaginary part tan(z/2) equals +-i to double precision
DEF TAN_SATURATE = 40.0


cdef inline double complex _ppow(double complex t, double q) nogil:
    # principal t**q in polar form
    cdef double th = atan2(cimag(t), creal(t))
    cdef double m = exp(0.5 * q * log(creal(t) * creal(t) + cimag(t) * cimag(t)))
    return m * cos(q * th) + 1j * (m * sin(q * th))


cdef inline double complex _tan_half_pow(double x, double y, double q, bint cot) nogil:
    # tan(z/2)**q (or cot) for z = x + i y from half-angle products, with
    # denominators free of cancellation near the respective corner
    cdef double hx = 0.5 * x, hy = 0.5 * y
    cdef double sx = sin(hx), cx = cos(hx)
    cdef double em, sh, ch, re, im, den, lg, th, m
    if fabs(y) > TAN_SATURATE:
        th = 0.5 * M_PI if (y > 0) != cot else -0.5 * M_PI
        return cos(q * th) + 1j * sin(q * th)
    em = expm1(hy)
    sh = 0.5 * em * (1.0 + 1.0 / (1.0 + em))
    ch = sh + 1.0 / (1.0 + em)
    re = sx * cx
    im = sh * ch
    if cot:
        im = -im
        den = sx * sx + sh * sh
    else:
        den = cx * cx + sh * sh
    lg = 0.5 * log(re * re + im * im) - log(den)
    th = atan2(im, re)
    m = exp(q * lg)
    return m * cos(q * th) + 1j * (m * sin(q * th))


cdef double complex _segment(double q, bint base_pi, double complex z,
                             const double[::1] gl_x, const double[::1] gl_w,
                             double sigma, int levels, double max_panel) nogil:
    cdef double complex dz = z - (M_PI if base_pi else 0.0)
    cdef double complex out, phi, f, acc, p0
    cdef double length, key_len, a, c, sa, sb, s, w
    cdef int k, m, p, j, ng = gl_x.shape[0]
    if dz == 0:
        return 0
    if base_pi:
        out = -(2.0 ** q) * cpow(-dz, 1.0 - q) / (1.0 - q)
    else:
        out = 2.0 * cpow(z / 2.0, 1.0 + q) / (1.0 + q)
    if q == 0.0:
        return out
    # node-independent factor of the subtracted power, (s dz)^q = s^q dz^q
    p0 = _ppow(-2.0 / dz, q) if base_pi else _ppow(dz / 2.0, q)
    length = cabs(dz)
    key_len = ceil(length / max_panel) * max_panel
    acc = 0
    for k in range(levels + 1, -1, -1):
        # coarse interval [a, c] of the graded partition of [0, 1]
        if k == levels + 1:
            a = 0.0
            c = sigma ** levels
        elif k == 0:
            continue
        else:
            a = sigma ** k
            c = 1.0 if k == 1 else sigma ** (k - 1)
        m = <int>ceil((c - a) * key_len / max_panel)
        if m < 1:
            m = 1
        for p in range(m):
            sa = a + (c - a) * p / m
            sb = a + (c - a) * (p + 1) / m
            if p == m - 1:
                sb = c
            for j in range(ng):
                s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * gl_x[j]
                w = 0.5 * (sb - sa) * gl_w[j]
                if base_pi:
                    phi = -s * dz
                    f = _tan_half_pow(creal(phi), cimag(phi), q, True) - p0 / pow(s, q)
                else:
                    phi = s * dz
                    f = _tan_half_pow(creal(phi), cimag(phi), q, False) - p0 * pow(s, q)
                acc = acc + w * f
    return out + acc * dz


cdef double complex _forward(double q, double complex z, double complex fpi,
                             const double[::1] gl_x, const double[::1] gl_w,
                             double sigma, int levels, double max_panel) nogil:
    if cabs(z - M_PI) < cabs(z):
        return fpi + _segment(q, True, z, gl_x, gl_w, sigma, levels, max_panel)
    return _segment(q, False, z, gl_x, gl_w, sigma, levels, max_panel)


cdef inline double complex _clamp(double complex z) nogil:
    return fmin(fmax(creal(z), 0.0), M_PI) + 1j * fmax(cimag(z), 0.0)


def segment(double q, bint base_pi, z, gl_x, gl_w, double sigma, int levels, double max_panel):
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=complex).ravel()
    cdef const double[::1] gx = np.ascontiguousarray(gl_x, dtype=float)
    cdef const double[::1] gw = np.ascontiguousarray(gl_w, dtype=float)
    out = np.empty(zv.shape[0], dtype=complex)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in prange(zv.shape[0], schedule="dynamic"):
            ov[i] = _segment(q, base_pi, zv[i], gx, gw, sigma, levels, max_panel)
    return out.reshape(np.shape(z))


def forward(double q, z, double complex fpi, gl_x, gl_w, double sigma, int levels, double max_panel):
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=complex).ravel()
    cdef const double[::1] gx = np.ascontiguousarray(gl_x, dtype=float)
    cdef const double[::1] gw = np.ascontiguousarray(gl_w, dtype=float)
    out = np.empty(zv.shape[0], dtype=complex)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in prange(zv.shape[0], schedule="dynamic"):
            ov[i] = _forward(q, zv[i], fpi, gx, gw, sigma, levels, max_panel)
    return out.reshape(np.shape(z))


def derivative(double q, z):
    return np.tan(np.asarray(z, dtype=complex) / 2.0) ** q


cdef double complex _best_seed(double q, double complex xi, double complex fpi,
                               double far_offset, double complex rot,
                               const double[::1] gx, const double[::1] gw,
                               double sg, int lv, double mp) nogil:
    cdef double complex c0, c1, c2, best
    cdef double r, best_r
    c0 = _clamp(2.0 * cpow((1.0 + q) * xi / 2.0, 1.0 / (1.0 + q)))
    c1 = _clamp(M_PI - cpow((1.0 - q) * (fpi - xi) / (2.0 ** q), 1.0 / (1.0 - q)))
    c2 = _clamp(rot * xi + 1j * far_offset)
    best = c0
    best_r = cabs(_forward(q, c0, fpi, gx, gw, sg, lv, mp) - xi)
    r = cabs(_forward(q, c1, fpi, gx, gw, sg, lv, mp) - xi)
    if r < best_r:
        best = c1
        best_r = r
    r = cabs(_forward(q, c2, fpi, gx, gw, sg, lv, mp) - xi)
    if r < best_r:
        best = c2
    return best


def initial_guess(double q, xi, double complex fpi, double far_offset, rule):
    gl_x, gl_w, sigma, levels, max_panel = rule
    cdef const double complex[::1] xv = np.ascontiguousarray(xi, dtype=complex).ravel()
    cdef const double[::1] gx = np.ascontiguousarray(gl_x, dtype=float)
    cdef const double[::1] gw = np.ascontiguousarray(gl_w, dtype=float)
    cdef double sg = sigma
    cdef int lv = levels
    cdef double mp = max_panel
    out = np.empty(xv.shape[0], dtype=complex)
    cdef double complex[::1] ov = out
    cdef double complex rot = cexp(-0.5j * M_PI * q)
    cdef Py_ssize_t i
    with nogil:
        for i in prange(xv.shape[0], schedule="dynamic"):
            ov[i] = _best_seed(q, xv[i], fpi, far_offset, rot, gx, gw, sg, lv, mp)
    return out.reshape(np.shape(xi))


cdef double complex _newton_point(double q, double complex xi, double complex z0,
                                  double complex fpi, const double[::1] gx,
                                  const double[::1] gw, double sg, int lv, double mp,
                                  double tol, int maxiter, double* err_out) nogil:
    cdef double complex z, res, step, trial, r_try
    cdef double err, t, e_try
    cdef int it, h
    cdef bint moved
    z = _clamp(z0)
    res = _forward(q, z, fpi, gx, gw, sg, lv, mp) - xi
    err = cabs(res)
    for it in range(maxiter):
        if err < tol:
            break
        step = res / _tan_half_pow(creal(z), cimag(z), q, False)
        t = 1.0
        moved = False
        for h in range(40):
            trial = _clamp(z - t * step)
            r_try = _forward(q, trial, fpi, gx, gw, sg, lv, mp) - xi
            e_try = cabs(r_try)
            if e_try < err:
                z = trial
                res = r_try
                err = e_try
                moved = True
                break
            t = 0.5 * t
        if not moved:
            break
    err_out[0] = err
    return z


def newton(double q, xi, z0, double complex fpi, rule, double tol, int maxiter):
    gl_x, gl_w, sigma, levels, max_panel = rule
    cdef const double complex[::1] xv = np.ascontiguousarray(xi, dtype=complex).ravel()
    cdef const double[::1] gx = np.ascontiguousarray(gl_x, dtype=float)
    cdef const double[::1] gw = np.ascontiguousarray(gl_w, dtype=float)
    cdef double sg = sigma
    cdef int lv = levels
    cdef double mp = max_panel
    z_out = np.array(z0, dtype=complex).ravel()
    err_out = np.empty(xv.shape[0])
    cdef double complex[::1] zv = z_out
    cdef double[::1] ev = err_out
    cdef Py_ssize_t i
    with nogil:
        for i in prange(xv.shape[0], schedule="dynamic"):
            zv[i] = _newton_point(q, xv[i], zv[i], fpi, gx, gw, sg, lv, mp, tol, maxiter, &ev[i])
    shape = np.shape(xi)
    return z_out.reshape(shape), (err_out < tol).reshape(shape), err_out.reshape(shape)
