# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample GAMP kernels.

Same algorithms and branch structure as ``clipgamp._kernels_py``; see that
module for the derivation notes.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, log, sqrt, fabs, INFINITY, isfinite

cnp.import_array()

cdef double VAR_FLOOR_C = 1e-12
VAR_FLOOR = VAR_FLOOR_C
cdef double LOG_SQRT_2PI = 0.9189385332046727
cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double SQRT2 = 1.4142135623730951
cdef double TAIL_START = 4.0
cdef int CF_DEPTH = 80

_nodes, _weights = np.polynomial.legendre.leggauss(20)
cdef double GL_NODES[20]
cdef double GL_WEIGHTS[20]
for _i in range(20):
    GL_NODES[_i] = _nodes[_i]
    GL_WEIGHTS[_i] = _weights[_i]


cdef struct Moments:
    double log_z
    double mean
    double var


cdef inline int cf_depth(double u) noexcept nogil:
    # terms needed for full double precision shrink roughly like 1/u^2
    if u < 2.5:
        return CF_DEPTH
    cdef double d = 12.0 + 480.0 / (u * u)
    return CF_DEPTH if d > CF_DEPTH else <int>d


cdef inline void tail_terms(double u, double* r, double* s1, double* s2) noexcept nogil:
    cdef double t = 0.0
    cdef int k
    for k in range(cf_depth(u), 2, -1):
        t = k / (u + t)
    cdef double k2 = 2.0 / (u + t)
    cdef double k1 = 1.0 / (u + k2)
    r[0] = 1.0 / (u + k1)
    s1[0] = k1 * r[0]
    s2[0] = k2 * k1 * r[0]


cdef Moments trunc_direct(double a, double b) noexcept nogil:
    cdef Moments out
    cdef double phi_a = exp(-0.5 * a * a) * INV_SQRT_2PI
    cdef double phi_b = 0.0, qb = 0.0, z, mean, upper = 0.0, lower = 0.0
    cdef bint fin_b = isfinite(b)
    if fin_b:
        phi_b = exp(-0.5 * b * b) * INV_SQRT_2PI
        qb = 0.5 * erfc(b / SQRT2)
    if a >= 0.0:
        z = 0.5 * erfc(a / SQRT2) - qb
    else:
        z = 1.0 - 0.5 * erfc(-a / SQRT2) - qb
    mean = (phi_a - phi_b) / z
    if fin_b:
        upper = (b - mean) * phi_b
    out.log_z = log(z)
    out.mean = mean
    if isfinite(a):
        lower = (a - mean) * phi_a
    out.var = 1.0 - (upper - lower) / z
    return out


cdef Moments trunc_tail(double a, double b) noexcept nogil:
    cdef Moments out
    cdef double ra, s1a, s2a, rb = 0.0, s1b = 0.0, s2b = 0.0, ell = 0.0, d = 0.0
    tail_terms(a, &ra, &s1a, &s2a)
    if isfinite(b):
        ell = b - a
        d = exp(-0.5 * ell * (a + b))
        tail_terms(b, &rb, &s1b, &s2b)
    cdef double j0 = ra - d * rb
    cdef double j1 = s1a - d * (s1b + ell * rb)
    cdef double j2 = s2a - d * (s2b + 2.0 * ell * s1b + ell * ell * rb)
    cdef double m1 = j1 / j0
    out.log_z = -0.5 * a * a - LOG_SQRT_2PI + log(j0)
    out.mean = a + m1
    out.var = j2 / j0 - m1 * m1
    return out


cdef Moments trunc_narrow(double a, double b) noexcept nogil:
    cdef Moments out
    cdef double ell = b - a, w, g, j0 = 0.0, j1 = 0.0, mw, v = 0.0
    cdef double ws[20]
    cdef double gs[20]
    cdef int i
    for i in range(20):
        w = 0.5 * ell * (1.0 + GL_NODES[i])
        g = GL_WEIGHTS[i] * 0.5 * ell * exp(-0.5 * w * (2.0 * a + w))
        ws[i] = w
        gs[i] = g
        j0 += g
        j1 += g * w
    mw = j1 / j0
    for i in range(20):
        v += gs[i] * (ws[i] - mw) * (ws[i] - mw)
    out.log_z = -0.5 * a * a - LOG_SQRT_2PI + log(j0)
    out.mean = a + mw
    out.var = v / j0
    return out


cdef Moments trunc_normal(double a, double b) noexcept nogil:
    cdef bint flip = (a + b) < 0.0
    cdef double lo = a, hi = b, span
    cdef Moments out
    if flip:
        lo = -b
        hi = -a
    span = hi - lo
    if isfinite(hi) and span * (fabs(lo) if fabs(lo) > fabs(hi) else fabs(hi)) <= 1.0:
        out = trunc_narrow(lo, hi)
    elif lo >= TAIL_START:
        out = trunc_tail(lo, hi)
    else:
        out = trunc_direct(lo, hi)
    if flip:
        out.mean = -out.mean
    return out


def trunc_normal_moments(a, b):
    """Log-mass, mean and variance of N(0, 1) restricted to [a, b]."""
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=np.float64),
                                       np.asarray(b, dtype=np.float64))
    cdef const double[::1] av = np.ascontiguousarray(a_arr).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b_arr).ravel()
    cdef Py_ssize_t n = av.shape[0], i
    lz = np.empty(n)
    mu = np.empty(n)
    va = np.empty(n)
    cdef double[::1] lzv = lz, muv = mu, vav = va
    cdef Moments m
    with nogil:
        for i in range(n):
            m = trunc_normal(av[i], bv[i])
            lzv[i] = m.log_z
            muv[i] = m.mean
            vav[i] = m.var
    shape = a_arr.shape
    return lz.reshape(shape), mu.reshape(shape), va.reshape(shape)


cdef inline void clipped_posterior(double y, double p, double vp, double s2, double T,
                                   double* zhat, double* vz) noexcept nogil:
    cdef double vsum = vp + s2
    cdef double m = (y * vp + p * s2) / vsum
    cdef double c = vp * s2 / vsum
    cdef double sv, sc, lw_m, lw_l, lw_r, mean_m, mean_l, mean_r, var_m, var_l, var_r
    cdef double top, w_l, w_m, w_r, tot, zh, v
    cdef Moments mm, ml, mr
    if not isfinite(T):
        zh = m
        v = c
    else:
        sv = sqrt(vp)
        sc = sqrt(c)
        mm = trunc_normal((-T - m) / sc, (T - m) / sc)
        lw_m = 0.5 * log(s2 / vsum) - 0.5 * (y - p) * (y - p) / vsum + mm.log_z
        mean_m = m + sc * mm.mean
        var_m = c * mm.var
        ml = trunc_normal(-INFINITY, (-T - p) / sv)
        lw_l = -0.5 * (y + T) * (y + T) / s2 + ml.log_z
        mean_l = p + sv * ml.mean
        var_l = vp * ml.var
        mr = trunc_normal((T - p) / sv, INFINITY)
        lw_r = -0.5 * (y - T) * (y - T) / s2 + mr.log_z
        mean_r = p + sv * mr.mean
        var_r = vp * mr.var

        top = lw_l
        if lw_m > top:
            top = lw_m
        if lw_r > top:
            top = lw_r
        w_l = exp(lw_l - top)
        w_m = exp(lw_m - top)
        w_r = exp(lw_r - top)
        tot = w_l + w_m + w_r
        w_l /= tot
        w_m /= tot
        w_r /= tot
        zh = w_l * mean_l + w_m * mean_m + w_r * mean_r
        v = (w_l * (var_l + (mean_l - zh) * (mean_l - zh))
             + w_m * (var_m + (mean_m - zh) * (mean_m - zh))
             + w_r * (var_r + (mean_r - zh) * (mean_r - zh)))
    if v < VAR_FLOOR_C:
        v = VAR_FLOOR_C
    if v > vp:
        v = vp
    zhat[0] = zh
    vz[0] = v


def output_moments(y, p, vp, double s2, double T):
    """Posterior mean and variance of z for the clipped-Gaussian output channel."""
    y_a, p_a, vp_a = np.broadcast_arrays(np.asarray(y, dtype=np.float64),
                                         np.asarray(p, dtype=np.float64),
                                         np.asarray(vp, dtype=np.float64))
    shape = y_a.shape
    cdef const double[::1] yv = np.ascontiguousarray(y_a).ravel()
    cdef const double[::1] pv = np.ascontiguousarray(p_a).ravel()
    cdef const double[::1] vv = np.ascontiguousarray(vp_a).ravel()
    cdef Py_ssize_t n = yv.shape[0], i
    zhat = np.empty(n)
    vz = np.empty(n)
    cdef double[::1] zv = zhat, qv = vz
    with nogil:
        for i in range(n):
            clipped_posterior(yv[i], pv[i], vv[i], s2, T, &zv[i], &qv[i])
    return zhat.reshape(shape), vz.reshape(shape)


def input_moments(r, vr, d):
    """Posterior mean and variance of a per-dimension constellation symbol."""
    r_a = np.ascontiguousarray(r, dtype=np.float64)
    vr_a = np.ascontiguousarray(np.broadcast_to(np.asarray(vr, dtype=np.float64), r_a.shape))
    cdef const double[::1] rv = r_a.ravel()
    cdef const double[::1] vv = vr_a.ravel()
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], m = dv.shape[0], i, j
    xhat = np.empty(n)
    vx = np.empty(n)
    cdef double[::1] xv = xhat, qv = vx
    cdef double best, tot, mu, var, diff
    cdef double w[64]
    if m > 64:
        raise ValueError("at most 64 points per dimension")
    with nogil:
        for i in range(n):
            best = -INFINITY
            for j in range(m):
                diff = dv[j] - rv[i]
                w[j] = -diff * diff / (2.0 * vv[i])
                if w[j] > best:
                    best = w[j]
            tot = 0.0
            for j in range(m):
                w[j] = exp(w[j] - best)
                tot += w[j]
            mu = 0.0
            for j in range(m):
                w[j] /= tot
                mu += w[j] * dv[j]
            var = 0.0
            for j in range(m):
                var += w[j] * (dv[j] - mu) * (dv[j] - mu)
            xv[i] = mu
            qv[i] = var
    return xhat.reshape(r_a.shape), vx.reshape(r_a.shape)


def posterior_table(r, vr, d):
    """Return the (len(d), len(r)) table of symbol posterior probabilities."""
    r = np.asarray(r, dtype=np.float64)
    vr = np.broadcast_to(np.asarray(vr, dtype=np.float64), r.shape)
    d = np.asarray(d, dtype=np.float64)
    logits = -((d[:, None] - r[None, :]) ** 2) / (2.0 * vr[None, :])
    logits -= logits.max(axis=0, keepdims=True)
    prob = np.exp(logits)
    return prob / prob.sum(axis=0, keepdims=True)
