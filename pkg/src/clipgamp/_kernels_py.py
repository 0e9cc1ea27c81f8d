"""Pure NumPy versions of the per-sample GAMP kernels.

This module is the fallback used when the compiled ``_kernels`` extension is
not available, and the reference the compiled code is tested against.

The hard part is the output-node posterior of a clipped Gaussian observation.
With prior ``z ~ N(p, v)`` and likelihood ``exp(-(y - f(z))**2 / (2 s2))``
where ``f`` saturates at ``+-T``, the posterior is a three-piece mixture of
truncated Gaussians (left saturation, linear region, right saturation).
Everything is computed in the log domain, and truncated-normal moments in the
far tails come from the continued fraction of the Mills ratio so that no
moment is formed as a difference of two large numbers.
"""

import numpy as np
from scipy.special import erfc

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
SQRT2 = np.sqrt(2.0)

VAR_FLOOR = 1e-12

# tail branch threshold and continued-fraction depth; depth 80 is exact to
# double precision for u >= 3
TAIL_START = 4.0
CF_DEPTH = 80

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def cf_depth(u):
    """Continued-fraction depth giving full double precision for all of ``u``."""
    lo = float(np.min(u)) if np.size(u) else TAIL_START
    if lo < 2.5:
        return CF_DEPTH
    return min(CF_DEPTH, int(12.0 + 480.0 / (lo * lo)))


def _mills_cf(u):
    """Return (K1, K2) with R(u) = 1/(u + K1), K1 = 1/(u + K2).

    R is the Mills ratio Q(u)/phi(u).  Only valid for u >= TAIL_START.
    """
    t = np.zeros_like(u)
    for k in range(cf_depth(u), 2, -1):
        t = k / (u + t)
    k2 = 2.0 / (u + t)
    k1 = 1.0 / (u + k2)
    return k1, k2


def _tail_terms(u):
    k1, k2 = _mills_cf(u)
    r = 1.0 / (u + k1)
    s1 = k1 * r
    s2 = k2 * k1 * r
    return r, s1, s2


def _trunc_direct(a, b):
    # a < TAIL_START, a + b >= 0, interval not narrow
    phi_a = np.exp(-0.5 * a * a) / np.sqrt(2.0 * np.pi)
    fin_b = np.isfinite(b)
    bb = np.where(fin_b, b, 0.0)
    phi_b = np.where(fin_b, np.exp(-0.5 * bb * bb) / np.sqrt(2.0 * np.pi), 0.0)
    qb = 0.5 * erfc(bb / SQRT2) * fin_b
    z = np.where(a >= 0.0,
                 0.5 * erfc(a / SQRT2) - qb,
                 1.0 - 0.5 * erfc(-a / SQRT2) - qb)
    mean = (phi_a - phi_b) / z
    upper = np.where(fin_b, (bb - mean) * phi_b, 0.0)
    fin_a = np.isfinite(a)
    lower = np.where(fin_a, (np.where(fin_a, a, 0.0) - mean) * phi_a, 0.0)
    var = 1.0 - (upper - lower) / z
    return np.log(z), mean, var


def _trunc_tail(a, b):
    # a >= TAIL_START, b > a (possibly inf)
    ra, s1a, s2a = _tail_terms(a)
    fin_b = np.isfinite(b)
    bb = np.where(fin_b, b, a + 1.0)
    ell = bb - a
    d = np.where(fin_b, np.exp(-0.5 * ell * (a + bb)), 0.0)
    rb, s1b, s2b = _tail_terms(bb)
    j0 = ra - d * rb
    j1 = s1a - d * (s1b + ell * rb)
    j2 = s2a - d * (s2b + 2.0 * ell * s1b + ell * ell * rb)
    m1 = j1 / j0
    log_z = -0.5 * a * a - LOG_SQRT_2PI + np.log(j0)
    return log_z, a + m1, j2 / j0 - m1 * m1


def _trunc_narrow(a, b):
    # exponent varies by at most ~1 over [a, b]; 20-point Gauss-Legendre is exact
    ell = (b - a)[:, None]
    w = 0.5 * ell * (1.0 + GL_NODES[None, :])
    g = GL_WEIGHTS[None, :] * 0.5 * ell * np.exp(-0.5 * w * (2.0 * a[:, None] + w))
    j0 = g.sum(axis=1)
    mw = (g * w).sum(axis=1) / j0
    var = (g * (w - mw[:, None]) ** 2).sum(axis=1) / j0
    log_z = -0.5 * a * a - LOG_SQRT_2PI + np.log(j0)
    return log_z, a + mw, var


def trunc_normal_moments(a, b):
    """Log-mass, mean and variance of N(0, 1) restricted to [a, b].

    ``a`` may be ``-inf`` and ``b`` may be ``+inf``; ``a < b`` is required.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    with np.errstate(invalid="ignore"):
        flip = (a + b) < 0.0  # nan for (-inf, inf): no flip
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    lo = lo.ravel()
    hi = hi.ravel()
    span = hi - lo
    narrow = np.isfinite(hi) & (span * np.maximum(np.abs(lo), np.abs(hi)) <= 1.0)
    tail = ~narrow & (lo >= TAIL_START)
    direct = ~narrow & ~tail

    log_z = np.empty_like(lo)
    mean = np.empty_like(lo)
    var = np.empty_like(lo)
    for mask, fn in ((direct, _trunc_direct), (tail, _trunc_tail), (narrow, _trunc_narrow)):
        if mask.any():
            log_z[mask], mean[mask], var[mask] = fn(lo[mask], hi[mask])
    shape = a.shape
    mean = np.where(flip.ravel(), -mean, mean)
    return log_z.reshape(shape), mean.reshape(shape), var.reshape(shape)


def output_moments(y, p, vp, s2, T):
    """Posterior mean and variance of z for the clipped-Gaussian output channel.

    Parameters
    ----------
    y, p : array_like
        Observations and prior means.
    vp : array_like
        Prior variances (broadcast against ``p``).
    s2 : float
        Noise variance.
    T : float
        Clipping threshold, ``np.inf`` for a linear channel.

    Returns
    -------
    zhat, vz : ndarray
        Posterior moments with ``vz`` clamped to ``[VAR_FLOOR, vp]``.
    """
    zhat, vz = output_moments_raw(y, p, vp, s2, T)
    return zhat, np.clip(vz, VAR_FLOOR, np.broadcast_to(vp, vz.shape))


def output_moments_raw(y, p, vp, s2, T):
    """As :func:`output_moments` but without clamping ``vz``.

    The clip likelihood is flat in the saturation regions, so the posterior
    can be bimodal and its variance can exceed ``vp``; this exposes that.
    """
    y, p, vp = np.broadcast_arrays(np.asarray(y, float), np.asarray(p, float),
                                   np.asarray(vp, float))
    s2 = float(s2)
    vsum = vp + s2
    m = (y * vp + p * s2) / vsum
    c = vp * s2 / vsum
    if not np.isfinite(T):
        return m, c

    sv = np.sqrt(vp)
    sc = np.sqrt(c)
    # linear region
    lz_m, mu_m, var_m = trunc_normal_moments((-T - m) / sc, (T - m) / sc)
    lw_m = 0.5 * np.log(s2 / vsum) - 0.5 * (y - p) ** 2 / vsum + lz_m
    mean_m = m + sc * mu_m
    var_m = c * var_m
    # saturation regions
    lz_l, mu_l, var_l = trunc_normal_moments(-np.inf, (-T - p) / sv)
    lw_l = -0.5 * (y + T) ** 2 / s2 + lz_l
    mean_l = p + sv * mu_l
    var_l = vp * var_l
    lz_r, mu_r, var_r = trunc_normal_moments((T - p) / sv, np.inf)
    lw_r = -0.5 * (y - T) ** 2 / s2 + lz_r
    mean_r = p + sv * mu_r
    var_r = vp * var_r

    top = np.maximum(np.maximum(lw_l, lw_m), lw_r)
    w_l = np.exp(lw_l - top)
    w_m = np.exp(lw_m - top)
    w_r = np.exp(lw_r - top)
    tot = w_l + w_m + w_r
    w_l /= tot
    w_m /= tot
    w_r /= tot
    zhat = w_l * mean_l + w_m * mean_m + w_r * mean_r
    vz = (w_l * (var_l + (mean_l - zhat) ** 2)
          + w_m * (var_m + (mean_m - zhat) ** 2)
          + w_r * (var_r + (mean_r - zhat) ** 2))
    return zhat, vz


def input_moments(r, vr, d):
    """Posterior mean and variance of a per-dimension constellation symbol.

    ``r`` is the pseudo-observation, ``vr`` its variance (scalar or array) and
    ``d`` the per-dimension constellation points.
    """
    r = np.asarray(r, float)
    vr = np.broadcast_to(np.asarray(vr, float), r.shape)
    logits = -((d[None, :] - r[:, None]) ** 2) / (2.0 * vr[:, None])
    logits -= logits.max(axis=1, keepdims=True)
    prob = np.exp(logits)
    prob /= prob.sum(axis=1, keepdims=True)
    xhat = prob @ d
    vx = (prob * (d[None, :] - xhat[:, None]) ** 2).sum(axis=1)
    return xhat, vx


def posterior_table(r, vr, d):
    """Return the (len(d), len(r)) table of symbol posterior probabilities."""
    r = np.asarray(r, float)
    vr = np.broadcast_to(np.asarray(vr, float), r.shape)
    logits = -((d[:, None] - r[None, :]) ** 2) / (2.0 * vr[None, :])
    logits -= logits.max(axis=0, keepdims=True)
    prob = np.exp(logits)
    return prob / prob.sum(axis=0, keepdims=True)
