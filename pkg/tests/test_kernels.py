from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clipgamp import _kernels_py, kernels
from oracles import posterior_moments_quad, trunc_normal_mp

ORACLE = Path(__file__).parent / "data" / "moment_oracle.npz"

try:
    from clipgamp import _kernels as _compiled
    BACKENDS = [_kernels_py, _compiled]
except ImportError:
    _compiled = None
    BACKENDS = [_kernels_py]

backend = pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])


def log_uniform(rng, n, lo=-3, hi=3):
    return 10.0 ** rng.uniform(lo, hi, n)


def oracle_errors(zhat, vz, ref_z, ref_v, vp):
    """Mean error scaled by |z| + posterior sd; variance error relative."""
    ref_v = np.clip(ref_v, kernels.VAR_FLOOR, vp)
    ez = np.abs(zhat - ref_z) / (np.abs(ref_z) + np.sqrt(ref_v))
    ev = np.abs(vz - ref_v) / ref_v
    return ez, ev


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend("python") is _kernels_py
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


CASES = [(-1.0, 1.0), (0.5, 0.6), (-0.6, -0.5), (3.9, 4.1), (4.0, np.inf), (-np.inf, -7.0),
         (10.0, 10.001), (30.0, 31.0), (-np.inf, np.inf), (-2.0, 50.0), (1e-6, 2e-6),
         (-40.0, -39.5), (6.0, 9.0), (0.0, np.inf)]


@backend
@pytest.mark.parametrize("a,b", CASES)
def test_trunc_normal_vs_mpmath(k, a, b):
    lz, mu, var = (float(v) for v in k.trunc_normal_moments(a, b))
    rlz, rmu, rvar = trunc_normal_mp(a, b)
    assert lz == pytest.approx(rlz, rel=1e-12, abs=1e-12)
    assert mu == pytest.approx(rmu, rel=1e-11, abs=1e-12)
    assert var == pytest.approx(rvar, rel=1e-9)


def test_trunc_normal_random_vs_mpmath():
    rng = np.random.default_rng(7)
    a = rng.uniform(-30, 30, 300)
    b = a + log_uniform(rng, 300, -5, 1.5)
    for k in BACKENDS:
        lz, mu, var = k.trunc_normal_moments(a, b)
        for i in range(0, 300, 3):
            rlz, rmu, rvar = trunc_normal_mp(a[i], b[i])
            assert lz[i] == pytest.approx(rlz, rel=1e-11, abs=1e-12)
            assert abs(mu[i] - rmu) <= 1e-11 * (abs(rmu) + np.sqrt(rvar))
            assert var[i] == pytest.approx(rvar, rel=1e-8)


@backend
def test_output_moments_spot_quadrature(k):
    rng = np.random.default_rng(3)
    n = 60
    y = rng.choice([-1, 1], n) * log_uniform(rng, n, -2, 1)
    p = rng.choice([-1, 1], n) * log_uniform(rng, n, -2, 1)
    vp, s2, T = log_uniform(rng, n, -2, 1), log_uniform(rng, n, -3, 0), log_uniform(rng, n, -1, 0.5)
    for i in range(n):
        zh, vz = k.output_moments(y[i], p[i], vp[i], s2[i], T[i])
        rz, rv = posterior_moments_quad(y[i], p[i], vp[i], s2[i], T[i])
        ez, ev = oracle_errors(zh, vz, rz, rv, vp[i])
        assert ez < 1e-8 and ev < 1e-8, (i, zh, vz, rz, rv)


@pytest.mark.skipif(not ORACLE.exists(), reason="frozen oracle not generated")
@backend
def test_output_moments_frozen_oracle(k):
    data = np.load(ORACLE)
    assert data["y"].size == 10_000
    zhat = np.empty(data["y"].size)
    vz = np.empty(data["y"].size)
    for i in range(data["y"].size):
        zhat[i], vz[i] = k.output_moments(data["y"][i], data["p"][i], data["vp"][i],
                                          data["s2"][i], data["T"][i])
    ez, ev = oracle_errors(zhat, vz, data["zhat"], data["vz"], data["vp"])
    assert ez.max() < 1e-8 and ev.max() < 1e-8


@backend
def test_linear_limit_is_gaussian(k):
    rng = np.random.default_rng(0)
    y, p = rng.standard_normal(50), rng.standard_normal(50)
    vp, s2 = 0.7, 0.2
    for T in (np.inf, 1e9):
        zh, vz = k.output_moments(y, p, vp, s2, T)
        np.testing.assert_allclose(zh, (y * vp + p * s2) / (vp + s2), rtol=1e-12)
        np.testing.assert_allclose(vz, vp * s2 / (vp + s2), rtol=1e-12)


@backend
def test_far_saturation_tends_to_prior_tail(k):
    # y deep in positive saturation, tiny noise: z must lie above T
    zh, vz = k.output_moments(0.7, 2.0, 1.0, 1e-8, 0.7)
    assert zh > 0.7 and 0 < vz < 1.0


@settings(max_examples=200, deadline=None)
@given(y=st.floats(-50, 50), p=st.floats(-50, 50), lvp=st.floats(-4, 4),
       ls2=st.floats(-6, 3), lT=st.floats(-2, 1.5))
def test_output_variance_bounded(y, p, lvp, ls2, lT):
    vp = 10.0 ** lvp
    for k in BACKENDS:
        zh, vz = k.output_moments(y, p, vp, 10.0 ** ls2, 10.0 ** lT)
        assert np.isfinite(zh)
        assert kernels.VAR_FLOOR <= vz <= vp


def test_backends_agree_on_random_grid():
    if _compiled is None:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(11)
    n = 50_000
    y = rng.choice([-1, 1], n) * log_uniform(rng, n)
    p = rng.choice([-1, 1], n) * log_uniform(rng, n)
    vp = log_uniform(rng, n)
    for s2, T in [(0.1, 0.7), (1e-3, 1.0), (10.0, 0.3), (1e-6, 5.0)]:
        a = _compiled.output_moments(y, p, vp, s2, T)
        b = _kernels_py.output_moments(y, p, vp, s2, T)
        ez, ev = oracle_errors(a[0], a[1], b[0], b[1], vp)
        assert ez.max() < 1e-12 and ev.max() < 1e-10
    r, vr = rng.normal(size=n), log_uniform(rng, n, -4, 1)
    d = np.array([-3, -1, 1, 3]) / np.sqrt(5)
    for x, y_ in zip(_compiled.input_moments(r, vr, d), _kernels_py.input_moments(r, vr, d)):
        np.testing.assert_allclose(x, y_, rtol=1e-12, atol=1e-15)


@backend
@pytest.mark.parametrize("M", [4, 16])
def test_input_moments_brute_force(k, M):
    d = np.array([-1.0, 1.0]) if M == 4 else np.array([-3, -1, 1, 3]) / np.sqrt(5)
    rng = np.random.default_rng(M)
    r = rng.normal(scale=2, size=200)
    vr = log_uniform(rng, 200, -3, 1)
    xh, vx = k.input_moments(r, vr, d)
    for i in range(200):
        with mp.workdps(40):
            w = [mp.exp(-(mp.mpf(dj) - r[i]) ** 2 / (2 * vr[i])) for dj in d]
            tot = sum(w)
            mu = sum(wj * dj for wj, dj in zip(w, d)) / tot
            var = sum(wj * (dj - mu) ** 2 for wj, dj in zip(w, d)) / tot
        assert xh[i] == pytest.approx(float(mu), abs=1e-12)
        assert vx[i] == pytest.approx(float(var), abs=1e-12)


@backend
def test_input_moments_extremes(k):
    d = np.array([-1.0, 1.0])
    xh, vx = k.input_moments(np.array([0.0, 1e6, -1e6, 1.0]), np.array([1.0, 1e-12, 1e-12, 1e12]), d)
    np.testing.assert_allclose(xh, [0.0, 1.0, -1.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(vx, [1.0, 0.0, 0.0, 1.0], atol=1e-9)


@backend
def test_posterior_columns_sum_to_one(k):
    rng = np.random.default_rng(5)
    d = np.array([-3, -1, 1, 3]) / np.sqrt(5)
    tab = k.posterior_table(rng.normal(scale=10, size=500), log_uniform(rng, 500, -6, 2), d)
    assert tab.shape == (4, 500)
    assert np.max(np.abs(tab.sum(axis=0) - 1.0)) < 1e-12
    assert np.all(tab >= 0)
