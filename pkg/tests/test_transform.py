import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clipgamp.transform import (
    TransformPlan, admissible_mask, as_spectrum, build_dense_matrix, check_size,
    forward, adjoint, pack_qam, unpack_qam,
)
from oracles import idft_by_terms

SIZES = [8, 16, 64, 256]


def random_spectrum(rng, N, batch=()):
    x = rng.standard_normal(batch + (N,))
    x[..., 0] = 0.0
    x[..., N // 2] = 0.0
    return x


def test_cosine_column_unit_norm():
    F = build_dense_matrix(8)
    assert np.linalg.norm(F[:, 1]) == pytest.approx(1.0, abs=1e-14)


def test_columns_orthogonal():
    F = build_dense_matrix(8)
    assert F[:, 1] @ F[:, 2] == pytest.approx(0.0, abs=1e-14)


def test_admissible_block_is_orthonormal():
    N = 32
    F = build_dense_matrix(N)[:, admissible_mask(N)]
    np.testing.assert_allclose(F.T @ F, np.eye(N - 2), atol=1e-13)


def test_dense_matches_term_by_term(rng):
    N = 8
    sym = rng.standard_normal(N // 2 - 1) + 1j * rng.standard_normal(N // 2 - 1)
    x = pack_qam(sym, N)
    np.testing.assert_allclose(TransformPlan(N, "dense").forward(x), idft_by_terms(sym, N), atol=1e-12)


@pytest.mark.parametrize("N", SIZES)
def test_fast_matches_dense(rng, N):
    fast, dense = TransformPlan(N), TransformPlan(N, "dense")
    x = random_spectrum(rng, N)
    v = rng.standard_normal(N)
    assert np.max(np.abs(fast.forward(x) - dense.forward(x))) < 1e-10
    assert np.max(np.abs(fast.adjoint(v) - dense.adjoint(v))) < 1e-10


@pytest.mark.parametrize("N", SIZES)
def test_fast_matches_term_by_term(rng, N):
    sym = rng.standard_normal(N // 2 - 1) + 1j * rng.standard_normal(N // 2 - 1)
    z = TransformPlan(N).forward(pack_qam(sym, N))
    assert np.max(np.abs(z - idft_by_terms(sym, N))) < 1e-10


@pytest.mark.parametrize("N", SIZES)
def test_parseval_and_inverse(rng, N):
    plan = TransformPlan(N)
    x = random_spectrum(rng, N)
    z = plan.forward(x)
    assert np.sum(z * z) == pytest.approx(np.sum(x * x), rel=1e-12)
    np.testing.assert_allclose(plan.adjoint(z), x, atol=1e-12)


def test_adjoint_kills_dc_and_nyquist_slot_only_for_sine(rng):
    # the sine column at m = 0 is identically zero, so slot N/2 is always 0
    N = 16
    out = TransformPlan(N).adjoint(rng.standard_normal(N))
    assert out[N // 2] == 0.0
    assert out[0] != 0.0


def test_batched_forward_matches_loop(rng):
    plan = TransformPlan(64)
    X = random_spectrum(rng, 64, (5,))
    Z = plan.forward(X)
    for i in range(5):
        np.testing.assert_allclose(Z[i], plan.forward(X[i]), atol=1e-13)


def test_module_level_wrappers(rng):
    plan = TransformPlan(16)
    x = random_spectrum(rng, 16)
    np.testing.assert_array_equal(forward(plan, x), plan.forward(x))
    np.testing.assert_array_equal(adjoint(plan, x), plan.adjoint(x))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SIZES), st.integers(0, 2**32 - 1))
def test_adjoint_is_transpose_property(N, seed):
    rng = np.random.default_rng(seed)
    plan = TransformPlan(N)
    x = random_spectrum(rng, N)
    v = rng.standard_normal(N)
    assert plan.forward(x) @ v == pytest.approx(x @ plan.adjoint(v), rel=1e-10, abs=1e-10)


def test_pack_unpack_roundtrip(rng):
    sym = rng.standard_normal(31) + 1j * rng.standard_normal(31)
    x = pack_qam(sym)
    assert x.shape == (64,)
    assert x[0] == 0.0 and x[32] == 0.0
    np.testing.assert_array_equal(unpack_qam(x), sym)


@pytest.mark.parametrize("N", [0, 6, 12, 100, 4])
def test_bad_sizes_rejected(N):
    with pytest.raises(ValueError):
        check_size(N)


def test_wrong_length_rejected():
    with pytest.raises(ValueError):
        TransformPlan(16).forward(np.zeros(8))
    with pytest.raises(ValueError):
        pack_qam(np.zeros(5), 16)
    with pytest.raises(ValueError):
        TransformPlan(16, "sparse")


def test_as_spectrum_requires_zero_edges():
    x = np.zeros(16)
    as_spectrum(x)
    x[8] = 1.0
    with pytest.raises(ValueError):
        as_spectrum(x)
