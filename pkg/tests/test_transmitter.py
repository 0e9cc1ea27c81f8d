import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clipgamp.transform import TransformPlan
from clipgamp.transmitter import (
    ClipModel, Constellation, add_cp, bits_per_block, bussgang_gain, clip, clipped_power,
    crest_factor_db, generate_block, strip_cp,
)
from oracles import bussgang_gain_quad, clipped_power_quad


@pytest.mark.parametrize("M", [4, 16])
def test_unit_power(M):
    c = Constellation(M)
    assert np.mean(c.points ** 2) == pytest.approx(1.0)


def test_points():
    np.testing.assert_allclose(Constellation(4).points, [-1, 1])
    np.testing.assert_allclose(Constellation(16).points, np.array([-3, -1, 1, 3]) / np.sqrt(5))


@pytest.mark.parametrize("M", [4, 16])
def test_gray_neighbours_differ_in_one_bit(M):
    c = Constellation(M)
    labels = c.gray_of
    for a, b in zip(labels[:-1], labels[1:]):
        assert bin(int(a) ^ int(b)).count("1") == 1


def test_bit_order_msb_first_real_then_imag():
    c = Constellation(16)
    # real labels 0b11 -> gray index 2 -> +1/sqrt5 ; imag 0b00 -> -3/sqrt5
    sym = c.map_bits(np.array([1, 1, 0, 0]))
    assert sym[0] == pytest.approx((1 - 3j) / np.sqrt(5))
    assert Constellation(4).map_bits(np.array([1, 0]))[0] == pytest.approx(1 - 1j)


@pytest.mark.parametrize("M", [4, 16])
def test_map_demap_roundtrip(rng, M):
    c = Constellation(M)
    bits = rng.integers(0, 2, 40 * c.bits_per_symbol)
    np.testing.assert_array_equal(c.demap_symbols(c.map_bits(bits)), bits)


def test_bad_constellation():
    with pytest.raises(ValueError):
        Constellation(8)
    with pytest.raises(ValueError):
        Constellation(4).map_bits(np.array([1, 0, 1]))


@pytest.mark.parametrize("M", [4, 16])
def test_block_consistency(rng, M):
    c = Constellation(M)
    b = generate_block(rng, 64, c, clip_model=ClipModel(0.7))
    assert b.bits.size == bits_per_block(64, c) == 31 * c.bits_per_symbol
    np.testing.assert_array_equal(c.demap_coeffs(b.x), b.bits)
    np.testing.assert_allclose(b.z, TransformPlan(64, "dense").forward(b.x), atol=1e-12)
    np.testing.assert_array_equal(b.s, np.clip(b.z, -0.7, 0.7))


def test_block_variance_is_unit(rng):
    N = 4096
    z = np.concatenate([generate_block(rng, N, Constellation(16)).z for _ in range(20)])
    # two of N slots are unused, so the expected variance is (N-2)/N
    assert np.var(z) == pytest.approx((N - 2) / N, rel=0.01)


def test_no_clip_leaves_s_empty(rng):
    assert generate_block(rng, 16, Constellation(4)).s is None


def test_clip_boundaries():
    w = np.array([-2.0, -0.7, 0.0, 0.7, 2.0])
    np.testing.assert_array_equal(clip(w, ClipModel(0.7)), [-0.7, -0.7, 0.0, 0.7, 0.7])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(1e-3, 1e3))
def test_clip_properties(values, T):
    w = np.array(values)
    m = ClipModel(T)
    c = clip(w, m)
    np.testing.assert_array_equal(clip(c, m), c)
    np.testing.assert_array_equal(clip(-w, m), -c)
    assert np.all(np.abs(c) <= T)


@pytest.mark.parametrize("T", [0.3, 0.7, 1.0, 2.0, 4.0])
def test_bussgang_gain_matches_quadrature(T):
    assert bussgang_gain(T) == pytest.approx(bussgang_gain_quad(T), abs=1e-10)


@pytest.mark.parametrize("T", [0.3, 0.7, 1.0, 2.0, 4.0])
def test_clipped_power_matches_quadrature(T):
    assert clipped_power(T) == pytest.approx(clipped_power_quad(T), abs=1e-10)


def test_analytic_values():
    assert bussgang_gain(0.7) == pytest.approx(0.516, abs=1e-3)
    assert bussgang_gain(1.0) == pytest.approx(0.683, abs=1e-3)
    assert bussgang_gain(np.inf) == 1.0
    assert clipped_power(np.inf) == 1.0
    assert clipped_power(0.7) == pytest.approx(0.316, abs=1e-3)
    assert 10 * np.log10(0.49 / clipped_power(0.7)) == pytest.approx(1.9045, abs=1e-4)


def test_clip_model_invariants():
    for T in [0.1, 0.7, 3.0]:
        m = ClipModel(T)
        assert 0 < m.bussgang_gain < 1
        assert m.clipped_power < min(1.0, T * T)
    with pytest.raises(ValueError):
        ClipModel(0.0)
    with pytest.raises(ValueError):
        clipped_power(-1.0)


def test_monte_carlo_moments(rng):
    z = rng.standard_normal(1_000_000)
    T = 0.7
    f = np.clip(z, -T, T)
    for sample, exact in [(z * f, bussgang_gain(T)), (f * f, clipped_power(T))]:
        se = sample.std() / np.sqrt(sample.size)
        assert abs(sample.mean() - exact) < 3 * se


def test_crest_factor():
    assert crest_factor_db(np.array([1.0, -1.0, 1.0, -1.0])) == pytest.approx(0.0)
    assert crest_factor_db(np.sin(2 * np.pi * np.arange(64) / 64)) == pytest.approx(10 * np.log10(2), abs=1e-9)
    with pytest.raises(ValueError):
        crest_factor_db(np.zeros(4))


def test_unclipped_crest_factor_near_12db(rng):
    cf = [crest_factor_db(generate_block(rng, 4096, Constellation(4)).z) for _ in range(30)]
    assert np.mean(cf) == pytest.approx(12.0, abs=1.0)


def test_cyclic_prefix(rng):
    w = rng.standard_normal(32)
    s = add_cp(w, 8)
    assert s.size == 40
    np.testing.assert_array_equal(s[:8], w[-8:])
    np.testing.assert_array_equal(strip_cp(s, 8), w)
    np.testing.assert_array_equal(np.roll(s, -8)[:32], w)
    np.testing.assert_array_equal(add_cp(w, 0), w)
    with pytest.raises(ValueError):
        add_cp(w, 32)
    with pytest.raises(ValueError):
        add_cp(w, -1)
