"""Bits, Gray-mapped square QAM, clipped DMT blocks and clipping analytics."""

from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from .transform import TransformPlan, check_size, pack_qam, unpack_qam


class Constellation:
    """Square M-QAM, Gray labelled independently on each real dimension.

    ``points`` holds the per-dimension amplitudes (unit mean power per
    dimension).  A tone's bits are laid out MSB first, real dimension then
    imaginary dimension; tones are in ascending order.
    """

    def __init__(self, M):
        if M not in (4, 16):
            raise ValueError(f"unsupported constellation size {M}")
        self.M = M
        self.levels = int(round(np.sqrt(M)))
        self.bits_per_dim = int(np.log2(self.levels))
        raw = np.arange(-(self.levels - 1), self.levels, 2, dtype=float)
        self.points = raw / np.sqrt(np.mean(raw * raw))
        # level index -> Gray code; gray_of[i] is the label of points[i]
        idx = np.arange(self.levels)
        self.gray_of = idx ^ (idx >> 1)
        self.index_of = np.argsort(self.gray_of)

    @property
    def bits_per_symbol(self):
        return 2 * self.bits_per_dim

    def __repr__(self):
        return f"Constellation(M={self.M})"

    def _bits_to_labels(self, bits):
        bits = bits.reshape(bits.shape[:-1] + (-1, self.bits_per_dim))
        weights = 1 << np.arange(self.bits_per_dim - 1, -1, -1)
        return bits @ weights

    def _labels_to_bits(self, labels):
        shifts = np.arange(self.bits_per_dim - 1, -1, -1)
        bits = (labels[..., None] >> shifts) & 1
        return bits.reshape(labels.shape[:-1] + (-1,)).astype(np.uint8)

    def map_bits(self, bits):
        """Map a bit array (last axis, multiple of bits_per_symbol) to symbols."""
        bits = np.asarray(bits, dtype=np.int64)
        if bits.shape[-1] % self.bits_per_symbol:
            raise ValueError("bit count is not a multiple of bits per symbol")
        labels = self._bits_to_labels(bits)
        amp = self.points[self.index_of[labels]]
        amp = amp.reshape(amp.shape[:-1] + (-1, 2))
        return amp[..., 0] + 1j * amp[..., 1]

    def slice_levels(self, values):
        """Index of the nearest per-dimension point for each value."""
        edges = 0.5 * (self.points[1:] + self.points[:-1])
        return np.searchsorted(edges, values)

    def hard_decide(self, values):
        return self.points[self.slice_levels(values)]

    def demap_symbols(self, symbols):
        """Hard decisions on complex symbols, returned as bits."""
        symbols = np.asarray(symbols)
        dims = np.stack([symbols.real, symbols.imag], axis=-1)
        dims = dims.reshape(dims.shape[:-2] + (-1,))
        labels = self.gray_of[self.slice_levels(dims)]
        return self._labels_to_bits(labels)

    def demap_coeffs(self, x):
        """Hard decisions on a packed real coefficient vector, returned as bits."""
        return self.demap_symbols(unpack_qam(x))


def bits_per_block(N, constellation):
    return (N // 2 - 1) * constellation.bits_per_symbol


@dataclass(frozen=True)
class ClipModel:
    """Symmetric clipper ``f(z) = min(max(z, -T), T)`` for unit-variance input."""

    threshold: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError(f"clip threshold must be positive, got {self.threshold}")

    @property
    def bussgang_gain(self):
        return bussgang_gain(self.threshold)

    @property
    def clipped_power(self):
        return clipped_power(self.threshold)

    def __call__(self, w):
        return clip(w, self)


NO_CLIP = ClipModel(np.inf)


def clip(w, model):
    T = model.threshold if isinstance(model, ClipModel) else float(model)
    return np.clip(w, -T, T)


def _check_threshold(T):
    if not T > 0:
        raise ValueError(f"clip threshold must be positive, got {T}")


def bussgang_gain(T):
    """E[z f(z)] / E[z^2] for z ~ N(0, 1), i.e. erf(T / sqrt 2)."""
    _check_threshold(T)
    return float(erf(T / np.sqrt(2.0)))


def clipped_power(T):
    """E[f(z)^2] for z ~ N(0, 1)."""
    _check_threshold(T)
    if np.isinf(T):
        return 1.0
    q = 0.5 * erfc(T / np.sqrt(2.0))
    pdf = np.exp(-0.5 * T * T) / np.sqrt(2.0 * np.pi)
    return float(1.0 - 2.0 * q - 2.0 * T * pdf + 2.0 * T * T * q)


def crest_factor_db(w):
    """Peak-to-RMS ratio of a waveform in dB."""
    w = np.asarray(w, dtype=float)
    rms = np.sqrt(np.mean(w * w))
    if rms == 0.0:
        raise ValueError("crest factor of a zero waveform is undefined")
    return float(20.0 * np.log10(np.max(np.abs(w)) / rms))


def add_cp(w, ncp):
    w = np.asarray(w)
    if not 0 <= ncp < w.shape[-1]:
        raise ValueError(f"cyclic prefix length {ncp} out of range for N={w.shape[-1]}")
    if ncp == 0:
        return w.copy()
    return np.concatenate([w[..., -ncp:], w], axis=-1)


def strip_cp(w, ncp):
    w = np.asarray(w)
    if not 0 <= ncp < w.shape[-1]:
        raise ValueError(f"cyclic prefix length {ncp} out of range")
    return w[..., ncp:].copy()


@dataclass
class TxBlock:
    bits: np.ndarray
    symbols: np.ndarray
    x: np.ndarray
    z: np.ndarray
    s: np.ndarray = None


def generate_block(rng, N, constellation, plan=None, clip_model=None):
    """Draw one random block; ``s`` is filled in when ``clip_model`` is given."""
    N = check_size(N)
    plan = plan or TransformPlan(N)
    bits = rng.integers(0, 2, bits_per_block(N, constellation), dtype=np.uint8)
    symbols = constellation.map_bits(bits)
    x = pack_qam(symbols, N)
    z = plan.forward(x)
    block = TxBlock(bits=bits, symbols=symbols, x=x, z=z)
    if clip_model is not None:
        block.s = clip(z, clip_model)
    return block
