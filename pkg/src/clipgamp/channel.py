"""Multipath + AWGN channel and Eb/N0 noise calibration."""

from dataclasses import dataclass

import numpy as np

from .transmitter import bits_per_block

ENERGY_CONVENTIONS = ("transmitted", "preclip")


@dataclass(frozen=True)
class ChannelModel:
    taps: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float))
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("channel taps must be a non-empty vector")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self):
        return self.taps.size

    def with_noise(self, noise_variance):
        return ChannelModel(self.taps, noise_variance)


def generate_multipath(rng, n_taps=64, decay=0.05, n_cp=64, normalize=True):
    """Random taps h_k = N(0, 1) exp(-decay k), k < n_taps, scaled to unit energy."""
    if n_taps > n_cp:
        raise ValueError(f"{n_taps} taps do not fit a cyclic prefix of {n_cp}")
    taps = rng.standard_normal(n_taps) * np.exp(-decay * np.arange(n_taps))
    if normalize:
        taps = taps / np.sqrt(np.sum(taps * taps))
    return taps


def apply_channel(s, channel, rng=None, cp_len=0):
    """Convolve a CP-prefixed block with the taps and add white Gaussian noise.

    ``s`` holds ``cp_len`` prefix samples followed by the N-sample body; the
    returned vector is the N-sample body window of the received signal.
    """
    s = np.asarray(s, dtype=float)
    h = channel.taps
    if h.size - 1 > cp_len:
        raise ValueError(f"cyclic prefix {cp_len} too short for {h.size} channel taps")
    N = s.shape[-1] - cp_len
    y = np.convolve(s, h)[cp_len:cp_len + N] if h.size > 1 else h[0] * s[cp_len:]
    if channel.noise_variance > 0:
        if rng is None:
            raise ValueError("a random generator is required for a noisy channel")
        y = y + np.sqrt(channel.noise_variance) * rng.standard_normal(N)
    return y


def calibrate_noise(ebno_db, N, constellation, clip_model=None, convention="transmitted"):
    """Per-sample noise variance giving the requested Eb/N0.

    Block energy is ``N * E[f(z)^2]`` under the ``transmitted`` convention and
    ``N`` under ``preclip``; the cyclic prefix is not counted.
    """
    if convention not in ENERGY_CONVENTIONS:
        raise ValueError(f"unknown energy convention {convention!r}")
    power = 1.0
    if convention == "transmitted" and clip_model is not None:
        power = clip_model.clipped_power
    eb = N * power / bits_per_block(N, constellation)
    return eb / (2.0 * 10.0 ** (ebno_db / 10.0))
