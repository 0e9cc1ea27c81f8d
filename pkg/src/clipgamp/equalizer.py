"""Zero-forcing frequency-domain pre-processing for multipath reception."""

import numpy as np

FLOOR_RATIO = 1e-6


class ZFEqualizer:
    """Inverts the circular channel response of one tap realization.

    Bins with ``|H_k| < FLOOR_RATIO * max|H|`` are inverted at the floor
    magnitude (phase kept); ``floor_hits`` counts them.
    """

    def __init__(self, taps, N, floor_ratio=FLOOR_RATIO):
        taps = np.asarray(taps, dtype=float)
        if taps.size > N:
            raise ValueError("channel longer than the block")
        if not np.any(taps):
            raise ValueError("all-zero channel cannot be equalised")
        self.N = N
        self.H = np.fft.rfft(taps, n=N)
        mag = np.abs(self.H)
        floor = floor_ratio * mag.max()
        low = mag < floor
        self.floor_hits = int(np.count_nonzero(low))
        H = self.H.copy()
        if self.floor_hits:
            phase = np.where(mag > 0, H / np.where(mag > 0, mag, 1.0), 1.0)
            H[low] = floor * phase[low]
        self.inverse = 1.0 / H
        # mean of 1/|H_k|^2 over all N bins of the full (Hermitian) spectrum
        g = np.abs(self.inverse) ** 2
        full = 2.0 * g.sum() - g[0] - (g[-1] if N % 2 == 0 else 0.0)
        self.noise_gain = float(full / N)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.N:
            raise ValueError(f"expected length {self.N}, got {y.shape[-1]}")
        return np.fft.irfft(np.fft.rfft(y, axis=-1) * self.inverse, n=self.N, axis=-1)

    def noise_variance(self, noise_variance, mode="average"):
        """Per-sample noise variance to hand to the detector after ZF."""
        if mode == "average":
            return noise_variance * self.noise_gain
        if mode == "plain":
            return noise_variance
        raise ValueError(f"unknown ZF noise mode {mode!r}")


def zf_preprocess(y, taps, floor_ratio=FLOOR_RATIO):
    """y' = IDFT(DFT(y) / H)."""
    y = np.asarray(y, dtype=float)
    return ZFEqualizer(taps, y.shape[-1], floor_ratio)(y)
