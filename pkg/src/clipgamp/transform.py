"""Real N-point IDFT operator of the DMT signal model and QAM packing.

A block carries ``N/2 - 1`` complex symbols on tones ``1 .. N/2-1``.  They are
packed into a real coefficient vector ``x`` of length ``N``::

    x[k]       = Re(xi_k),  k = 1 .. N/2-1   (cosine columns)
    x[N/2 + m] = Im(xi_m),  m = 1 .. N/2-1   (sine columns)
    x[0] = x[N/2] = 0                        (DC and Nyquist unused)

and the time-domain block is ``z = F x`` with

    F[n, k]       =  sqrt(2/N) cos(2 pi n k / N),   0 <= k < N/2
    F[n, N/2 + m] = -sqrt(2/N) sin(2 pi n m / N),   0 <= m < N/2

so that ``z_n = Re{sqrt(2/N) sum_k xi_k exp(j 2 pi n k / N)}``.  Restricted to
the admissible subspace (``x[0] = x[N/2] = 0``) the operator is orthonormal.
"""

from dataclasses import dataclass, field

import numpy as np


def check_size(N):
    if not isinstance(N, (int, np.integer)) or N < 8 or (N & (N - 1)) != 0:
        raise ValueError(f"block size must be a power of two >= 8, got {N!r}")
    return int(N)


def admissible_mask(N):
    """Boolean mask of the N - 2 coefficient slots that carry data."""
    mask = np.ones(N, dtype=bool)
    mask[0] = False
    mask[N // 2] = False
    return mask


def build_dense_matrix(N):
    """Dense N x N matrix F (test oracle for the fast path)."""
    N = check_size(N)
    n = np.arange(N)[:, None]
    k = np.arange(N // 2)[None, :]
    ang = 2.0 * np.pi * n * k / N
    scale = np.sqrt(2.0 / N)
    return np.hstack([scale * np.cos(ang), -scale * np.sin(ang)])


@dataclass(frozen=True)
class TransformPlan:
    """Precomputed real IDFT of size ``N``.

    ``mode="fast"`` evaluates F and its transpose with a real FFT;
    ``mode="dense"`` multiplies by the explicit matrix and exists to
    cross-check the fast path.
    """

    size: int
    mode: str = "fast"
    _dense: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        check_size(self.size)
        if self.mode not in ("fast", "dense"):
            raise ValueError(f"unknown transform mode {self.mode!r}")
        if self.mode == "dense":
            mat = build_dense_matrix(self.size)
            mat.setflags(write=False)
            object.__setattr__(self, "_dense", mat)

    @property
    def half(self):
        return self.size // 2

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.size:
            raise ValueError(f"expected length {self.size}, got {v.shape[-1]}")
        return v

    def forward(self, x):
        """z = F x.  Accepts a vector or a stack of vectors (last axis)."""
        x = self._check(x)
        if self.mode == "dense":
            return x @ self._dense.T
        h = self.half
        spec = np.zeros(x.shape[:-1] + (h + 1,), dtype=complex)
        spec[..., 0] = 2.0 * x[..., 0]
        spec[..., 1:h] = x[..., 1:h] + 1j * x[..., h + 1:]
        return np.sqrt(self.size / 2.0) * np.fft.irfft(spec, n=self.size, axis=-1)

    def adjoint(self, v):
        """F^T v."""
        v = self._check(v)
        if self.mode == "dense":
            return v @ self._dense
        h = self.half
        spec = np.fft.rfft(v, axis=-1)
        out = np.empty(v.shape, dtype=float)
        scale = np.sqrt(2.0 / self.size)
        out[..., :h] = scale * spec[..., :h].real
        out[..., h] = 0.0
        out[..., h + 1:] = scale * spec[..., 1:h].imag
        return out

    def abs2(self):
        """Dense |F|^2, used by the exact variance mode."""
        mat = self._dense if self._dense is not None else build_dense_matrix(self.size)
        return mat * mat


def forward(plan, x):
    return plan.forward(x)


def adjoint(plan, v):
    return plan.adjoint(v)


def pack_qam(symbols, N=None):
    """Pack ``N/2 - 1`` complex symbols into the real coefficient vector."""
    symbols = np.asarray(symbols)
    count = symbols.shape[-1]
    if N is None:
        N = 2 * (count + 1)
    N = check_size(N)
    if count != N // 2 - 1:
        raise ValueError(f"expected {N // 2 - 1} symbols for N={N}, got {count}")
    h = N // 2
    x = np.zeros(symbols.shape[:-1] + (N,))
    x[..., 1:h] = symbols.real
    x[..., h + 1:] = symbols.imag
    return x


def unpack_qam(x):
    """Inverse of :func:`pack_qam`."""
    x = np.asarray(x, dtype=float)
    N = check_size(x.shape[-1])
    h = N // 2
    return x[..., 1:h] + 1j * x[..., h + 1:]


def as_spectrum(x):
    """Validate a real coefficient vector: power-of-two length, zero DC/Nyquist."""
    x = np.asarray(x, dtype=float)
    N = check_size(x.shape[-1])
    if np.any(x[..., 0] != 0.0) or np.any(x[..., N // 2] != 0.0):
        raise ValueError("DC and Nyquist coefficients must be zero")
    return x
