"""GAMP detection of clipped DMT/OFDM blocks, with baselines and a BER harness."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
