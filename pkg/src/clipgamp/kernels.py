"""Per-sample GAMP kernels, compiled when available.

The Cython extension ``clipgamp._kernels`` is used if it was built; otherwise
(or when ``CLIPGAMP_PURE_PYTHON=1`` is set) the NumPy implementation in
``clipgamp._kernels_py`` is used.  Both expose the same three functions.
"""

import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if os.environ.get("CLIPGAMP_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

VAR_FLOOR = _kernels_py.VAR_FLOOR


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None=active)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def output_moments(y, p, vp, s2, T):
    return _impl.output_moments(y, p, vp, s2, T)


def input_moments(r, vr, d):
    return _impl.input_moments(r, vr, d)


def posterior_table(r, vr, d):
    return _impl.posterior_table(r, vr, d)
