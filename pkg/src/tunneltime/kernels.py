"""Kernel dispatch: the Cython extension when it imports, NumPy otherwise.

Set ``TUNNELTIME_PURE_PYTHON=1`` to force the NumPy path.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("TUNNELTIME_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on build
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def synthesize(y, t, k, energy, amp, y_ref=0.0, backend=None):
    """Direct spectral sum ``sum_i amp_i exp(i(k_i (y - y_ref) - E_i t))`` on a (t, y) grid."""
    impl = _select(backend)
    return impl.synthesize(
        np.ascontiguousarray(y, dtype=float),
        np.ascontiguousarray(np.atleast_1d(t), dtype=float),
        np.ascontiguousarray(k, dtype=float),
        np.ascontiguousarray(energy, dtype=float),
        np.ascontiguousarray(amp, dtype=complex),
        float(y_ref),
    )


def transfer_amplitude(k_layers, widths, k_out, k_in, backend=None):
    impl = _select(backend)
    return impl.transfer_amplitude(
        np.ascontiguousarray(k_layers, dtype=complex),
        np.ascontiguousarray(widths, dtype=float),
        np.ascontiguousarray(k_out, dtype=complex),
        np.ascontiguousarray(k_in, dtype=complex),
    )


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernels are not available in this build")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
