"""Kernel selection.

The compiled extension ``holodisc._ckernels`` is used when it was built;
otherwise the numpy versions in ``holodisc._pykernels`` are used.  Setting
``HOLODISC_PURE=1`` forces the fallback.  Large products go through an FFT
convolution in either case, where the direct loop stops paying off.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("HOLODISC_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

# product size (kmax * lmax) above which the FFT path is used
FFT_THRESHOLD = 48 * 48


def _fft_mul(a, b, kmax, lmax):
    ka, la = a.shape
    kb, lb = b.shape
    shape = (ka + kb - 1, la + lb - 1)
    fa = np.fft.fft2(a, shape)
    fb = np.fft.fft2(b, shape)
    full = np.fft.ifft2(fa * fb)
    out = np.zeros((kmax, lmax), dtype=np.complex128)
    k = min(kmax, shape[0])
    l = min(lmax, shape[1])
    out[:k, :l] = full[:k, :l]
    return out


def poly_mul(a, b, kmax, lmax, method="auto"):
    """Truncated product of two coefficient arrays ``c[k, l]`` of ζ^k ζ̄^l."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if a.shape == (1, 1):
        out = np.zeros((kmax, lmax), dtype=np.complex128)
        k, l = min(kmax, b.shape[0]), min(lmax, b.shape[1])
        out[:k, :l] = a[0, 0] * b[:k, :l]
        return out
    if b.shape == (1, 1):
        return poly_mul(b, a, kmax, lmax)
    if method == "fft" or (method == "auto" and kmax * lmax > FFT_THRESHOLD):
        return _fft_mul(a, b, kmax, lmax)
    return _impl.poly_mul(a, b, kmax, lmax)


def holder_max(pts, vals, alpha):
    """Largest Hölder quotient over all pairs of rows of ``pts``/``vals``."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    return _impl.holder_max(pts, vals, float(alpha))
