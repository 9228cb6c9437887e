import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holodisc import _pykernels, kernels


def _rand(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _direct(a, b, kmax, lmax):
    out = np.zeros((kmax, lmax), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(b.shape[0]):
                for l in range(b.shape[1]):
                    if i + k < kmax and j + l < lmax:
                        out[i + k, j + l] += a[i, j] * b[k, l]
    return out


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6),
       st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31))
def test_poly_mul_backends_agree(ka, la, kb, lb, kmax, lmax, seed):
    rng = np.random.default_rng(seed)
    a, b = _rand(rng, (ka, la)), _rand(rng, (kb, lb))
    ref = _direct(a, b, kmax, lmax)
    assert np.allclose(_pykernels.poly_mul(a, b, kmax, lmax), ref, atol=1e-12)
    assert np.allclose(kernels.poly_mul(a, b, kmax, lmax, method="direct"), ref, atol=1e-12)
    assert np.allclose(kernels.poly_mul(a, b, kmax, lmax, method="fft"), ref, atol=1e-11)


def test_fft_path_matches_direct_on_large_product():
    rng = np.random.default_rng(1)
    a, b = _rand(rng, (40, 40)), _rand(rng, (40, 40))
    direct = _pykernels.poly_mul(a, b, 60, 60)
    assert np.allclose(kernels.poly_mul(a, b, 60, 60), direct, atol=1e-10)


@given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2**31))
def test_holder_max_backends_agree(n, alpha, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 2))
    vals = rng.normal(size=(n, 3))
    q1, i1, j1 = _pykernels.holder_max(pts, vals, alpha)
    q2, i2, j2 = kernels.holder_max(pts, vals, alpha)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    v = np.linalg.norm(vals[:, None] - vals[None], axis=-1)
    iu = np.triu_indices(n, 1)
    ref = np.max(v[iu] / d[iu] ** alpha)
    assert q1 == pytest.approx(ref, rel=1e-12)
    assert q2 == pytest.approx(ref, rel=1e-12)


def test_holder_max_skips_duplicate_points():
    pts = np.zeros((3, 2))
    vals = np.arange(3.0)[:, None]
    assert _pykernels.holder_max(pts, vals, 0.5) == (0.0, -1, -1)
    assert kernels.holder_max(pts, vals, 0.5) == (0.0, -1, -1)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
