# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: truncated bivariate convolution and pairwise Hölder quotients."""

import numpy as np

from libc.math cimport sqrt, pow


def poly_mul(const double complex[:, ::1] a, const double complex[:, ::1] b,
             Py_ssize_t kmax, Py_ssize_t lmax):
    """Coefficients of a*b restricted to k < kmax, l < lmax."""
    out = np.zeros((kmax, lmax), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t i, j, k, l, kk, ll
    cdef Py_ssize_t ka = a.shape[0], la = a.shape[1]
    cdef Py_ssize_t kb = b.shape[0], lb = b.shape[1]
    cdef double complex aij
    for i in range(min(ka, kmax)):
        kk = min(kb, kmax - i)
        for j in range(min(la, lmax)):
            aij = a[i, j]
            if aij.real == 0.0 and aij.imag == 0.0:
                continue
            ll = min(lb, lmax - j)
            for k in range(kk):
                for l in range(ll):
                    o[i + k, j + l] = o[i + k, j + l] + aij * b[k, l]
    return out


def holder_max(const double[:, ::1] pts, const double[:, ::1] vals, double alpha):
    """max_{i<j} |v_i - v_j| / |x_i - x_j|^alpha over all node pairs.

    Returns (quotient, i, j); (0.0, -1, -1) when fewer than two distinct points.
    """
    cdef Py_ssize_t n = pts.shape[0], dx = pts.shape[1], dv = vals.shape[1]
    cdef Py_ssize_t i, j, c, bi = -1, bj = -1
    cdef double d2, v2, t, q, best = 0.0, half = 0.5 * alpha
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for c in range(dx):
                t = pts[i, c] - pts[j, c]
                d2 += t * t
            if d2 == 0.0:
                continue
            v2 = 0.0
            for c in range(dv):
                t = vals[i, c] - vals[j, c]
                v2 += t * t
            q = sqrt(v2) / pow(d2, half)
            if q > best:
                best = q
                bi = i
                bj = j
    return best, bi, bj
