"""Finite double power series on the disc.

A ``PolarizedPolynomial`` stores coefficients ``c[j, k, l]`` of component ``j``
of ``h(ζ) = Σ c[k, l] ζ^k ζ̄^l``.  Its polarization replaces ζ̄ by an independent
variable ξ, ``ĥ(ζ, ξ) = Σ c[k, l] ζ^k ξ^l``, which is holomorphic on the bidisc.
All differential and integral operators of the package act on these arrays
exactly, monomial by monomial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


def _powers(z, count):
    """Array of z**p for p < count, stacked on a new leading axis."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty((count,) + z.shape, dtype=np.complex128)
    if count:
        out[0] = 1.0
    for p in range(1, count):
        out[p] = out[p - 1] * z
    return out


@dataclass(frozen=True, eq=False)
class PolarizedPolynomial:
    """ℂ^n-valued polynomial in ζ and ζ̄ with coefficient array of shape (n, K, L)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3:
            raise ValueError("coefficient array must have shape (n, K, L)")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, n=1, shape=(1, 1)):
        return cls(np.zeros((n,) + tuple(shape), dtype=np.complex128))

    @classmethod
    def monomial(cls, k, l, coeff=1.0, n=1, component=0):
        c = np.zeros((n, k + 1, l + 1), dtype=np.complex128)
        c[component, k, l] = coeff
        return cls(c)

    @classmethod
    def constant(cls, values):
        v = np.atleast_1d(np.asarray(values, dtype=np.complex128))
        return cls(v[:, None, None])

    @classmethod
    def from_terms(cls, terms, n=1):
        """Build from ``{(k, l): coeff}`` (n = 1) or ``{(j, k, l): coeff}``."""
        keys = list(terms)
        if not keys:
            return cls.zeros(n)
        if len(keys[0]) == 2:
            keys3 = {(0,) + tuple(key): val for key, val in terms.items()}
        else:
            keys3 = {tuple(key): val for key, val in terms.items()}
        K = max(k for _, k, _ in keys3) + 1
        L = max(l for _, _, l in keys3) + 1
        c = np.zeros((n, K, L), dtype=np.complex128)
        for (j, k, l), val in keys3.items():
            c[j, k, l] += val
        return cls(c)

    # shape ------------------------------------------------------------
    @property
    def n(self):
        return self.coeffs.shape[0]

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    @property
    def degree(self):
        """Largest k + l carrying a nonzero coefficient (-1 for the zero polynomial)."""
        nz = np.nonzero(np.any(self.coeffs != 0, axis=0))
        if len(nz[0]) == 0:
            return -1
        return int(np.max(nz[0] + nz[1]))

    def resized(self, K, L):
        """Zero-pad or truncate to exactly (K, L) per component."""
        out = np.zeros((self.n, K, L), dtype=np.complex128)
        k, l = min(K, self.shape[0]), min(L, self.shape[1])
        out[:, :k, :l] = self.coeffs[:, :k, :l]
        return PolarizedPolynomial(out)

    def truncated(self, cap):
        """Drop every monomial with k > cap or l > cap."""
        K = min(self.shape[0], cap + 1)
        L = min(self.shape[1], cap + 1)
        return self.resized(K, L)

    def trimmed(self, atol=0.0):
        """Remove trailing rows/columns whose coefficients are all within atol of zero."""
        mask = np.any(np.abs(self.coeffs) > atol, axis=0)
        if not mask.any():
            return self.resized(1, 1)
        ks, ls = np.nonzero(mask)
        return self.resized(int(ks.max()) + 1, int(ls.max()) + 1)

    def component(self, j):
        return PolarizedPolynomial(self.coeffs[j:j + 1])

    @staticmethod
    def stack(parts):
        K = max(p.shape[0] for p in parts)
        L = max(p.shape[1] for p in parts)
        return PolarizedPolynomial(np.concatenate([p.resized(K, L).coeffs for p in parts]))

    # evaluation -------------------------------------------------------
    def polarization(self, zeta, xi):
        """ĥ(ζ, ξ) = Σ c_kl ζ^k ξ^l; returns shape (n,) + broadcast(zeta, xi).shape."""
        zeta, xi = np.broadcast_arrays(np.asarray(zeta, np.complex128), np.asarray(xi, np.complex128))
        K, L = self.shape
        zp = _powers(zeta.ravel(), K)
        xp = _powers(xi.ravel(), L)
        vals = np.einsum("jkl,kp,lp->jp", self.coeffs, zp, xp, optimize=True)
        return vals.reshape((self.n,) + zeta.shape)

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=np.complex128)
        return self.polarization(zeta, np.conj(zeta))

    # algebra ----------------------------------------------------------
    def _binary(self, other, op):
        if not isinstance(other, PolarizedPolynomial):
            return NotImplemented
        K = max(self.shape[0], other.shape[0])
        L = max(self.shape[1], other.shape[1])
        return PolarizedPolynomial(op(self.resized(K, L).coeffs, other.resized(K, L).coeffs))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return PolarizedPolynomial(-self.coeffs)

    def __mul__(self, scalar):
        s = np.asarray(scalar)
        if s.ndim == 0:
            return PolarizedPolynomial(self.coeffs * s)
        if s.ndim == 1 and s.shape[0] == self.n:
            return PolarizedPolynomial(self.coeffs * s[:, None, None])
        return NotImplemented

    __rmul__ = __mul__

    def conj(self):
        """Coefficients of the pointwise complex conjugate: c̄_lk at (k, l)."""
        return PolarizedPolynomial(np.conj(np.swapaxes(self.coeffs, 1, 2)))

    @property
    def real(self):
        return (self + self.conj()) * 0.5

    @property
    def imag(self):
        return (self - self.conj()) * (-0.5j)

    def d(self):
        """∂/∂ζ: ζ^k ζ̄^l ↦ k ζ^{k-1} ζ̄^l."""
        K, L = self.shape
        if K == 1:
            return PolarizedPolynomial.zeros(self.n, (1, L))
        k = np.arange(1, K)[None, :, None]
        return PolarizedPolynomial(self.coeffs[:, 1:, :] * k)

    def dbar(self):
        """∂/∂ζ̄: ζ^k ζ̄^l ↦ l ζ^k ζ̄^{l-1}."""
        K, L = self.shape
        if L == 1:
            return PolarizedPolynomial.zeros(self.n, (K, 1))
        l = np.arange(1, L)[None, None, :]
        return PolarizedPolynomial(self.coeffs[:, :, 1:] * l)

    def dxi(self):
        """∂/∂ξ with ζ = ξ + iη (real x-derivative)."""
        return self.d() + self.dbar()

    def deta(self):
        """∂/∂η (real y-derivative)."""
        return (self.d() - self.dbar()) * 1j

    def primitive_bar(self):
        """Primitive in ζ̄ with zero ζ̄-constant: c_kl ζ^k ζ̄^l ↦ c_kl/(l+1) ζ^k ζ̄^{l+1}."""
        K, L = self.shape
        out = np.zeros((self.n, K, L + 1), dtype=np.complex128)
        out[:, :, 1:] = self.coeffs / np.arange(1, L + 1)[None, None, :]
        return PolarizedPolynomial(out)

    def boundary_modes(self):
        """Fourier coefficients of the trace on |ζ| = 1.

        Returns (modes, coeffs) with modes = -(L-1)..(K-1); coefficient of mode m
        is Σ_{k-l=m} c_kl since ζ^k ζ̄^l = e^{i(k-l)θ} on the circle.
        """
        K, L = self.shape
        out = np.zeros((self.n, K + L - 1), dtype=np.complex128)
        for l in range(L):
            # mode k - l, index (k - l) + (L - 1)
            out[:, L - 1 - l:L - 1 - l + K] += self.coeffs[:, :, l]
        return np.arange(-(L - 1), K), out

    def holomorphic_part(self):
        """Σ_k c_k0 ζ^k."""
        return PolarizedPolynomial(self.coeffs[:, :, :1])

    def max_abs_coeff(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def l1(self):
        """Σ|c_kl| per component, maximized over components; bounds the sup over the closed disc."""
        return float(np.max(np.abs(self.coeffs).sum(axis=(1, 2))))

    def allclose(self, other, atol=1e-12):
        K = max(self.shape[0], other.shape[0])
        L = max(self.shape[1], other.shape[1])
        return bool(np.allclose(self.resized(K, L).coeffs, other.resized(K, L).coeffs, rtol=0, atol=atol))

    def __repr__(self):
        return f"PolarizedPolynomial(n={self.n}, shape={self.shape}, degree={self.degree})"


def mul(p, q, cap=None):
    """Componentwise product of two polynomials, truncated to degree cap per variable."""
    if p.n != q.n and p.n != 1 and q.n != 1:
        raise ValueError("component mismatch")
    K = p.shape[0] + q.shape[0] - 1
    L = p.shape[1] + q.shape[1] - 1
    if cap is not None:
        K, L = min(K, cap + 1), min(L, cap + 1)
    n = max(p.n, q.n)
    out = np.empty((n, K, L), dtype=np.complex128)
    for j in range(n):
        a = p.coeffs[j if p.n > 1 else 0]
        b = q.coeffs[j if q.n > 1 else 0]
        out[j] = kernels.poly_mul(a, b, K, L)
    return PolarizedPolynomial(out)


def matvec(field, v, cap=None):
    """Apply a matrix field (array (n, m, K, L)) to a polynomial vector with m components."""
    field = np.asarray(field, dtype=np.complex128)
    n, m = field.shape[:2]
    if m != v.n:
        raise ValueError("matrix field / vector shape mismatch")
    K = field.shape[2] + v.shape[0] - 1
    L = field.shape[3] + v.shape[1] - 1
    if cap is not None:
        K, L = min(K, cap + 1), min(L, cap + 1)
    out = np.zeros((n, K, L), dtype=np.complex128)
    for i in range(n):
        for j in range(m):
            f = field[i, j]
            if not np.any(f):
                continue
            out[i] += kernels.poly_mul(f, v.coeffs[j], K, L)
    return PolarizedPolynomial(out)


def matrix_field_constant(matrix):
    """Constant matrix as a (n, m, 1, 1) field."""
    m = np.asarray(matrix, dtype=np.complex128)
    return m[:, :, None, None].copy()
