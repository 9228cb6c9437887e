"""Collocation grid on the closed unit disc and functions living on it.

Nodes are a center point plus ``n_radial`` rings at Chebyshev-type radii
``sin(πj / 2n_radial)``; the last ring is the unit circle.  Each ring carries
``n_angular`` equispaced nodes (a power of two), so the node set is symmetric
under conjugation and under ζ ↦ -ζ.

A ``GridFunction`` holds node values and, when available, the exact spectral
form as a :class:`~holodisc.polynomial.PolarizedPolynomial`.  Values-only
functions are projected onto ζ^k ζ̄^l by a per-Fourier-mode least-squares fit.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field

import numpy as np

from .polynomial import PolarizedPolynomial

DEFAULT_DEGREE_CAP = 32
DEFAULT_FIT_DEGREE = 16


class GridError(ValueError):
    pass


def _unit_circle(n_angular):
    """Equispaced points on S with |ζ| == 1 holding exactly in floating point."""
    q = n_angular // 4
    t = 2.0 * np.pi * np.arange(q) / n_angular
    pts = np.empty(q, dtype=np.complex128)
    for i, (c, s) in enumerate(zip(np.cos(t), np.sin(t))):
        pts[i] = _snap_unit(c, s)
    return np.concatenate([pts, 1j * pts, -pts, -1j * pts])


def _snap_unit(c, s):
    # nudge by a few ulps until the modulus rounds to exactly one; numpy's
    # vectorized modulus is the one that matters, Python's is a bonus
    cands = [complex(c + i * np.spacing(c), s + j * np.spacing(s))
             for i in range(-4, 5) for j in range(-4, 5)]
    cands.sort(key=lambda z: abs(z.real - c) + abs(z.imag - s))
    ok = np.abs(np.array(cands)) == 1.0
    for z, good in zip(cands, ok):
        if good and abs(z) == 1.0:
            return z
    for z, good in zip(cands, ok):
        if good:
            return z
    return complex(c, s)


@dataclass(frozen=True, eq=False)
class DiscGrid:
    """Polar collocation grid: center node first, then rings from inside out."""

    n_radial: int
    n_angular: int
    radii: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular

    @property
    def boundary_slice(self):
        return slice(self.size - self.n_angular, self.size)

    @property
    def boundary_nodes(self):
        return self.nodes[self.boundary_slice]

    def ring(self, j):
        """Slice of ring j (0-based, innermost first)."""
        start = 1 + j * self.n_angular
        return slice(start, start + self.n_angular)

    @functools.cached_property
    def mirror_index(self):
        """Index of conj(node) for every node."""
        idx = np.empty(self.size, dtype=int)
        idx[0] = 0
        a = np.arange(self.n_angular)
        ma = (-a) % self.n_angular
        for j in range(self.n_radial):
            idx[1 + j * self.n_angular + a] = 1 + j * self.n_angular + ma
        return idx

    @functools.cached_property
    def upper_mask(self):
        """Nodes of the closed upper half-disc (Im ζ >= 0)."""
        a = np.arange(self.n_angular)
        upper = a <= self.n_angular // 2
        mask = np.zeros(self.size, dtype=bool)
        mask[0] = True
        for j in range(self.n_radial):
            mask[self.ring(j)] = upper
        return mask

    @functools.cached_property
    def real_axis_mask(self):
        """Nodes on the diameter (-1, 1) including its endpoints."""
        a = np.arange(self.n_angular)
        on = (a == 0) | (a == self.n_angular // 2)
        mask = np.zeros(self.size, dtype=bool)
        mask[0] = True
        for j in range(self.n_radial):
            mask[self.ring(j)] = on
        return mask

    def max_fit_degree(self):
        """Largest total degree the least-squares projection can resolve on this grid."""
        return min(2 * self.n_radial - 1, self.n_angular // 2 - 1)


def make_disc_grid(n_radial, n_angular):
    """Grid with ``n_radial`` rings of ``n_angular`` nodes plus the center."""
    if int(n_radial) != n_radial or int(n_angular) != n_angular:
        raise GridError("grid sizes must be integers")
    n_radial, n_angular = int(n_radial), int(n_angular)
    if n_angular < 1 or n_angular & (n_angular - 1):
        raise GridError("angular count must be power of 2")
    if n_radial < 4 or n_angular < 8:
        raise GridError("grid too small: need n_radial >= 4 and n_angular >= 8")
    radii = np.sin(0.5 * np.pi * np.arange(1, n_radial + 1) / n_radial)
    radii[-1] = 1.0
    circle = _unit_circle(n_angular)
    nodes = np.concatenate([[0.0 + 0.0j]] + [r * circle for r in radii[:-1]] + [circle])
    radii.setflags(write=False)
    nodes.setflags(write=False)
    return DiscGrid(n_radial, n_angular, radii, nodes)


@functools.lru_cache(maxsize=8)
def default_grid(n_radial=16, n_angular=64):
    return make_disc_grid(n_radial, n_angular)


# ---------------------------------------------------------------------------
# boundary functions


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Fourier series Σ_{m=-M}^{M} c_m e^{imθ} per component; ``fourier`` has shape (n, 2M+1)."""

    fourier: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        c = np.asarray(self.fourier, dtype=np.complex128)
        if c.ndim == 1:
            c = c[None]
        if c.shape[1] % 2 != 1:
            raise ValueError("Fourier array must have odd length 2M+1")
        if self.real_flag:
            # enforce c_{-m} = conj(c_m) exactly
            c = 0.5 * (c + np.conj(c[:, ::-1]))
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "fourier", c)

    @property
    def n(self):
        return self.fourier.shape[0]

    @property
    def max_mode(self):
        return (self.fourier.shape[1] - 1) // 2

    def mode(self, m):
        M = self.max_mode
        if abs(m) > M:
            return np.zeros(self.n, dtype=np.complex128)
        return self.fourier[:, m + M].copy()

    def padded(self, M):
        if M < self.max_mode:
            c = self.fourier[:, self.max_mode - M:self.max_mode + M + 1]
        else:
            c = np.zeros((self.n, 2 * M + 1), dtype=np.complex128)
            c[:, M - self.max_mode:M + self.max_mode + 1] = self.fourier
        return BoundaryFunction(c, self.real_flag)

    @classmethod
    def from_modes(cls, modes, n=1, real=False):
        """``modes``: {m: coeff} for n = 1 or {(j, m): coeff}."""
        items = {((0, k) if np.ndim(k) == 0 else tuple(k)): v for k, v in modes.items()}
        M = max([abs(m) for _, m in items] + [0])
        c = np.zeros((n, 2 * M + 1), dtype=np.complex128)
        for (j, m), v in items.items():
            c[j, m + M] += v
        return cls(c, real)

    @classmethod
    def from_samples(cls, samples, max_mode, real=False):
        """Truncated Fourier series of equispaced samples θ_a = 2πa/N (shape (n, N) or (N,))."""
        s = np.atleast_2d(np.asarray(samples))
        N = s.shape[1]
        if 2 * max_mode + 1 > N:
            raise ValueError("need at least 2*max_mode+1 samples")
        f = np.fft.fft(s, axis=1) / N
        m = np.arange(-max_mode, max_mode + 1)
        return cls(f[:, m % N], real)

    @classmethod
    def from_callable(cls, func, max_mode, n_samples=None, real=False):
        """Fourier coefficients of θ ↦ func(θ) (vectorized, returns (n, N) or (N,))."""
        N = n_samples or max(8 * max_mode, 256)
        theta = 2.0 * np.pi * np.arange(N) / N
        return cls.from_samples(func(theta), max_mode, real)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        M = self.max_mode
        m = np.arange(-M, M + 1)
        e = np.exp(1j * np.multiply.outer(theta, m))
        vals = np.tensordot(e, self.fourier, axes=([-1], [1]))
        return np.moveaxis(vals, -1, 0)

    @property
    def real(self):
        return BoundaryFunction(0.5 * (self.fourier + np.conj(self.fourier[:, ::-1])), True)

    @property
    def imag(self):
        return BoundaryFunction(-0.5j * (self.fourier - np.conj(self.fourier[:, ::-1])), True)

    def is_real(self, atol=1e-12):
        scale = max(1.0, float(np.max(np.abs(self.fourier), initial=0.0)))
        return bool(np.max(np.abs(self.fourier - np.conj(self.fourier[:, ::-1])), initial=0.0) <= atol * scale)

    def __add__(self, other):
        M = max(self.max_mode, other.max_mode)
        return BoundaryFunction(self.padded(M).fourier + other.padded(M).fourier,
                                self.real_flag and other.real_flag)

    def __sub__(self, other):
        M = max(self.max_mode, other.max_mode)
        return BoundaryFunction(self.padded(M).fourier - other.padded(M).fourier,
                                self.real_flag and other.real_flag)

    def __mul__(self, scalar):
        s = complex(scalar)
        return BoundaryFunction(self.fourier * s, self.real_flag and s.imag == 0.0)

    __rmul__ = __mul__

    def sup(self, n_samples=None):
        N = n_samples or max(16 * self.max_mode, 256)
        theta = 2.0 * np.pi * np.arange(N) / N
        vals = self(theta)
        return float(np.max(np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))))


# ---------------------------------------------------------------------------
# grid functions


@dataclass(frozen=True, eq=False)
class GridFunction:
    """ℂ^n-valued function on a :class:`DiscGrid`; ``values`` has shape (n, grid.size)."""

    grid: DiscGrid
    values: np.ndarray = field(repr=False)
    spectral: PolarizedPolynomial | None = None
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim == 1:
            v = v[None]
        if v.shape[1] != self.grid.size:
            raise ValueError("values do not match the grid size")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_spectral(cls, grid, poly, info=None):
        return cls(grid, poly(grid.nodes), poly, dict(info or {}))

    @classmethod
    def from_values(cls, grid, values, info=None):
        return cls(grid, values, None, dict(info or {}))

    @classmethod
    def from_callable(cls, grid, func, info=None):
        """Sample ``func`` (vectorized, ζ array -> (n, N) or (N,)) at the grid nodes."""
        return cls(grid, func(grid.nodes), None, dict(info or {}))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def degree_cap(self):
        if self.spectral is None:
            return None
        return max(self.spectral.shape) - 1

    def sup(self, mask=None):
        v = self.values if mask is None else self.values[:, mask]
        return float(np.max(np.sqrt(np.sum(np.abs(v) ** 2, axis=0)), initial=0.0))

    def project(self, degree=None, cap=None):
        """Spectral form, fitting node values if needed.

        Returns ``(poly, residual)`` where residual is the max node misfit
        (zero for functions that already carry their spectral form).
        """
        if self.spectral is not None:
            return self.spectral, 0.0
        return fit_spectral(self.grid, self.values, degree=degree, cap=cap)

    def with_spectral(self, degree=None, tol=None):
        """Copy that carries a spectral form; raises if the fit misses ``tol``."""
        if self.spectral is not None:
            return self
        poly, res = self.project(degree)
        if tol is not None and res > tol:
            raise GridError(
                f"projection residual {res:.3e} exceeds requested tolerance {tol:.3e} "
                f"on a {self.grid.n_radial}x{self.grid.n_angular} grid"
            )
        info = dict(self.info)
        info["projection_residual"] = res
        return GridFunction(self.grid, self.values, poly, info)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            if other.grid is not self.grid:
                raise ValueError("grid mismatch")
            spec = None
            if self.spectral is not None and other.spectral is not None:
                spec = op(self.spectral, other.spectral)
            return GridFunction(self.grid, op(self.values, other.values), spec)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        spec = None if self.spectral is None else self.spectral * scalar
        s = np.asarray(scalar)
        vals = self.values * (s if s.ndim == 0 else s[:, None])
        return GridFunction(self.grid, vals, spec)

    __rmul__ = __mul__

    def conj(self):
        spec = None if self.spectral is None else self.spectral.conj()
        return GridFunction(self.grid, np.conj(self.values), spec)

    # serialization -------------------------------------------------------
    def to_json(self, atol=0.0):
        """``{n, degree_cap, coefficients}``; coefficients are ``[k, l, re, im]`` rows
        (a flat list for n = 1, one list per component otherwise)."""
        poly, _ = self.project()
        rows = []
        for j in range(poly.n):
            c = poly.coeffs[j]
            ks, ls = np.nonzero(np.abs(c) > atol)
            rows.append([[int(k), int(l), float(c[k, l].real), float(c[k, l].imag)] for k, l in zip(ks, ls)])
        return {
            "n": poly.n,
            "degree_cap": int(max(poly.shape) - 1),
            "coefficients": rows[0] if poly.n == 1 else rows,
        }

    @classmethod
    def from_json(cls, data, grid=None):
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["n"])
        cap = int(data["degree_cap"])
        rows = data["coefficients"]
        if n == 1:
            rows = [rows]
        c = np.zeros((n, cap + 1, cap + 1), dtype=np.complex128)
        for j, comp in enumerate(rows):
            for k, l, re, im in comp:
                if k > cap or l > cap:
                    raise ValueError(f"monomial ({k}, {l}) exceeds degree cap {cap}")
                c[j, int(k), int(l)] = complex(re, im)
        return cls.from_spectral(grid or default_grid(), PolarizedPolynomial(c))


def fit_spectral(grid, values, degree=None, cap=None):
    """Least-squares projection of node values onto ζ^k ζ̄^l with k + l <= degree.

    Works one Fourier mode m at a time: on each ring the m-th angular
    coefficient is Σ_s c_{m,s} r^{|m|+2s}, fitted over the ring radii (and the
    center for m = 0).  Returns ``(poly, max_node_residual)``.
    """
    values = np.atleast_2d(np.asarray(values, dtype=np.complex128))
    n = values.shape[0]
    D = grid.max_fit_degree() if degree is None else int(degree)
    D = min(D, grid.max_fit_degree(), DEFAULT_DEGREE_CAP if cap is None else cap)
    Na, Nr = grid.n_angular, grid.n_radial
    rings = values[:, 1:].reshape(n, Nr, Na)
    F = np.fft.fft(rings, axis=2) / Na
    center = values[:, 0]
    r = grid.radii
    coeffs = np.zeros((n, D + 1, D + 1), dtype=np.complex128)
    for m in range(-D, D + 1):
        s_max = (D - abs(m)) // 2
        powers = abs(m) + 2 * np.arange(s_max + 1)
        V = r[:, None] ** powers[None, :]
        rhs = F[:, :, m % Na].T
        if m == 0:
            row = np.zeros((1, s_max + 1))
            row[0, 0] = 1.0
            V = np.vstack([row, V])
            rhs = np.vstack([center[None, :], rhs])
        scale = np.linalg.norm(V, axis=0)
        sol, *_ = np.linalg.lstsq(V / scale, rhs, rcond=None)
        sol = sol / scale[:, None]
        for s in range(s_max + 1):
            k, l = (m + s, s) if m >= 0 else (s, -m + s)
            coeffs[:, k, l] = sol[s]
    poly = PolarizedPolynomial(coeffs)
    residual = float(np.max(np.abs(poly(grid.nodes) - values), initial=0.0))
    return poly, residual


# ---------------------------------------------------------------------------
# differentiation and traces


def _spectral_of(f, degree=None):
    poly, res = f.project(degree)
    return poly, res


def dbar(f, degree=None):
    """∂f/∂ζ̄; exact on the spectral form."""
    poly, res = _spectral_of(f, degree)
    info = {"projection_residual": res} if f.spectral is None else {}
    return GridFunction.from_spectral(f.grid, poly.dbar(), info)


def d(f, degree=None):
    """∂f/∂ζ; exact on the spectral form."""
    poly, res = _spectral_of(f, degree)
    info = {"projection_residual": res} if f.spectral is None else {}
    return GridFunction.from_spectral(f.grid, poly.d(), info)


def boundary_trace(f, degree=None):
    """Fourier coefficients of f restricted to S.

    Spectral functions use c_m = Σ_{k-l=m} c_kl; values-only functions use the
    FFT of the boundary ring.
    """
    if f.spectral is None and degree is None:
        return BoundaryFunction.from_samples(f.values[:, f.grid.boundary_slice],
                                             f.grid.n_angular // 2 - 1)
    poly, _ = _spectral_of(f, degree)
    return trace_of(poly)


def trace_of(poly):
    """Boundary trace of a polynomial as a BoundaryFunction."""
    modes, c = poly.boundary_modes()
    M = int(max(abs(modes[0]), modes[-1]))
    out = np.zeros((poly.n, 2 * M + 1), dtype=np.complex128)
    out[:, modes + M] = c
    return BoundaryFunction(out)
