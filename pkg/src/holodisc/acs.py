"""Almost complex structures on a ball in ℂ^n and their deformation tensors.

Real coordinates are ordered (x_1..x_n, y_1..y_n) with z_a = x_a + i y_a, so
the standard structure is ``J_st = [[0, -I], [I, 0]]``.  A structure J close
to J_st is encoded by the complex matrix field A with

    A(z) conj(v) = (J_st + J(z))^{-1} (J_st - J(z)) v,

and J is recovered as J = J_st (I - Q)(I + Q)^{-1}, Q v = A conj(v).  Writing
A = P + iR, the real matrix of Q is [[P, R], [R, -P]].
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .polynomial import PolarizedPolynomial, mul

FD_STEP = 1e-5
SOLVER_GATE = 0.5


class StructureError(ValueError):
    pass


def j_standard(n):
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def conj_matrix(n):
    """Real matrix of complex conjugation: diag(I, -I)."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


def to_real(z):
    z = np.asarray(z, dtype=np.complex128)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def antilinear_to_real(A):
    """Real 2n×2n matrix of v ↦ A conj(v) (batched over leading axes)."""
    A = np.asarray(A, dtype=np.complex128)
    P, R = A.real, A.imag
    top = np.concatenate([P, R], axis=-1)
    bot = np.concatenate([R, -P], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def linear_to_real(B):
    """Real 2n×2n matrix of v ↦ B v."""
    B = np.asarray(B, dtype=np.complex128)
    P, R = B.real, B.imag
    top = np.concatenate([P, -R], axis=-1)
    bot = np.concatenate([R, P], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def real_to_pair(E):
    """Split a real 2n×2n matrix into (P, Q) with E v = P v + Q conj(v)."""
    E = np.asarray(E, dtype=float)
    n = E.shape[-1] // 2
    E11, E12 = E[..., :n, :n], E[..., :n, n:]
    E21, E22 = E[..., n:, :n], E[..., n:, n:]
    P = 0.5 * ((E11 + E22) + 1j * (E21 - E12))
    Q = 0.5 * ((E11 - E22) + 1j * (E21 + E12))
    return P, Q


def sample_ball(n, radius, count, seed=0):
    """Deterministic sample of points in the ball of radius ``radius`` in ℂ^n (origin included)."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(count, 2 * n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= radius * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / (2 * n))
    pts[0] = 0.0
    return to_complex(pts)


def _parse_complex(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise StructureError("complex entries are written [re, im]")
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def _parse_matrix(m, n):
    if n == 1 and (not isinstance(m, list) or not any(isinstance(v, list) for v in m)):
        # a scalar, or a scalar written [re, im]
        return np.array([[_parse_complex(m)]])
    if not isinstance(m, list) or not all(isinstance(row, list) for row in m):
        raise StructureError(f"matrix must be a list of {n} rows")
    arr = np.array([[_parse_complex(v) for v in row] for row in m], dtype=np.complex128)
    if arr.shape != (n, n):
        raise StructureError(f"matrix must be {n}x{n}, got {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# deformation tensors


def _falling(p, k):
    out = 1
    for i in range(k):
        out *= p - i
    return out


@dataclass(frozen=True, eq=False)
class DeformationTensor:
    """Complex n×n matrix field A(z) on the ball of radius ``radius`` in ℂ^n.

    ``kind`` is "constant", "polynomial" (terms A = Σ M z^α z̄^β) or
    "callable" (pointwise function, derivatives by central differences).
    """

    n: int
    kind: str
    terms: tuple = ()
    func: object = None
    radius: float = 1.0
    bound: float = field(default=float("nan"))

    def __post_init__(self):
        if self.kind not in ("constant", "polynomial", "callable"):
            raise StructureError(f"unknown deformation kind {self.kind!r}")
        if math.isnan(self.bound):
            object.__setattr__(self, "bound", self._estimate_bound())

    # constructors --------------------------------------------------------
    @classmethod
    def constant(cls, matrix, radius=1.0):
        M = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
        n = M.shape[0]
        zero = (0,) * n
        return cls(n, "constant", ((zero, zero, M),), radius=radius)

    @classmethod
    def polynomial(cls, terms, n=None, radius=1.0):
        """``terms``: iterable of (alpha, beta, matrix); scalar matrices allowed for n = 1."""
        out = []
        for alpha, beta, M in terms:
            M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
            alpha, beta = tuple(int(a) for a in alpha), tuple(int(b) for b in beta)
            out.append((alpha, beta, M))
        if n is None:
            n = out[0][2].shape[0]
        for alpha, beta, M in out:
            if len(alpha) != n or len(beta) != n or M.shape != (n, n):
                raise StructureError("polynomial term shapes do not match n")
            if min(alpha + beta, default=0) < 0:
                raise StructureError("exponents must be non-negative")
        if all(sum(a) + sum(b) == 0 for a, b, _ in out):
            total = sum(M for _, _, M in out)
            return cls.constant(total, radius)
        return cls(n, "polynomial", tuple(out), radius=radius)

    @classmethod
    def from_callable(cls, func, n, radius=1.0, bound=None):
        """``func(z)`` maps a point of ℂ^n (shape (n,)) to an n×n complex matrix."""
        return cls(n, "callable", func=func, radius=radius,
                   bound=float("nan") if bound is None else bound)

    @classmethod
    def zero(cls, n=1, radius=1.0):
        return cls.constant(np.zeros((n, n)), radius)

    # evaluation ----------------------------------------------------------
    def at(self, z):
        """A(z) for z of shape (n,) or (..., n); returns (..., n, n)."""
        z = np.asarray(z, dtype=np.complex128)
        if z.ndim == 0:
            z = z[None]
        batch = z.shape[:-1]
        if self.kind == "callable":
            flat = z.reshape(-1, self.n)
            vals = np.array([np.asarray(self.func(p), dtype=np.complex128).reshape(self.n, self.n)
                             for p in flat])
            return vals.reshape(batch + (self.n, self.n))
        return self._poly_eval(z, (0,) * self.n, (0,) * self.n)

    __call__ = at

    def _poly_eval(self, z, da, db):
        batch = z.shape[:-1]
        out = np.zeros(batch + (self.n, self.n), dtype=np.complex128)
        zc = np.conj(z)
        for alpha, beta, M in self.terms:
            c = 1.0
            for a in range(self.n):
                c *= _falling(alpha[a], da[a]) * _falling(beta[a], db[a])
            if c == 0:
                continue
            mono = np.full(batch, c, dtype=np.complex128)
            for a in range(self.n):
                pa, pb = alpha[a] - da[a], beta[a] - db[a]
                if pa:
                    mono = mono * z[..., a] ** pa
                if pb:
                    mono = mono * zc[..., a] ** pb
            out += mono[..., None, None] * M
        return out

    def complex_derivative(self, z, da, db):
        """Mixed derivative ∂^da ∂̄^db A at z (multi-indices of length n)."""
        z = np.asarray(z, dtype=np.complex128)
        if self.kind != "callable":
            return self._poly_eval(z, tuple(da), tuple(db))
        # central differences through real coordinates
        if sum(da) + sum(db) == 0:
            return self.at(z)
        if sum(da) + sum(db) > 1:
            raise StructureError("callable deformation tensors expose first derivatives only")
        a = (list(da) + list(db)).index(1)
        holo = a < self.n
        a = a % self.n
        gx, gy = self._fd_real(z, a)
        return 0.5 * (gx - 1j * gy) if holo else 0.5 * (gx + 1j * gy)

    def _fd_real(self, z, a, h=FD_STEP):
        e = np.zeros(self.n, dtype=np.complex128)
        e[a] = 1.0
        gx = (self.at(z + h * e) - self.at(z - h * e)) / (2 * h)
        gy = (self.at(z + 1j * h * e) - self.at(z - 1j * h * e)) / (2 * h)
        return gx, gy

    def real_derivatives(self, z):
        """∂A/∂x_a, ∂A/∂y_a stacked as shape (2n, ..., n, n)."""
        z = np.asarray(z, dtype=np.complex128)
        out = []
        dz = [self.complex_derivative(z, _unit(self.n, a), (0,) * self.n) for a in range(self.n)]
        dzb = [self.complex_derivative(z, (0,) * self.n, _unit(self.n, a)) for a in range(self.n)]
        for a in range(self.n):
            out.append(dz[a] + dzb[a])
        for a in range(self.n):
            out.append(1j * (dz[a] - dzb[a]))
        return np.stack(out)

    def real_hessian(self, z):
        """Second real derivatives, shape (2n, 2n, ..., n, n)."""
        z = np.asarray(z, dtype=np.complex128)
        n = self.n
        if self.kind == "callable":
            h = 1e-4
            rows = []
            for b in range(2 * n):
                e = np.zeros(2 * n)
                e[b] = h
                shift = to_complex(e)
                rows.append((self.real_derivatives(z + shift) - self.real_derivatives(z - shift)) / (2 * h))
            return np.stack(rows)
        # complex second derivatives then the chain rule ∂x = ∂ + ∂̄, ∂y = i(∂ - ∂̄)
        def mixed(i, j, bi, bj):
            da, db = [0] * n, [0] * n
            (da if not bi else db)[i] += 1
            (da if not bj else db)[j] += 1
            return self.complex_derivative(z, tuple(da), tuple(db))

        coef = {0: (1.0, 1.0), 1: (1j, -1j)}  # (weight of ∂, weight of ∂̄) for x and y
        out = np.empty((2 * n, 2 * n) + z.shape[:-1] + (n, n), dtype=np.complex128)
        for A_, B_ in itertools.product(range(2 * n), repeat=2):
            ia, ta = A_ % n, A_ // n
            ib, tb = B_ % n, B_ // n
            acc = 0
            for bi in (0, 1):
                for bj in (0, 1):
                    w = coef[ta][bi] * coef[tb][bj]
                    acc = acc + w * mixed(ia, ib, bi, bj)
            out[A_, B_] = acc
        return out

    # composition with polynomial maps -----------------------------------
    def compose(self, u: PolarizedPolynomial, cap, grid=None, da=None, db=None):
        """Matrix field A(u(ζ)) (or a derivative of A) as an array (n, n, K, L)."""
        n = self.n
        da = (0,) * n if da is None else tuple(da)
        db = (0,) * n if db is None else tuple(db)
        if self.kind == "callable":
            return self._compose_sampled(u, cap, grid, da, db)
        terms = []
        for alpha, beta, M in self.terms:
            c = 1.0
            for a in range(n):
                c *= _falling(alpha[a], da[a]) * _falling(beta[a], db[a])
            if c:
                terms.append((tuple(x - y for x, y in zip(alpha, da)),
                              tuple(x - y for x, y in zip(beta, db)), c * M))
        if not terms:
            return np.zeros((n, n, 1, 1), dtype=np.complex128)
        cache = {}

        def power(a, p, bar):
            key = (a, p, bar)
            if key not in cache:
                if p == 0:
                    cache[key] = PolarizedPolynomial.constant([1.0])
                else:
                    base = u.component(a).conj() if bar else u.component(a)
                    cache[key] = mul(power(a, p - 1, bar), base, cap)
            return cache[key]

        pieces = []
        for alpha, beta, M in terms:
            mono = PolarizedPolynomial.constant([1.0])
            for a in range(n):
                if alpha[a]:
                    mono = mul(mono, power(a, alpha[a], False), cap)
                if beta[a]:
                    mono = mul(mono, power(a, beta[a], True), cap)
            pieces.append((mono, M))
        K = max(p.shape[0] for p, _ in pieces)
        L = max(p.shape[1] for p, _ in pieces)
        out = np.zeros((n, n, K, L), dtype=np.complex128)
        for mono, M in pieces:
            out += M[:, :, None, None] * mono.resized(K, L).coeffs[0][None, None]
        return out

    def _compose_sampled(self, u, cap, grid, da, db):
        from .grid import default_grid, fit_spectral

        g = grid or default_grid()
        zs = u(g.nodes).T
        if sum(da) + sum(db) == 0:
            vals = self.at(zs)
        else:
            vals = self.complex_derivative(zs, da, db)
        flat = np.moveaxis(vals.reshape(g.size, self.n * self.n), 0, 1)
        poly, _ = fit_spectral(g, flat, cap=cap)
        K, L = poly.shape
        return poly.coeffs.reshape(self.n, self.n, K, L)

    # properties ------------------------------------------------------------
    def _estimate_bound(self):
        if self.kind != "callable":
            tot = 0.0
            for alpha, beta, M in self.terms:
                tot += np.linalg.norm(M, 2) * self.radius ** (sum(alpha) + sum(beta))
            return float(tot)
        pts = sample_ball(self.n, self.radius, 256, seed=1)
        return float(max(np.linalg.norm(self.at(p), 2) for p in pts))

    def sup_on_samples(self, count=256, seed=0):
        pts = sample_ball(self.n, self.radius, count, seed)
        return float(np.max(np.linalg.norm(self.at(pts), 2, axis=(-2, -1))))

    @property
    def degree(self):
        if self.kind == "callable":
            return None
        return max(sum(a) + sum(b) for a, b, _ in self.terms)

    def has_real_coefficients(self):
        """True when A(conj z) = conj A(z), i.e. conjugation is anti-holomorphic for J."""
        if self.kind == "callable":
            pts = sample_ball(self.n, self.radius, 32, seed=3)
            return bool(np.allclose(self.at(np.conj(pts)), np.conj(self.at(pts)), atol=1e-12))
        return all(np.all(M.imag == 0) for _, _, M in self.terms)

    def is_constant(self):
        return self.kind == "constant"

    def constant_value(self):
        if self.kind != "constant":
            raise StructureError("deformation tensor is not constant")
        return self.terms[0][2]

    def scaled(self, s):
        """z ↦ A(s z) for real s > 0 (the small-ball rescaling)."""
        if self.kind == "callable":
            f = self.func
            return DeformationTensor.from_callable(lambda z: f(s * np.asarray(z)), self.n, self.radius)
        terms = [(a, b, M * s ** (sum(a) + sum(b))) for a, b, M in self.terms]
        return DeformationTensor(self.n, self.kind, tuple(terms), radius=self.radius)

    def times(self, c):
        """Pointwise multiple c·A."""
        if self.kind == "callable":
            f = self.func
            return DeformationTensor.from_callable(lambda z: c * f(z), self.n, self.radius)
        terms = [(a, b, c * M) for a, b, M in self.terms]
        return DeformationTensor(self.n, self.kind, tuple(terms), radius=self.radius)

    def rotated(self):
        """Tensor of the frame v = i u: A_v(z) = -A(-i z)."""
        if self.kind == "callable":
            f = self.func
            return DeformationTensor.from_callable(lambda z: -f(-1j * np.asarray(z)), self.n, self.radius)
        terms = []
        for a, b, M in self.terms:
            phase = (-1j) ** sum(a) * (1j) ** sum(b)
            terms.append((a, b, -phase * M))
        return DeformationTensor(self.n, self.kind, tuple(terms), radius=self.radius)

    def minus(self, other):
        """Pointwise difference as a callable tensor (used for distance estimates)."""
        return DeformationTensor.from_callable(lambda z: self.at(z) - other.at(z), self.n, self.radius)

    def to_json(self):
        def enc(M):
            return [[[float(v.real), float(v.imag)] for v in row] for row in M]

        if self.kind == "callable":
            raise StructureError("callable tensors cannot be serialized")
        if self.kind == "constant":
            return {"n": self.n, "kind": "constant", "radius": self.radius,
                    "matrix": enc(self.constant_value())}
        return {"n": self.n, "kind": "polynomial", "radius": self.radius,
                "terms": [{"alpha": list(a), "beta": list(b), "matrix": enc(M)} for a, b, M in self.terms]}


def _unit(n, a):
    e = [0] * n
    e[a] = 1
    return tuple(e)


def load_structure(data):
    """Deformation tensor from a structure definition (dict or JSON text).

    ``{"n": 1, "kind": "constant", "matrix": 0.25}`` or
    ``{"n": 1, "kind": "polynomial", "terms": [{"alpha": [1], "beta": [0], "matrix": 0.1}]}``;
    complex entries are written ``[re, im]``.  ``radius`` defaults to 1.
    """
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise StructureError("structure must be an object")
    try:
        n = int(data.get("n", 1))
        kind = data["kind"]
        radius = float(data.get("radius", 1.0))
    except KeyError as exc:
        raise StructureError(f"structure is missing field {exc.args[0]!r}") from None
    if n < 1:
        raise StructureError("n must be positive")
    if radius <= 0:
        raise StructureError("radius must be positive")
    if kind == "constant":
        if "matrix" not in data:
            raise StructureError("constant structure needs 'matrix'")
        return DeformationTensor.constant(_parse_matrix(data["matrix"], n), radius)
    if kind == "polynomial":
        terms = []
        for t in data.get("terms", []):
            try:
                terms.append((t["alpha"], t["beta"], _parse_matrix(t["matrix"], n)))
            except KeyError as exc:
                raise StructureError(f"polynomial term is missing field {exc.args[0]!r}") from None
        if not terms:
            raise StructureError("polynomial structure needs at least one term")
        return DeformationTensor.polynomial(terms, n, radius)
    raise StructureError(f"unknown structure kind {kind!r}")


# ---------------------------------------------------------------------------
# almost complex structures


@dataclass(frozen=True, eq=False)
class AlmostComplexStructure:
    """Real 2n×2n matrix field J(z) with J² = -Id.

    ``kind``: "standard", "deformation" (built from a DeformationTensor),
    "polynomial" (entries polynomial in the real coordinates) or "callable".
    ``smoothness`` records the (k, α) class claimed by the constructor.
    """

    n: int
    kind: str
    deformation: DeformationTensor | None = None
    terms: tuple = ()
    func: object = None
    smoothness: tuple = (math.inf, 1.0)

    @classmethod
    def standard(cls, n=1):
        return cls(n, "standard")

    @classmethod
    def from_deformation(cls, A: DeformationTensor):
        bad = A.bound >= 1.0 if A.kind != "callable" else A.sup_on_samples() >= 1.0
        if bad:
            raise StructureError("deformation tensor must satisfy |A| < 1 pointwise")
        smooth = (math.inf, 1.0) if A.kind != "callable" else (1, 1.0)
        return cls(A.n, "deformation", deformation=A, smoothness=smooth)

    @classmethod
    def polynomial(cls, n, terms):
        """``terms``: iterable of (exponents over the 2n real coordinates, real 2n×2n matrix)."""
        out = tuple((tuple(int(e) for e in exps), np.asarray(M, dtype=float)) for exps, M in terms)
        for exps, M in out:
            if len(exps) != 2 * n or M.shape != (2 * n, 2 * n):
                raise StructureError("polynomial structure term has the wrong shape")
        return cls(n, "polynomial", terms=out)

    @classmethod
    def from_callable(cls, func, n, smoothness=(1, 1.0)):
        return cls(n, "callable", func=func, smoothness=smoothness)

    @classmethod
    def constant(cls, matrix):
        M = np.asarray(matrix, dtype=float)
        n = M.shape[0] // 2
        zero = (0,) * (2 * n)
        return cls.polynomial(n, [(zero, M)])

    # evaluation ----------------------------------------------------------
    def at(self, z):
        """J(z) for z of shape (..., n) (complex); returns (..., 2n, 2n)."""
        z = np.asarray(z, dtype=np.complex128)
        if z.ndim == 0:
            z = z[None]
        batch = z.shape[:-1]
        n2 = 2 * self.n
        if self.kind == "standard":
            return np.broadcast_to(j_standard(self.n), batch + (n2, n2)).copy()
        if self.kind == "deformation":
            Q = antilinear_to_real(self.deformation.at(z))
            S = np.linalg.inv(np.eye(n2) + Q)
            return j_standard(self.n) @ (2.0 * S - np.eye(n2))
        if self.kind == "polynomial":
            return self._poly_eval(to_real(z), (0,) * n2)
        flat = z.reshape(-1, self.n)
        vals = np.array([np.asarray(self.func(p), dtype=float) for p in flat])
        return vals.reshape(batch + (n2, n2))

    __call__ = at

    def _poly_eval(self, x, d):
        batch = x.shape[:-1]
        n2 = 2 * self.n
        out = np.zeros(batch + (n2, n2))
        for exps, M in self.terms:
            c = 1.0
            for e, k in zip(exps, d):
                c *= _falling(e, k)
            if c == 0:
                continue
            mono = np.full(batch, c)
            for i, (e, k) in enumerate(zip(exps, d)):
                if e - k:
                    mono = mono * x[..., i] ** (e - k)
            out += mono[..., None, None] * M
        return out

    def derivative(self, z):
        """∂J/∂(x_a, y_a), shape (2n, ..., 2n, 2n)."""
        z = np.asarray(z, dtype=np.complex128)
        n2 = 2 * self.n
        batch = z.shape[:-1]
        if self.kind == "standard":
            return np.zeros((n2,) + batch + (n2, n2))
        if self.kind == "polynomial":
            x = to_real(z)
            return np.stack([self._poly_eval(x, _unit(n2, a)) for a in range(n2)])
        if self.kind == "deformation":
            A = self.deformation
            Q = antilinear_to_real(A.at(z))
            S = np.linalg.inv(np.eye(n2) + Q)
            dQ = antilinear_to_real(A.real_derivatives(z))
            return -2.0 * j_standard(self.n) @ S @ dQ @ S
        return self._fd_derivative(z)

    def _fd_derivative(self, z, h=FD_STEP):
        out = []
        for a in range(2 * self.n):
            e = np.zeros(2 * self.n)
            e[a] = h
            s = to_complex(e)
            out.append((self.at(z + s) - self.at(z - s)) / (2 * h))
        return np.stack(out)

    def hessian(self, z):
        """Second derivatives, shape (2n, 2n, ..., 2n, 2n)."""
        z = np.asarray(z, dtype=np.complex128)
        n2 = 2 * self.n
        batch = z.shape[:-1]
        if self.kind == "standard":
            return np.zeros((n2, n2) + batch + (n2, n2))
        if self.kind == "polynomial":
            x = to_real(z)
            rows = []
            for a in range(n2):
                rows.append(np.stack([self._poly_eval(x, tuple(np.add(_unit(n2, a), _unit(n2, b))))
                                      for b in range(n2)]))
            return np.stack(rows)
        if self.kind == "deformation":
            A = self.deformation
            Q = antilinear_to_real(A.at(z))
            S = np.linalg.inv(np.eye(n2) + Q)
            dQ = antilinear_to_real(A.real_derivatives(z))
            d2Q = antilinear_to_real(A.real_hessian(z))
            Js = j_standard(self.n)
            out = np.empty((n2, n2) + batch + (n2, n2))
            for a in range(n2):
                for b in range(n2):
                    d2S = S @ dQ[a] @ S @ dQ[b] @ S + S @ dQ[b] @ S @ dQ[a] @ S - S @ d2Q[a, b] @ S
                    out[a, b] = 2.0 * Js @ d2S
            return out
        h = 1e-4
        rows = []
        for b in range(n2):
            e = np.zeros(n2)
            e[b] = h
            s = to_complex(e)
            rows.append((self._fd_derivative(z + s) - self._fd_derivative(z - s)) / (2 * h))
        return np.moveaxis(np.stack(rows), 0, 1)

    def square_defect(self, points):
        J = self.at(points)
        eye = np.eye(2 * self.n)
        return float(np.max(np.abs(J @ J + eye)))

    def check(self, points=None, tol=1e-10):
        pts = sample_ball(self.n, 1.0, 64) if points is None else points
        err = self.square_defect(pts)
        if err > tol:
            raise StructureError(f"J² ≠ -Id (defect {err:.3e})")
        return err


def deformation_from_j(J: AlmostComplexStructure, points=None, radius=1.0, cond_max=1e8):
    """Deformation tensor A with A conj = (J_st + J)^{-1}(J_st - J), checked at ``points``.

    Raises if J_st + J is (nearly) singular at a checked point, or if the
    resulting real map fails to anticommute with J_st (which happens when
    J² ≠ -Id).
    """
    n = J.n
    Js = j_standard(n)

    def q_at(z):
        Jz = J.at(z)
        M = Js + Jz
        if not np.all(np.isfinite(M)) or np.linalg.cond(M) > cond_max:
            raise StructureError("structure too far from standard")
        Q = np.linalg.solve(M, Js - Jz)
        scale = max(1.0, np.max(np.abs(Q)))
        if np.max(np.abs(Q @ Js + Js @ Q)) > 1e-8 * scale:
            raise StructureError("J² ≠ -Id: (J_st + J)^{-1}(J_st - J) is not anti-linear")
        return Q

    def extract(z):
        Q = q_at(np.atleast_1d(z))
        P = 0.5 * (Q[:n, :n] - Q[n:, n:])
        R = 0.5 * (Q[n:, :n] + Q[:n, n:])
        return P + 1j * R

    pts = sample_ball(n, radius, 64) if points is None else np.atleast_2d(points)
    for p in pts:
        q_at(p)
    if J.kind == "standard":
        return DeformationTensor.zero(n, radius)
    return DeformationTensor.from_callable(extract, n, radius)


def j_from_deformation(A: DeformationTensor) -> AlmostComplexStructure:
    """Inverse correspondence J = J_st (I - Q)(I + Q)^{-1}; requires |A| < 1."""
    return AlmostComplexStructure.from_deformation(A)


# ---------------------------------------------------------------------------
# totally real model submanifolds


@dataclass(frozen=True)
class TotallyRealBoundary:
    """Model totally real subspace W = ℝ^n (``model="real"``) or iℝ^n (``"imaginary"``).

    ``arc`` names the boundary arc mapped into W: "upper" (S⁺) or "segment" (β).
    """

    n: int
    model: str = "real"
    arc: str = "segment"

    def __post_init__(self):
        if self.model not in ("real", "imaginary"):
            raise StructureError("model must be 'real' or 'imaginary'")

    def tangent_basis(self):
        n = self.n
        eye = np.eye(2 * n)
        return eye[:, :n] if self.model == "real" else eye[:, n:]

    def contains(self, p, tol=1e-12):
        p = np.asarray(p, dtype=np.complex128)
        part = p.imag if self.model == "real" else p.real
        return bool(np.max(np.abs(part), initial=0.0) <= tol)


def is_totally_real(W: TotallyRealBoundary, J, p, tol=1e-8):
    """Rank test: [basis(T_pW) | J(p) basis(T_pW)] has smallest singular value > tol."""
    p = np.atleast_1d(np.asarray(p, dtype=np.complex128))
    if not W.contains(p):
        raise StructureError("point is not on the totally real model")
    B = W.tangent_basis()
    Jp = J.at(p) if hasattr(J, "at") else np.asarray(J)
    M = np.hstack([B, Jp @ B])
    return bool(np.linalg.svd(M, compute_uv=False)[-1] > tol)


# ---------------------------------------------------------------------------
# coordinate normalization along W = ℝ^n


@dataclass(frozen=True, eq=False)
class CoordinateMap:
    """φ(x, y) = (x, 0) + Σ_j y_j J(x, 0) e_j, first order in y.

    φ fixes ℝ^n pointwise and sends ∂/∂y_j at (x, 0) to J(x, 0) ∂/∂x_j, so the
    pushed-forward structure dφ^{-1} J(φ) dφ is J_st along y = 0.
    """

    J: AlmostComplexStructure

    @property
    def n(self):
        return self.J.n

    def __call__(self, point):
        """Map real coordinates (x, y) of shape (..., 2n)."""
        x = np.asarray(point, dtype=float)
        n = self.n
        base = np.concatenate([x[..., :n], np.zeros_like(x[..., :n])], axis=-1)
        Jb = self.J.at(to_complex(base))
        return base + np.einsum("...ij,...j->...i", Jb[..., :, :n], x[..., n:])

    def jacobian(self, point):
        x = np.asarray(point, dtype=float)
        n = self.n
        base = np.concatenate([x[..., :n], np.zeros_like(x[..., :n])], axis=-1)
        zb = to_complex(base)
        Jb = self.J.at(zb)
        dJ = self.J.derivative(zb)
        jac = np.zeros(x.shape[:-1] + (2 * n, 2 * n))
        for i in range(n):
            col = np.zeros(2 * n)
            col[i] = 1.0
            jac[..., :, i] = col + np.einsum("...kj,...j->...k", dJ[i][..., :, :n], x[..., n:])
        jac[..., :, n:] = Jb[..., :, :n]
        return jac

    def pushforward(self, point):
        """Structure in the new coordinates at ``point``: dφ^{-1} J(φ(point)) dφ."""
        x = np.asarray(point, dtype=float)
        D = self.jacobian(x)
        Jphi = self.J.at(to_complex(self(x)))
        return np.linalg.solve(D, Jphi @ D)


def normalize_coordinates(J: AlmostComplexStructure, samples=None, tol=1e-8):
    """Coordinates in which J restricted to ℝ^n is J_st; raises if ℝ^n is not totally real."""
    W = TotallyRealBoundary(J.n, "real")
    if samples is None:
        rng = np.random.default_rng(7)
        samples = rng.uniform(-0.5, 0.5, size=(16, J.n)) + 0j
        samples[0] = 0.0
    for p in np.atleast_2d(samples):
        if not is_totally_real(W, J, p, tol):
            raise StructureError("structure is not totally real along ℝ^n")
    return CoordinateMap(J)


# ---------------------------------------------------------------------------
# structures over the disc (pulled back along a map)


@dataclass(frozen=True, eq=False)
class StructureField:
    """Structure on the trivial bundle Δ × ℝ^{2n}: J(ζ) = J_st + E(ζ).

    E acts on ℂ^n as E v = P(ζ) v + Q(ζ) conj(v), with P and Q stored as
    polynomial matrix fields of shape (n, n, K, L) in ζ, ζ̄.
    """

    n: int
    P: np.ndarray
    Q: np.ndarray
    info: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, J):
        J = np.asarray(J, dtype=float)
        n = J.shape[0] // 2
        P, Q = real_to_pair(J - j_standard(n))
        return cls(n, P[:, :, None, None], Q[:, :, None, None])

    @classmethod
    def standard(cls, n=1):
        z = np.zeros((n, n, 1, 1), dtype=np.complex128)
        return cls(n, z, z.copy())

    @classmethod
    def from_values(cls, grid, values, degree=None):
        """Fit a field given as real matrices at the grid nodes (shape (N, 2n, 2n))."""
        from .grid import fit_spectral

        values = np.asarray(values, dtype=float)
        n = values.shape[-1] // 2
        P, Q = real_to_pair(values - j_standard(n))
        fits = []
        res = 0.0
        for M in (P, Q):
            flat = np.moveaxis(M.reshape(grid.size, n * n), 0, 1)
            poly, r = fit_spectral(grid, flat, degree=degree)
            res = max(res, r)
            K, L = poly.shape
            fits.append(poly.coeffs.reshape(n, n, K, L))
        return cls(n, fits[0], fits[1], {"projection_residual": res})

    @classmethod
    def from_callable(cls, func, n, grid, degree=None):
        """``func(ζ array)`` -> real matrices of shape (N, 2n, 2n)."""
        return cls.from_values(grid, func(grid.nodes), degree)

    @classmethod
    def pullback(cls, J: AlmostComplexStructure, u, grid, degree=None):
        """J ∘ u for a map u given as a PolarizedPolynomial with n components."""
        return cls.from_values(grid, J.at(u(grid.nodes).T), degree)

    def _eval(self, field_, zeta):
        zeta = np.asarray(zeta, dtype=np.complex128)
        K, L = field_.shape[2:]
        poly = PolarizedPolynomial(field_.reshape(self.n * self.n, K, L))
        vals = poly(zeta)
        return np.moveaxis(vals.reshape((self.n, self.n) + zeta.shape), (0, 1), (-2, -1))

    def at(self, zeta):
        """Real 2n×2n matrices J(ζ), shape zeta.shape + (2n, 2n)."""
        P = self._eval(self.P, zeta)
        Q = self._eval(self.Q, zeta)
        return j_standard(self.n) + linear_to_real(P) + antilinear_to_real(Q)

    def deviation(self, zeta):
        """Largest operator norm of J(ζ) - J_st over the given points."""
        E = self.at(zeta) - j_standard(self.n)
        return float(np.max(np.linalg.norm(E, 2, axis=(-2, -1))))


def shear_structure(f_terms):
    """n = 1 structure (I + f E₁₂) J_st (I - f E₁₂) = [[f, -1 - f²], [1, -f]].

    ``f_terms`` maps exponent pairs (i, j) of x^i y^j to real coefficients.
    J² = -Id holds identically for every polynomial f.
    """
    f = {tuple(k): float(v) for k, v in f_terms.items()}
    terms = {}

    def add(exps, M):
        terms[exps] = terms.get(exps, np.zeros((2, 2))) + M

    add((0, 0), j_standard(1))
    for e, c in f.items():
        add(e, c * np.array([[1.0, 0.0], [0.0, -1.0]]))
    for (e1, c1), (e2, c2) in itertools.product(f.items(), repeat=2):
        add((e1[0] + e2[0], e1[1] + e2[1]), c1 * c2 * np.array([[0.0, -1.0], [0.0, 0.0]]))
    return AlmostComplexStructure.polynomial(1, list(terms.items()))
