"""Lifting structures, maps and totally real subspaces to the tangent bundle.

For a structure J on ℂ^n the lifted structure on ℂ^n × ℂ^n at (z, t) is, in
the block order (z, t) of real coordinates,

    J^c(z, t) = [[J(z), 0], [t^a ∂_a J(z), J(z)]],

with t^a the real coordinates of t.  If u is J-holomorphic then
u^c = (u, ∂u/∂ξ) is J^c-holomorphic: the second block of the lifted equation
is the ξ-derivative of the first.  Lifted objects are returned in the
package's standard real layout (all real parts, then all imaginary parts),
so they can be lifted again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acs import StructureError, TotallyRealBoundary, to_real
from .grid import GridFunction
from .polynomial import PolarizedPolynomial

LIFT_FLOOR = 1e-13


def _perm(n):
    """Index array p with block_vector = standard_vector[p] for ℂ^n × ℂ^n.

    Standard order: (Re z, Re t, Im z, Im t); block order: (Re z, Im z, Re t, Im t).
    """
    rz = np.arange(n)
    rt = n + np.arange(n)
    iz = 2 * n + np.arange(n)
    it = 3 * n + np.arange(n)
    return np.concatenate([rz, iz, rt, it])


@dataclass(frozen=True, eq=False)
class LiftedStructure:
    """Lift J^c of a structure ``base`` (anything with ``at``, ``derivative`` and ``n``)."""

    base: object

    @property
    def n(self):
        return 2 * self.base.n

    @property
    def level(self):
        return 1 + getattr(self.base, "level", 0)

    def _split(self, w):
        w = np.asarray(w, dtype=np.complex128)
        m = self.base.n
        return w[..., :m], w[..., m:]

    def block(self, w):
        """J^c in the block order (Re z, Im z, Re t, Im t), shape (..., 4m, 4m)."""
        z, t = self._split(w)
        J = self.base.at(z)
        dJ = self.base.derivative(z)
        tr = to_real(t)
        m2 = J.shape[-1]
        lower = np.einsum("...a,a...ij->...ij", tr, dJ)
        out = np.zeros(J.shape[:-2] + (2 * m2, 2 * m2))
        out[..., :m2, :m2] = J
        out[..., m2:, m2:] = J
        out[..., m2:, :m2] = lower
        return out

    def at(self, w):
        """J^c at w = (z, t) ∈ ℂ^{2m} in the standard layout."""
        p = _perm(self.base.n)
        B = self.block(w)
        out = np.empty_like(B)
        # out[i, j] = B[pinv(i), pinv(j)] where standard index s has block index q(s)
        q = np.empty_like(p)
        q[p] = np.arange(p.size)
        out[...] = B[..., q[:, None], q[None, :]]
        return out

    __call__ = at

    def derivative(self, w):
        """Real derivatives of J^c (standard layout), shape (4m, ..., 4m, 4m)."""
        if not hasattr(self.base, "hessian"):
            raise StructureError("lifting twice needs second derivatives of the base structure")
        z, t = self._split(w)
        m = self.base.n
        m2 = 2 * m
        dJ = self.base.derivative(z)
        H = self.base.hessian(z)
        tr = to_real(t)
        batch = z.shape[:-1]
        blocks = np.zeros((2 * m2,) + batch + (2 * m2, 2 * m2))
        for b in range(m2):
            blocks[b, ..., :m2, :m2] = dJ[b]
            blocks[b, ..., m2:, m2:] = dJ[b]
            blocks[b, ..., m2:, :m2] = np.einsum("...a,a...ij->...ij", tr, H[:, b])
            blocks[m2 + b, ..., m2:, :m2] = dJ[b]
        p = _perm(m)
        q = np.empty_like(p)
        q[p] = np.arange(p.size)
        # the derivative index runs over block coordinates; reorder it too
        out = blocks[q]
        return out[..., q[:, None], q[None, :]]

    def square_defect(self, points):
        Jc = self.at(points)
        return float(np.max(np.abs(Jc @ Jc + np.eye(Jc.shape[-1]))))

    def block_degrees(self):
        """Polynomial degrees in z of the diagonal and lower-left blocks (polynomial base only)."""
        base = self.base
        if getattr(base, "kind", None) != "polynomial":
            raise StructureError("block degrees are defined for polynomial structures")
        d = max(sum(e) for e, M in base.terms if np.any(M))
        dd = max((sum(e) - 1 for e, M in base.terms if np.any(M) and sum(e) > 0), default=-1)
        return d, dd


def lift_structure(J) -> LiftedStructure:
    """The lifted structure J^c; J must carry first derivatives."""
    k = getattr(J, "smoothness", (1, 0.0))[0]
    if k < 1:
        raise StructureError("structure representation is not differentiable")
    if not hasattr(J, "derivative"):
        raise StructureError("structure representation is not differentiable")
    return LiftedStructure(J)


@dataclass(frozen=True, eq=False)
class LiftedMap:
    """u^c = (u, ∂u/∂ξ) as a GridFunction with 2n components."""

    map: GridFunction

    @property
    def n(self):
        return self.map.n

    @property
    def base(self):
        return self.map.spectral.coeffs[: self.n // 2]

    @property
    def spectral(self):
        return self.map.spectral


def lift_map(u: GridFunction) -> LiftedMap:
    poly, _ = u.project()
    lifted = PolarizedPolynomial.stack([poly, poly.dxi()])
    return LiftedMap(GridFunction.from_spectral(u.grid, lifted))


def holomorphy_residual(u, J, zeta=None):
    """max over nodes of |u_η - J(u) u_ξ| (real layout), exact spectral derivatives."""
    if isinstance(u, LiftedMap):
        u = u.map
    poly, _ = u.project()
    pts = u.grid.nodes if zeta is None else zeta
    vals = poly(pts).T
    ux = poly.dxi()(pts).T
    uy = poly.deta()(pts).T
    Jm = J.at(vals)
    r = to_real(uy) - np.einsum("pij,pj->pi", Jm, to_real(ux))
    return float(np.max(np.linalg.norm(r, axis=1)))


def check_lift(u: GridFunction, J, levels=1, factor=10.0, floor=LIFT_FLOOR):
    """Residuals of u and its lifts; PASS iff each lifted residual is within
    ``factor`` (per level) of max(base residual, floor)."""
    base = holomorphy_residual(u, J)
    out = {"base_residual": base, "levels": []}
    uc, Jc = u, J
    ok = True
    for k in range(levels):
        uc = lift_map(uc if isinstance(uc, GridFunction) else uc.map)
        Jc = lift_structure(Jc)
        r = holomorphy_residual(uc, Jc)
        bound = factor ** (k + 1) * max(base, floor)
        out["levels"].append({"level": k + 1, "residual": r, "bound": bound, "pass": r <= bound})
        ok = ok and r <= bound
    out["pass"] = ok
    return out


def lift_totally_real(W: TotallyRealBoundary) -> TotallyRealBoundary:
    """TW for the model subspaces: ℝ^n ↦ ℝ^{2n} and iℝ^n ↦ iℝ^{2n}."""
    return TotallyRealBoundary(2 * W.n, W.model, W.arc)


def sample_tw(W: TotallyRealBoundary, count=20, seed=0, radius=0.5):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-radius, radius, size=(count, W.n))
    return x + 0j if W.model == "real" else 1j * x
