"""Nonlinear Riemann-Hilbert problem for J-holomorphic discs.

Find u: Δ → ℂ^n with

    u_ζ̄ - A(u) conj(u_ζ) = 0 in Δ,   Re u|_S = φ,   Im u(0) = a.

Everything is computed on polynomial coefficients (see ``polynomial``).  The
linear problem u_ζ̄ = h with the same side conditions is solved exactly by

    u = T - i Im T(0) + i a + T^SW(φ - Re T|_S),   T = T^CG h,

and both nonlinear methods call it: Picard freezes the right-hand side,
Newton solves the full linearization with GMRES, preconditioned by the linear
solve (the J_st-linearization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .acs import SOLVER_GATE, DeformationTensor, StructureField, j_standard
from .grid import BoundaryFunction, GridFunction, default_grid, trace_of
from .polynomial import PolarizedPolynomial, matvec, mul
from .transforms import cauchy_green_poly, schwarz_poly

DEFAULT_CAP = 32


class SolverError(RuntimeError):
    """Raised when an iteration diverges or runs out of steps; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# problem and report


@dataclass(frozen=True, eq=False)
class RHProblem:
    """Boundary-value problem data.

    ``model="real"``: Re u|_S = φ and Im u(0) = a (W = ℝ^n on S in the frame
    where the boundary condition reads Re u = φ).  ``model="imaginary"``:
    Im u|_S = φ and Re u(0) = a; it is reduced to the first form through the
    rotation v = i u.
    """

    A: DeformationTensor
    phi: BoundaryFunction
    a: np.ndarray
    u0: PolarizedPolynomial | None = None
    model: str = "real"

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        object.__setattr__(self, "a", a)
        if not self.phi.is_real():
            raise ValueError("boundary data φ must be real")
        if self.phi.n != self.A.n or a.shape != (self.A.n,):
            raise ValueError("boundary data, anchor and structure dimensions differ")
        if self.model not in ("real", "imaginary"):
            raise ValueError("model must be 'real' or 'imaginary'")
        if not self.A.bound < 1.0:
            raise ValueError("deformation tensor must satisfy |A| < 1")

    @property
    def n(self):
        return self.A.n


@dataclass(eq=False)
class SolverReport:
    solution: GridFunction
    residual_history: list
    boundary_error: float
    anchor_error: float
    iterations: int
    method: str
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def residual(self):
        return self.residual_history[-1]

    def superlinear_exponent(self, floor=1e-14, window=3):
        """Smallest log r_{k+1} / log r_k over the last ``window`` steps.

        Residuals below ``floor`` are clamped to it; steps starting at the
        floor are skipped.  Values >= p mean r_{k+1} <= r_k^p on those steps.
        """
        r = [max(float(x), floor) for x in self.residual_history]
        exps = []
        for k in range(len(r) - 1):
            if r[k] <= floor or r[k] >= 1.0:
                continue
            exps.append(math.log(r[k + 1]) / math.log(r[k]))
        if not exps:
            return float("nan")
        return float(min(exps[-window:]))

    def summary(self):
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
            "boundary_error": self.boundary_error,
            "anchor_error": self.anchor_error,
            "residual_history": list(self.residual_history),
        }


# ---------------------------------------------------------------------------
# linear problem


def linear_rh_poly(h: PolarizedPolynomial, psi: BoundaryFunction | None, a) -> PolarizedPolynomial:
    """Exact solution of u_ζ̄ = h, Re u|_S = ψ, Im u(0) = a on coefficients."""
    n = h.n
    T = cauchy_green_poly(h)
    shift = np.zeros((n, 1, 1), dtype=np.complex128)
    shift[:, 0, 0] = 1j * (np.asarray(a, dtype=float) - T.coeffs[:, 0, 0].imag)
    re_trace = trace_of(T).real
    rhs = re_trace * -1.0 if psi is None else psi - re_trace
    return T + PolarizedPolynomial(shift) + schwarz_poly(rhs, check=False)


def solve_linear_rh(h: GridFunction, psi: BoundaryFunction, a, degree=None) -> GridFunction:
    """Solve u_ζ̄ = h, Re u|_S = ψ, Im u(0) = a on the grid of ``h``."""
    if not psi.is_real():
        raise ValueError("boundary data ψ must be real")
    poly, res = h.project(degree)
    info = {} if h.spectral is not None else {"projection_residual": res}
    return GridFunction.from_spectral(h.grid, linear_rh_poly(poly, psi, a), info)


# ---------------------------------------------------------------------------
# residuals


def pointwise_residual(u: PolarizedPolynomial, A: DeformationTensor, zeta):
    """max over ``zeta`` of |u_ζ̄ - A(u) conj(u_ζ)| with A evaluated pointwise."""
    vals = u(zeta).T
    du = u.d()(zeta).T
    dbu = u.dbar()(zeta).T
    if A.is_constant():
        Au = A.constant_value()[None] * np.ones((len(zeta), 1, 1))
    else:
        Au = A.at(vals)
    r = dbu - np.einsum("pij,pj->pi", Au, np.conj(du))
    return float(np.max(np.linalg.norm(r, axis=1)))


def boundary_errors(u: PolarizedPolynomial, phi: BoundaryFunction, a, grid):
    theta = grid.angles
    vals = u(grid.boundary_nodes)
    target = phi(theta).real
    berr = float(np.max(np.abs(vals.real - target)))
    aerr = float(np.max(np.abs(u.coeffs[:, 0, 0].imag - np.asarray(a))))
    return berr, aerr


def _nonlinear_term(u, A, cap):
    """A(u) conj(u_ζ) truncated to shape (cap+1, cap)."""
    C = cap + 1
    field_ = A.compose(u, cap)
    return matvec(field_, u.d().conj(), cap).resized(C, C - 1)


def phi_J(u: GridFunction, A: DeformationTensor, cap=DEFAULT_CAP) -> GridFunction:
    """u - T^CG(A(u) conj(u_ζ)); holomorphic exactly when u is J-holomorphic."""
    poly, _ = u.project()
    h = matvec(A.compose(poly, cap), poly.d().conj(), cap)
    return GridFunction.from_spectral(u.grid, poly - cauchy_green_poly(h))


# ---------------------------------------------------------------------------
# nonlinear solver


def _rotate_problem(p: RHProblem):
    # v = i u: Re v = -Im u and Im v = Re u
    return RHProblem(p.A.rotated(), p.phi * -1.0, p.a,
                     None if p.u0 is None else p.u0 * 1j, "real")


def solve_rh(p: RHProblem, method="newton", tol=1e-9, max_iter=50, cap=DEFAULT_CAP,
             grid=None, divergence_window=3, gate=SOLVER_GATE, diagnostics=False):
    """Solve the nonlinear problem by Newton (default) or Picard iteration.

    Raises ``SolverError`` (with the partial report attached) on divergence,
    i.e. the residual growing ``divergence_window`` steps in a row, or when
    ``max_iter`` steps do not reach ``tol``.
    """
    if p.A.bound > gate:
        raise ValueError(f"|A| bound {p.A.bound:.3g} is outside the admissibility gate {gate}")
    if method not in ("newton", "picard"):
        raise ValueError("method must be 'newton' or 'picard'")
    if p.model == "imaginary":
        rep = solve_rh(_rotate_problem(p), method, tol, max_iter, cap, grid,
                       divergence_window, gate, diagnostics)
        sol = rep.solution
        u = sol.spectral * -1j
        rep.solution = GridFunction.from_spectral(sol.grid, u, sol.info)
        return rep

    grid = grid or default_grid()
    C = cap + 1
    if p.phi.max_mode > cap:
        raise ValueError("boundary data has more Fourier modes than the degree cap")
    u = linear_rh_poly(PolarizedPolynomial.zeros(p.n), p.phi, p.a) if p.u0 is None else p.u0
    u = u.resized(C, C)
    nodes = grid.nodes

    history = [pointwise_residual(u, p.A, nodes)]
    increases = 0
    step_fn = _newton_step if method == "newton" else _picard_step
    it = 0
    gmres_iters = []

    def report(converged):
        berr, aerr = boundary_errors(u, p.phi, p.a, grid)
        rep = SolverReport(GridFunction.from_spectral(grid, u), history, berr, aerr, it,
                           method, converged)
        if gmres_iters:
            rep.diagnostics["gmres_iterations"] = list(gmres_iters)
        return rep

    while True:
        berr, aerr = boundary_errors(u, p.phi, p.a, grid)
        if history[-1] <= tol and berr <= tol and aerr <= tol:
            break
        if it >= max_iter:
            raise SolverError(f"no convergence in {max_iter} iterations "
                              f"(residual {history[-1]:.3e})", report(False))
        u_new, extra = step_fn(u, p, cap)
        if extra is not None:
            gmres_iters.append(extra)
        it += 1
        r = pointwise_residual(u_new, p.A, nodes)
        u = u_new
        increases = increases + 1 if r > history[-1] else 0
        history.append(r)
        if increases >= divergence_window or not np.isfinite(r):
            raise SolverError(f"iteration diverged: residual grew {increases} steps in a row "
                              f"(now {r:.3e})", report(False))
        # a converged Newton run sits at the truncation floor; stop if stalled there
        if method == "newton" and it >= 2 and r <= tol and abs(history[-2] - r) <= 1e-3 * tol:
            break
        if method == "newton" and it >= 3 and r > tol and r > 0.9 * history[-3]:
            raise SolverError(f"Newton stalled at residual {r:.3e}; the degree cap {cap} "
                              "is likely too small for this problem", report(False))

    rep = report(True)
    if diagnostics:
        from .diagnostics import RegularityIndex, holder_norm, sobolev_norm

        rep.diagnostics["holder_C1_0.5"] = holder_norm(rep.solution, RegularityIndex(1, 0.5), fast=True).value
        rep.diagnostics["sobolev_L1_4"] = sobolev_norm(rep.solution, RegularityIndex(1, 0.5, 4.0)).value
    return rep


def _picard_step(u, p, cap):
    h = _nonlinear_term(u, p.A, cap)
    return linear_rh_poly(h, p.phi, p.a).resized(cap + 1, cap + 1), None


def _flatten(poly, shape):
    c = poly.resized(*shape).coeffs
    return np.concatenate([c.real.ravel(), c.imag.ravel()])


def _unflatten(x, n, shape):
    m = x.size // 2
    c = (x[:m] + 1j * x[m:]).reshape((n,) + shape)
    return PolarizedPolynomial(c)


def _newton_step(u, p, cap):
    """One Newton step: solve the full real-linear linearization by GMRES.

    The correction δ solves δ = P(δ) + c, where P(δ) is the linear solve of
    A(u) conj(δ_ζ) + G δ + G' conj(δ) with zero side data and c is the linear
    solve of the current residual and boundary defects.
    """
    n, C = p.n, cap + 1
    shape = (C, C)
    A = p.A
    Au = A.compose(u, cap)
    du_bar = u.d().conj()
    R = (u.dbar() - matvec(Au, du_bar, cap)).resized(C, C - 1)
    psi_r = p.phi - trace_of(u).real
    a_r = p.a - u.coeffs[:, 0, 0].imag
    c = linear_rh_poly(-R, psi_r, a_r)

    w, wb = [], []
    if not A.is_constant():
        for k in range(n):
            e = [0] * n
            e[k] = 1
            w.append(matvec(A.compose(u, cap, da=e), du_bar, cap))
            wb.append(matvec(A.compose(u, cap, db=e), du_bar, cap))

    zero_anchor = np.zeros(n)

    def apply_P(delta):
        g = matvec(Au, delta.d().conj(), cap)
        for k in range(len(w)):
            dk = delta.component(k)
            g = g + mul(w[k], dk, cap) + mul(wb[k], dk.conj(), cap)
        return linear_rh_poly(g.resized(C, C - 1), None, zero_anchor)

    def mv(x):
        d = _unflatten(x, n, shape)
        return x - _flatten(apply_P(d), shape)

    N = 2 * n * C * C
    op = LinearOperator((N, N), matvec=mv, dtype=float)
    b = _flatten(c, shape)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return u, 0
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = gmres(op, b, rtol=1e-14, atol=0.0, restart=60, maxiter=20,
                    callback=cb, callback_type="pr_norm")
    delta = _unflatten(x, n, shape)
    return (u + delta).resized(C, C), count[0]


# ---------------------------------------------------------------------------
# ∂̄_J inverse by Neumann series


@dataclass(eq=False)
class NeumannResult:
    solution: GridFunction
    terms: int
    contraction: float
    predicted_terms: int
    residual: float
    term_norms: list


def dbar_j(field_: StructureField, w: PolarizedPolynomial, cap) -> PolarizedPolynomial:
    """½(w_ξ + J(ζ) w_η) = w_ζ̄ + ½ E(ζ) w_η with E = J - J_st."""
    return w.dbar() + _half_E(field_, w.deta(), cap)


def _half_E(field_, v, cap):
    out = matvec(field_.P, v, cap) + matvec(field_.Q, v.conj(), cap)
    return out * 0.5


def _sup(poly, grid):
    return float(np.max(np.linalg.norm(poly(grid.nodes), axis=0), initial=0.0))


def neumann_inverse(field_: StructureField, f: GridFunction, tol=1e-10, max_terms=200,
                    cap=DEFAULT_CAP) -> NeumannResult:
    """g with ∂̄_J T^CG g = f, from g = Σ_k (-M)^k f, M g = ½ E (T^CG g)_η.

    The ratio of the first two terms gates the series (>= 1 raises), as do
    three growing terms in a row.  The series stops when a term drops below
    ``tol`` (sup over the grid).  The reported contraction factor is the
    largest ratio of consecutive terms, and ``predicted_terms`` is the count
    it implies; the residual is the forward defect of the result.
    """
    grid = f.grid
    fp, _ = f.project()
    if fp.n != field_.n:
        raise ValueError("structure and data dimensions differ")

    def M(g):
        return _half_E(field_, cauchy_green_poly(g).deta(), cap).truncated(cap)

    t = fp.truncated(cap)
    norms = [_sup(t, grid)]
    total = t
    if norms[0] == 0.0 or not (np.any(field_.P) or np.any(field_.Q)):
        return NeumannResult(GridFunction.from_spectral(grid, total), 0, 0.0, 0, 0.0, norms)
    q = None
    grow = 0
    k = 0
    while norms[-1] > tol:
        if k >= max_terms:
            raise RuntimeError(f"Neumann series did not reach {tol:.1e} in {max_terms} terms")
        t = -M(t)
        k += 1
        norms.append(_sup(t, grid))
        if q is None:
            q = norms[1] / norms[0]
            if q >= 1.0:
                raise ValueError(f"structure not close enough to standard (contraction factor {q:.3g})")
        grow = grow + 1 if norms[-1] > norms[-2] else 0
        if grow >= 3:
            raise ValueError("structure not close enough to standard (series terms grow)")
        total = total + t
    ratios = [b / a for a, b in zip(norms[:-1], norms[1:]) if a > 0.0]
    q = max(ratios, default=0.0)
    if q == 0.0 or q >= 1.0:
        predicted = k
    else:
        predicted = max(0, int(math.ceil(math.log(tol / norms[0]) / math.log(q))))
    forward = dbar_j(field_, cauchy_green_poly(total), cap) - fp
    res = _sup(forward, grid)
    return NeumannResult(GridFunction.from_spectral(grid, total), k, q, predicted, res, norms)


# ---------------------------------------------------------------------------
# empirical constant in |du| <= C |∂̄_J u|


def bump_samples(grid, count=6, order=3, seed=0):
    """Test maps (1 - ζζ̄)^order · p(ζ, ζ̄) with small random polynomials p; deterministic."""
    rng = np.random.default_rng(seed)
    base = PolarizedPolynomial.from_terms({(0, 0): 1.0, (1, 1): -1.0})
    bump = PolarizedPolynomial.constant([1.0])
    for _ in range(order):
        bump = mul(bump, base)
    out = []
    for _ in range(count):
        c = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        out.append(GridFunction.from_spectral(grid, mul(bump, PolarizedPolynomial(c))))
    return out


def estimate_gcz_constant(field_: StructureField, samples, norm="p", p=4.0, alpha=0.5,
                          cap=DEFAULT_CAP):
    """max over samples of ‖du‖ / ‖∂̄_J u‖ in L^p (``norm="p"``) or C^{0,α} (``"alpha"``).

    du is the pair (u_ξ, u_η).  Samples with ∂̄_J u = 0 are skipped; an empty
    sample list raises.  The value is an empirical lower bound for the
    constant, not the constant itself.
    """
    from .diagnostics import RegularityIndex, holder_norm, sobolev_norm

    samples = list(samples)
    if not samples:
        raise ValueError("no sample functions given")
    best = None
    for u in samples:
        poly, _ = u.project()
        du = PolarizedPolynomial.stack([poly.dxi(), poly.deta()])
        dj = dbar_j(field_, poly, cap)
        if dj.max_abs_coeff() == 0.0:
            continue
        gdu = GridFunction.from_spectral(u.grid, du)
        gdj = GridFunction.from_spectral(u.grid, dj)
        if norm == "p":
            idx = RegularityIndex(0, 0.5, p)
            num, den = sobolev_norm(gdu, idx).value, sobolev_norm(gdj, idx).value
        else:
            idx = RegularityIndex(0, alpha)
            num, den = holder_norm(gdu, idx).value, holder_norm(gdj, idx).value
        if den == 0.0:
            continue
        ratio = num / den
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise ValueError("every sample satisfies ∂̄_J u = 0")
    return float(best)


def j_st_field(n=1):
    return StructureField.constant(j_standard(n))
