"""Norm estimators and the convergence-rate experiment.

Derivatives of order j are the stacked complex derivatives ∂^a ∂̄^b f with
a + b = j, measured in the Euclidean norm.  The Hölder norm used here is

    ‖f‖_{C^{k,α}} = Σ_{j<=k} (sup |D^j f| + [D^j f]_α),

i.e. it keeps the seminorms of the lower orders so that it is monotone in k.
Seminorms are brute-force maxima over all node pairs.  Sobolev norms use a
Gauss-Legendre (radial, weight r) × trapezoid (angular) rule on the spectral
form.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .acs import SOLVER_GATE, DeformationTensor, sample_ball
from .grid import BoundaryFunction, GridFunction, default_grid, make_disc_grid
from .polynomial import PolarizedPolynomial
from .rh_solver import RHProblem, solve_rh
from .transforms import poisson


@dataclass(frozen=True)
class RegularityIndex:
    k: int = 0
    alpha: float = 0.5
    p: float = 2.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError("k must be a non-negative integer")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("α must lie in (0, 1)")
        if not self.p > 1.0:
            raise ValueError("p must exceed 1")


@dataclass
class NormReport:
    norm: str
    value: float
    resolution: tuple
    discretization_error: float
    parts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "norm": self.norm,
            "value": self.value,
            "resolution": list(self.resolution),
            "discretization_error": self.discretization_error,
            "parts": dict(self.parts),
        }


def derivative_stack(poly: PolarizedPolynomial, j):
    """All ∂^a ∂̄^b poly with a + b = j, stacked as components."""
    parts = []
    for a in range(j + 1):
        q = poly
        for _ in range(a):
            q = q.d()
        for _ in range(j - a):
            q = q.dbar()
        parts.append(q)
    return PolarizedPolynomial.stack(parts)


def _as_real(vals):
    # (m, N) complex -> (N, 2m) real
    return np.concatenate([vals.real, vals.imag], axis=0).T


def holder_seminorm(pts, vals, alpha, fast=False, pairs=200_000, seed=0):
    """max |v(x) - v(y)| / |x - y|^α over node pairs (all pairs unless ``fast``)."""
    P = np.column_stack([pts.real, pts.imag])
    V = _as_real(np.atleast_2d(vals))
    N = len(P)
    if N < 2:
        return 0.0
    if not fast or N * (N - 1) // 2 <= pairs:
        q, _, _ = kernels.holder_max(P, V, alpha)
        return float(q)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, N, size=pairs)
    j = rng.integers(0, N, size=pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    d = np.linalg.norm(P[i] - P[j], axis=1)
    num = np.linalg.norm(V[i] - V[j], axis=1)
    ok = d > 0
    return float(np.max(num[ok] / d[ok] ** alpha, initial=0.0))


def _holder_parts(poly, nodes, k, alpha, fast):
    parts = {}
    total = 0.0
    for j in range(k + 1):
        vals = derivative_stack(poly, j)(nodes)
        sup = float(np.max(np.linalg.norm(vals, axis=0), initial=0.0))
        semi = holder_seminorm(nodes, vals, alpha, fast=fast)
        parts[f"sup_{j}"] = sup
        parts[f"seminorm_{j}"] = semi
        total += sup + semi
    return total, parts


def _subgrid(grid):
    nr, na = grid.n_radial // 2, grid.n_angular // 2
    if nr < 4 or na < 8:
        return None
    return make_disc_grid(nr, na)


def holder_norm(f: GridFunction, idx: RegularityIndex, fast=False, mask=None, nodes=None):
    """C^{k,α} norm over the grid nodes (or ``nodes``/``mask`` subsets).

    The discretization error is the change against the half-resolution
    subgrid, whose nodes are a subset of the full grid.
    """
    k, alpha = idx.k, idx.alpha
    if f.spectral is None and k == 0:
        pts = f.grid.nodes if mask is None else f.grid.nodes[mask]
        vals = f.values if mask is None else f.values[:, mask]
        sup = float(np.max(np.linalg.norm(vals, axis=0), initial=0.0))
        semi = holder_seminorm(pts, vals, alpha, fast=fast)
        return NormReport(f"C^{k},{alpha}", sup + semi, (f.grid.n_radial, f.grid.n_angular),
                          float("nan"), {"sup_0": sup, "seminorm_0": semi})
    if f.spectral is None and k > f.grid.max_fit_degree():
        raise ValueError(f"k = {k} exceeds the derivatives available on this grid")
    poly, res = f.project()
    if nodes is None:
        pts = f.grid.nodes if mask is None else f.grid.nodes[mask]
    else:
        pts = np.asarray(nodes, dtype=np.complex128)
    value, parts = _holder_parts(poly, pts, k, alpha, fast)
    err = float("nan")
    sub = _subgrid(f.grid) if (nodes is None and mask is None) else None
    if sub is not None:
        coarse, _ = _holder_parts(poly, sub.nodes, k, alpha, fast)
        err = abs(value - coarse)
    if f.spectral is None:
        parts["projection_residual"] = res
    return NormReport(f"C^{k},{alpha}", value, (f.grid.n_radial, f.grid.n_angular), err, parts)


def _quadrature(n_r, n_t):
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w * r
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    pts = (r[:, None] * np.exp(1j * t)[None, :]).ravel()
    wts = (wr[:, None] * np.full(n_t, 2.0 * np.pi / n_t)[None, :]).ravel()
    return pts, wts


def _sobolev_value(poly, k, p, n_r, n_t):
    pts, wts = _quadrature(n_r, n_t)
    parts = {}
    total = 0.0
    for j in range(k + 1):
        vals = derivative_stack(poly, j)(pts)
        integ = float(np.sum(wts * np.linalg.norm(vals, axis=0) ** p))
        parts[f"order_{j}"] = integ ** (1.0 / p)
        total += integ
    return total ** (1.0 / p), parts


def sobolev_norm(f: GridFunction, idx: RegularityIndex, n_r=None, n_t=None):
    """L^{k,p} norm (Σ_{j<=k} ∫_Δ |D^j f|^p)^{1/p} by quadrature on the spectral form."""
    poly, res = f.project()
    deg = max(poly.shape)
    n_r = n_r or max(48, 2 * deg + 8)
    n_t = n_t or max(128, 4 * deg + 16)
    value, parts = _sobolev_value(poly, idx.k, idx.p, n_r, n_t)
    coarse, _ = _sobolev_value(poly, idx.k, idx.p, n_r // 2, n_t // 2)
    if f.spectral is None:
        parts["projection_residual"] = res
    return NormReport(f"L^{idx.k},{idx.p}", value, (n_r, n_t), abs(value - coarse), parts)


def trace_norm(phi: BoundaryFunction, p):
    """‖φ‖ = L^{1,p} norm of the Poisson extension; needs p > 2."""
    if not p > 2.0:
        raise ValueError("trace norm needs p > 2")
    rep = sobolev_norm(poisson(phi), RegularityIndex(1, 0.5, p))
    rep.norm = f"T^1,{p}"
    return rep


def boundary_holder(phi: BoundaryFunction, alpha, samples=256):
    """C^{0,α} norm of φ over equispaced samples of S."""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    pts = np.exp(1j * theta)
    vals = phi(theta)
    sup = float(np.max(np.linalg.norm(vals, axis=0)))
    return sup + holder_seminorm(pts, vals, alpha)


# ---------------------------------------------------------------------------
# convergence study


def tensor_holder(D: DeformationTensor, idx: RegularityIndex, samples=256, seed=0):
    """C^{k,α} norm of a deformation tensor over a deterministic sample of its ball."""
    pts = sample_ball(D.n, D.radius, samples, seed)
    n = D.n
    total = 0.0
    for j in range(idx.k + 1):
        blocks = []
        for da in _multi_indices(n, j):
            for db in _multi_indices(n, j - sum(da), exact=True):
                if sum(da) + sum(db) != j:
                    continue
                blocks.append(D.complex_derivative(pts, da, db).reshape(len(pts), -1))
        vals = np.concatenate(blocks, axis=1)
        sup = float(np.max(np.linalg.norm(vals, axis=1)))
        # pairs in ℂ^n: flatten real coordinates for the distance
        P = np.concatenate([pts.real, pts.imag], axis=1)
        V = np.concatenate([vals.real, vals.imag], axis=1)
        q, _, _ = kernels.holder_max(P, V, idx.alpha)
        total += sup + q
    return float(total)


def _multi_indices(n, total, exact=False):
    out = []
    for combo in np.ndindex(*([total + 1] * n)):
        s = sum(combo)
        if (exact and s == total) or (not exact and s <= total):
            out.append(tuple(int(c) for c in combo))
    return out


def scaled_sequence(A: DeformationTensor, ns):
    """A_n = (1 - 1/n) A."""
    return [(int(n), A.times(1.0 - 1.0 / n)) for n in ns]


def _threads():
    try:
        return max(1, int(os.environ.get("HOLODISC_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return 1


@dataclass
class ConvergenceReport:
    ns: list
    d: list
    e: list
    constant: float
    exponent: float
    monotone: bool
    fit_points: int
    details: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "d_n", "e_n", "C", "exponent"])
        for n, d, e in zip(self.ns, self.d, self.e):
            w.writerow([n, repr(float(d)), repr(float(e)), repr(self.constant), repr(self.exponent)])
        return buf.getvalue()

    def to_dict(self):
        return {
            "n": list(self.ns),
            "d_n": list(self.d),
            "e_n": list(self.e),
            "constant": self.constant,
            "exponent": self.exponent,
            "monotone": self.monotone,
            "fit_points": self.fit_points,
            **self.details,
        }


def fit_rate(d, e):
    """Least-squares fit log e = log C + s log d over the last ⌈half⌉ points."""
    d, e = np.asarray(d, float), np.asarray(e, float)
    m = math.ceil(len(d) / 2)
    dd, ee = d[-m:], e[-m:]
    ok = (dd > 0) & (ee > 0)
    if ok.sum() < 2:
        return 0.0 if np.all(ee == 0) else float("nan"), float("nan"), int(ok.sum())
    s, c = np.polyfit(np.log(dd[ok]), np.log(ee[ok]), 1)
    return float(np.exp(c)), float(s), int(ok.sum())


def convergence_study(sequence, A: DeformationTensor, phi: BoundaryFunction, a,
                      idx=RegularityIndex(0, 0.5), method="newton", tol=1e-11, grid=None,
                      cap=32, threads=None):
    """Solve for each A_n and for A, then measure e_n = ‖u_n - u‖_{C^{k+1,α}}
    against d_n = ‖A_n - A‖_{C^{k,α}} and fit e_n ≈ C d_n^s.

    ``sequence`` is a list of (n, A_n).  Per-n solves run on a thread pool
    capped by HOLODISC_THREADS; results are assembled in input order.
    """
    grid = grid or default_grid()
    for n, An in sequence:
        if An.bound > SOLVER_GATE:
            raise ValueError(f"A_{n} violates the admissibility gate (|A| bound {An.bound:.3g})")
    ref = solve_rh(RHProblem(A, phi, a), method=method, tol=tol, cap=cap, grid=grid)
    u = ref.solution.spectral

    def run(item):
        n, An = item
        rep = solve_rh(RHProblem(An, phi, a), method=method, tol=tol, cap=cap, grid=grid)
        diff = GridFunction.from_spectral(grid, rep.solution.spectral - u)
        e = holder_norm(diff, RegularityIndex(idx.k + 1, idx.alpha)).value
        d = tensor_holder(An.minus(A) if An.kind == "callable" or A.kind == "callable"
                          else _difference(An, A), idx)
        return n, d, e, rep.iterations

    workers = min(threads or _threads(), max(1, len(sequence)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, sequence))
    else:
        results = [run(item) for item in sequence]
    if len(results) < 3:
        raise ValueError("convergence study needs at least 3 successful solves")
    ns = [r[0] for r in results]
    d = [r[1] for r in results]
    e = [r[2] for r in results]
    C, s, m = fit_rate(d, e)
    monotone = all(e[i + 1] < e[i] for i in range(len(e) - 1))
    return ConvergenceReport(ns, d, e, C, s, bool(monotone), m,
                             {"iterations": [r[3] for r in results],
                              "reference_residual": ref.residual})


def _difference(An: DeformationTensor, A: DeformationTensor):
    terms = list(An.terms) + [(a, b, -M) for a, b, M in A.terms]
    merged = {}
    for a, b, M in terms:
        merged[(a, b)] = merged.get((a, b), 0) + M
    return DeformationTensor.polynomial([(a, b, M) for (a, b), M in merged.items()], An.n, An.radius)
