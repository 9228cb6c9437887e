"""Cauchy-Green, Cauchy, Schwarz and Poisson transforms on the unit disc.

Every transform is evaluated in coefficient space.  On the circle the
monomial ζ^k ζ̄^l is e^{i(k-l)θ}, and the Cauchy integral of e^{imθ} is ζ^m
for m >= 0 and 0 for m < 0 (residues).  With that rule the Cauchy-Green
transform of a polynomial h is H - K(H|_S) where H is the ζ̄-primitive of h,
so no singular quadrature is ever needed.  Grid data without a spectral form
is first projected by least squares and the projection residual is reported
in ``info``.
"""

from __future__ import annotations

import numpy as np

from .grid import BoundaryFunction, GridError, GridFunction, default_grid, trace_of
from .polynomial import PolarizedPolynomial

__all__ = [
    "PolarizedPolynomial",
    "cauchy_green_poly",
    "cauchy_poly",
    "schwarz_poly",
    "poisson_poly",
    "cauchy_green",
    "cauchy",
    "schwarz",
    "poisson",
]


# ---------------------------------------------------------------------------
# coefficient-level transforms


def cauchy_modes(fourier, max_mode):
    """Holomorphic polynomial Σ_{m>=0} c_m ζ^m from a (n, 2M+1) Fourier array."""
    fourier = np.atleast_2d(fourier)
    M = max_mode
    c = np.zeros((fourier.shape[0], M + 1, 1), dtype=np.complex128)
    c[:, :, 0] = fourier[:, M:]
    return PolarizedPolynomial(c)


def cauchy_poly(phi: BoundaryFunction) -> PolarizedPolynomial:
    """K φ: keep modes m >= 0 as ζ^m, drop negative modes."""
    return cauchy_modes(phi.fourier, phi.max_mode)


def cauchy_green_poly(h: PolarizedPolynomial) -> PolarizedPolynomial:
    """Exact Cauchy-Green transform of a polynomial: H - K(H|_S) with H_ζ̄ = h."""
    H = h.primitive_bar()
    modes, tr = H.boundary_modes()
    K = H.shape[0]
    hol = np.zeros((H.n, K, 1), dtype=np.complex128)
    nonneg = modes >= 0
    hol[:, modes[nonneg], 0] = tr[:, nonneg]
    return H - PolarizedPolynomial(hol)


def schwarz_poly(psi: BoundaryFunction, check=True) -> PolarizedPolynomial:
    """Holomorphic g with Re g|_S = ψ and Im g(0) = 0 for real ψ."""
    if check and not psi.is_real():
        raise ValueError("Schwarz transform needs real boundary data")
    M = psi.max_mode
    f = psi.fourier
    c = np.zeros((psi.n, M + 1, 1), dtype=np.complex128)
    c[:, 0, 0] = f[:, M].real
    c[:, 1:, 0] = 2.0 * f[:, M + 1:]
    return PolarizedPolynomial(c)


def poisson_poly(phi: BoundaryFunction) -> PolarizedPolynomial:
    """Harmonic extension Re T^SW(Re φ) + i Re T^SW(Im φ) as a polynomial."""
    re = schwarz_poly(phi.real, check=False).real
    im = schwarz_poly(phi.imag, check=False).real
    return re + im * 1j


# ---------------------------------------------------------------------------
# grid-level transforms


def cauchy_green(h: GridFunction, tol=None, degree=None) -> GridFunction:
    """T^CG h on the grid of ``h``.

    Spectral inputs go through :func:`cauchy_green_poly` exactly.  Values-only
    inputs are projected first; the projection residual, propagated through
    the operator bound sup|T^CG g| <= 2 sup|g| on the disc, is reported as
    ``info["error_estimate"]`` and must not exceed ``tol`` when given.
    """
    if h.spectral is not None:
        return GridFunction.from_spectral(h.grid, cauchy_green_poly(h.spectral),
                                          {"exact": True, "error_estimate": 0.0})
    poly, res = h.project(degree)
    est = 2.0 * res
    if tol is not None and est > tol:
        raise GridError(
            f"Cauchy-Green error estimate {est:.3e} exceeds tolerance {tol:.3e} "
            f"on a {h.grid.n_radial}x{h.grid.n_angular} grid; refine the grid"
        )
    return GridFunction.from_spectral(
        h.grid, cauchy_green_poly(poly),
        {"exact": False, "projection_residual": res, "error_estimate": est},
    )


def cauchy(phi: BoundaryFunction, grid=None) -> GridFunction:
    """Cauchy transform K φ on ``grid``."""
    return GridFunction.from_spectral(grid or default_grid(), cauchy_poly(phi))


def schwarz(psi: BoundaryFunction, grid=None) -> GridFunction:
    """Schwarz transform of real ψ on ``grid``."""
    return GridFunction.from_spectral(grid or default_grid(), schwarz_poly(psi))


def poisson(phi: BoundaryFunction, grid=None) -> GridFunction:
    """Poisson (harmonic) extension of φ on ``grid``."""
    return GridFunction.from_spectral(grid or default_grid(), poisson_poly(phi))


def boundary_of(poly: PolarizedPolynomial) -> BoundaryFunction:
    return trace_of(poly)
