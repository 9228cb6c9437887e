"""Quadrature oracles that share no code with the package.

Each one evaluates a defining integral directly, so agreement with the
coefficient-space transforms is an independent check.
"""

import numpy as np


def cauchy_green_quadrature(h, z, n_phi=256, n_rho=48):
    """(1/π) ∫_Δ h(ζ)/(z - ζ) dA(ζ) in polar coordinates centred at z.

    The 1/|ζ - z| singularity cancels against the polar area element, so a
    trapezoid rule in the angle and Gauss-Legendre along each ray converge fast.
    """
    x, w = np.polynomial.legendre.leggauss(n_rho)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    e = np.exp(1j * phi)
    b = np.real(np.conj(z) * e)
    rmax = -b + np.sqrt(b * b + 1 - abs(z) ** 2)
    rho = 0.5 * (x[None, :] + 1) * rmax[:, None]
    wr = 0.5 * w[None, :] * rmax[:, None]
    pts = z + rho * e[:, None]
    inner = np.sum(wr * h(pts), axis=1)
    return -np.sum(inner / e) * (2 * np.pi / n_phi) / np.pi


def schwarz_quadrature(psi, z, n=512):
    """(1/2π) ∮ ψ(θ) (e^{iθ} + z)/(e^{iθ} - z) dθ by the trapezoid rule."""
    t = 2 * np.pi * np.arange(n) / n
    tau = np.exp(1j * t)
    return np.mean(psi(t) * (tau + z) / (tau - z))


def cauchy_quadrature(phi, z, n=512):
    """(1/2πi) ∮ φ(τ)/(τ - z) dτ by the trapezoid rule."""
    t = 2 * np.pi * np.arange(n) / n
    tau = np.exp(1j * t)
    return np.mean(phi(t) * tau / (tau - z))


def poly_eval(coeffs, z):
    """Σ c[k, l] z^k conj(z)^l for a 2-D coefficient array."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    K, L = coeffs.shape
    for k in range(K):
        for l in range(L):
            if coeffs[k, l] != 0:
                out = out + coeffs[k, l] * z**k * np.conj(z) ** l
    return out
