import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma

from holodisc.acs import DeformationTensor
from holodisc.diagnostics import (ConvergenceReport, RegularityIndex, boundary_holder, convergence_study,
                                  fit_rate, holder_norm, holder_seminorm, scaled_sequence, sobolev_norm,
                                  tensor_holder, trace_norm)
from holodisc.grid import BoundaryFunction, GridFunction, default_grid, make_disc_grid
from holodisc.polynomial import PolarizedPolynomial

P = PolarizedPolynomial.from_terms
COS = BoundaryFunction.from_modes({1: 0.5, -1: 0.5}, real=True)


def gf(terms, grid=None):
    return GridFunction.from_spectral(grid or default_grid(), P(terms))


def test_regularity_index_validation():
    for bad in [dict(k=-1), dict(alpha=0.0), dict(alpha=1.0), dict(p=1.0), dict(k=0.5)]:
        with pytest.raises(ValueError):
            RegularityIndex(**bad)


def test_holder_of_constant():
    rep = holder_norm(gf({(0, 0): 3 - 4j}), RegularityIndex(0, 0.5))
    assert rep.parts["seminorm_0"] == 0.0 and rep.value == pytest.approx(5.0)


def test_holder_of_zeta_brute_force():
    g = default_grid()
    rep = holder_norm(gf({(1, 0): 1.0}), RegularityIndex(0, 0.5))
    # independent brute force over all node pairs
    z = g.nodes
    d = np.abs(z[:, None] - z[None])
    iu = np.triu_indices(len(z), 1)
    ref = np.max(d[iu] ** 0.5)
    assert rep.parts["seminorm_0"] == pytest.approx(ref, rel=1e-14)
    assert rep.parts["seminorm_0"] == pytest.approx(math.sqrt(2), rel=1e-14)


def test_holder_of_zeta_first_order():
    rep = holder_norm(gf({(1, 0): 1.0}), RegularityIndex(1, 0.5))
    assert rep.parts["sup_1"] == pytest.approx(1.0) and rep.parts["seminorm_1"] == 0.0


def test_holder_values_only_matches_spectral_at_k0():
    g = default_grid()
    f = gf({(2, 1): 1.0, (0, 1): 0.5})
    v = GridFunction.from_values(g, f.values)
    assert holder_norm(v, RegularityIndex(0, 0.3)).value == pytest.approx(
        holder_norm(f, RegularityIndex(0, 0.3)).value, rel=1e-14)


def test_holder_rejects_too_many_derivatives():
    g = make_disc_grid(4, 8)
    v = GridFunction.from_values(g, g.nodes**2)
    with pytest.raises(ValueError, match="exceeds the derivatives"):
        holder_norm(v, RegularityIndex(5, 0.5))


def test_holder_fast_mode_is_a_lower_bound():
    f = gf({(3, 0): 1.0, (1, 2): -0.5})
    full = holder_seminorm(default_grid().nodes, f.values, 0.5)
    fast = holder_seminorm(default_grid().nodes, f.values, 0.5, fast=True, pairs=5000)
    assert fast <= full + 1e-15


def _rand_gf(seed, degree=5, grid=None):
    rng = np.random.default_rng(seed)
    c = np.zeros((1, degree + 1, degree + 1), dtype=complex)
    for k in range(degree + 1):
        for l in range(degree + 1 - k):
            c[0, k, l] = rng.normal() + 1j * rng.normal()
    return GridFunction.from_spectral(grid or default_grid(), PolarizedPolynomial(c))


@given(st.integers(0, 2**31), st.floats(0.1, 0.9))
def test_holder_monotone_in_k(seed, alpha):
    f = _rand_gf(seed)
    a = holder_norm(f, RegularityIndex(0, alpha)).value
    b = holder_norm(f, RegularityIndex(1, alpha)).value
    c = holder_norm(f, RegularityIndex(2, alpha)).value
    assert a <= b <= c


@given(st.integers(0, 2**31), st.floats(0.1, 0.9))
def test_holder_refinement_consistency(seed, alpha):
    coarse = make_disc_grid(8, 32)
    fine = make_disc_grid(16, 64)
    f = _rand_gf(seed)
    rc = holder_norm(GridFunction.from_spectral(coarse, f.spectral), RegularityIndex(1, alpha))
    rf = holder_norm(GridFunction.from_spectral(fine, f.spectral), RegularityIndex(1, alpha))
    assert rf.parts["seminorm_0"] >= rc.parts["seminorm_0"] - rc.discretization_error
    assert rf.value >= rc.value - rc.discretization_error


def test_sobolev_examples():
    assert sobolev_norm(gf({(0, 0): 1.0}), RegularityIndex(0, 0.5, 2.0)).value == pytest.approx(
        math.sqrt(math.pi), rel=1e-13)
    assert sobolev_norm(gf({(0, 0): 0.0}), RegularityIndex(0, 0.5, 2.0)).value == 0.0
    rep = sobolev_norm(gf({(1, 0): 1.0}), RegularityIndex(1, 0.5, 2.0))
    assert rep.parts["order_1"] == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    # ∫|ζ|² = π/2, so the total is sqrt(π/2 + π)
    assert rep.value == pytest.approx(math.sqrt(1.5 * math.pi), rel=1e-13)


@pytest.mark.parametrize("p", [2.0, 3.0, 4.5])
def test_sobolev_monomial_oracle(p):
    # ∫_Δ |ζ|^{kp} dA = 2π / (kp + 2)
    k = 3
    rep = sobolev_norm(gf({(k, 0): 1.0}), RegularityIndex(0, 0.5, p))
    assert rep.value == pytest.approx((2 * math.pi / (k * p + 2)) ** (1 / p), rel=1e-12)


def test_trace_norm_examples():
    assert trace_norm(BoundaryFunction.from_modes({0: 0.0}, real=True), 3.0).value == 0.0
    for p in (3.0, 4.0):
        assert trace_norm(BoundaryFunction.from_modes({0: 1.0}, real=True), p).value == pytest.approx(
            math.pi ** (1 / p), rel=1e-13)


@pytest.mark.parametrize("p", [3.0, 4.0, 5.0, 6.0])
def test_trace_norm_of_cosine(p):
    # Poisson extension is x: ∫|x|^p dA = B/(p + 2) with B = ∫|cos|^p, plus π (1/√2)^p
    B = 2 * math.sqrt(math.pi) * gamma((p + 1) / 2) / gamma(p / 2 + 1)
    ref = (B / (p + 2) + math.pi * 2 ** (-p / 2)) ** (1 / p)
    rep = trace_norm(COS, p)
    # |x|^p is not smooth for odd p; the reported error must cover the gap
    assert abs(rep.value - ref) <= max(rep.discretization_error, 1e-13 * ref)
    assert abs(rep.value - ref) <= 1e-7 * ref


def test_trace_norm_rejects_small_p():
    with pytest.raises(ValueError):
        trace_norm(COS, 2.0)


def test_trace_embedding_ratio_is_grid_stable():
    corpus = [COS, BoundaryFunction.from_modes({3: 0.5j, -3: -0.5j}, real=True),
              BoundaryFunction.from_modes({0: 1.0, 5: 0.2, -5: 0.2}, real=True)]
    for p in (3.0, 4.0):
        alpha = (p - 2) / p
        r1 = [boundary_holder(phi, alpha, 256) / trace_norm(phi, p).value for phi in corpus]
        r2 = [boundary_holder(phi, alpha, 512) / trace_norm(phi, p).value for phi in corpus]
        assert max(r1) < 10.0
        assert np.allclose(r1, r2, rtol=0.02)


# ---------------------------------------------------------------------------
# convergence study


def test_fit_rate_recovers_power_law():
    d = np.array([1.0, 0.5, 0.25, 0.125, 0.0625])
    C, s, m = fit_rate(d, 3.0 * d**1.5)
    assert s == pytest.approx(1.5) and C == pytest.approx(3.0) and m == 3


def test_tensor_holder_of_constant():
    assert tensor_holder(DeformationTensor.constant(0.3), RegularityIndex(0, 0.5)) == pytest.approx(0.3)


def test_convergence_constant_sequence():
    A = DeformationTensor.constant(0.25)
    rep = convergence_study([(n, A) for n in (4, 8, 16)], A, COS, [0.0])
    assert all(e <= 1e-9 for e in rep.e)
    assert isinstance(rep, ConvergenceReport)


def test_convergence_scaled_quarter():
    A = DeformationTensor.constant(0.25)
    rep = convergence_study(scaled_sequence(A, range(4, 33, 4)), A, COS, [0.0])
    assert rep.monotone and rep.exponent >= 0.9
    assert rep.d[-1] < rep.d[0]


def test_convergence_gate_violation_names_index():
    A = DeformationTensor.constant(0.25)
    seq = [(4, A), (5, DeformationTensor.constant(0.7)), (6, A)]
    with pytest.raises(ValueError, match="A_5"):
        convergence_study(seq, A, COS, [0.0])


def test_convergence_needs_three_points():
    A = DeformationTensor.constant(0.25)
    with pytest.raises(ValueError, match="at least 3"):
        convergence_study(scaled_sequence(A, [4, 8]), A, COS, [0.0])


def test_convergence_thread_count_does_not_change_results():
    A = DeformationTensor.polynomial([((1,), (0,), 0.2)])
    seq = scaled_sequence(A, [4, 8, 16])
    r1 = convergence_study(seq, A, COS, [0.0], threads=1)
    r3 = convergence_study(seq, A, COS, [0.0], threads=3)
    assert r1.e == r3.e and r1.d == r3.d and r1.to_csv() == r3.to_csv()
