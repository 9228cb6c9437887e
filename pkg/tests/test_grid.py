import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holodisc.grid import (BoundaryFunction, GridError, GridFunction, boundary_trace, d, dbar,
                           default_grid, fit_spectral, make_disc_grid)
from holodisc.polynomial import PolarizedPolynomial


def _gf(terms, grid=None):
    return GridFunction.from_spectral(grid or default_grid(), PolarizedPolynomial.from_terms(terms))


def _same(f, terms):
    return f.spectral.allclose(PolarizedPolynomial.from_terms(terms), atol=0.0)


def test_grid_node_count():
    g = make_disc_grid(4, 8)
    assert g.size == 33


def test_grid_rejects_non_power_of_two():
    with pytest.raises(GridError, match="angular count must be power of 2"):
        make_disc_grid(4, 7)


def test_grid_rejects_tiny_grids():
    with pytest.raises(GridError):
        make_disc_grid(2, 8)


def test_boundary_ring_is_exactly_unit():
    g = make_disc_grid(16, 64)
    b = g.boundary_nodes
    assert np.all(np.abs(np.abs(b) - 1.0) == 0.0)
    assert all(abs(complex(z)) == 1.0 for z in b)


def test_grid_invariants():
    g = make_disc_grid(8, 32)
    assert np.all(np.abs(g.nodes) <= 1.0)
    ring = g.nodes[g.ring(3)]
    steps = np.diff(np.unwrap(np.angle(ring)))
    assert np.allclose(steps, 2 * np.pi / 32)


def test_mirror_index_is_conjugation():
    g = make_disc_grid(8, 32)
    assert np.allclose(g.nodes[g.mirror_index], np.conj(g.nodes), atol=1e-15)
    assert np.all(g.nodes[g.upper_mask].imag >= -1e-15)
    assert np.allclose(g.nodes[g.real_axis_mask].imag, 0.0, atol=1e-15)


def test_dbar_examples():
    assert _same(dbar(_gf({(0, 1): 1})), {(0, 0): 1})
    assert _same(dbar(_gf({(1, 0): 1})), {(0, 0): 0})
    assert _same(dbar(_gf({(1, 1): 1})), {(1, 0): 1})


def test_d_examples():
    assert _same(d(_gf({(1, 0): 1})), {(0, 0): 1})
    assert _same(d(_gf({(0, 1): 1})), {(0, 0): 0})
    assert _same(d(_gf({(2, 1): 1})), {(1, 1): 2})


def test_boundary_trace_examples():
    t = boundary_trace(_gf({(1, 0): 1}))
    assert t.mode(1)[0] == 1 and np.count_nonzero(t.fourier) == 1
    t = boundary_trace(_gf({(1, 1): 1}))
    assert t.mode(0)[0] == 1 and np.count_nonzero(t.fourier) == 1
    t = boundary_trace(_gf({(0, 2): 1}))
    assert t.mode(-2)[0] == 1 and np.count_nonzero(t.fourier) == 1


def test_boundary_trace_of_values_uses_fft():
    g = default_grid()
    f = GridFunction.from_callable(g, lambda z: z**3 + 2 * np.conj(z))
    t = boundary_trace(f)
    assert abs(t.mode(3)[0] - 1) < 1e-13 and abs(t.mode(-1)[0] - 2) < 1e-13


def _rand_poly(seed, degree, n=1):
    rng = np.random.default_rng(seed)
    c = np.zeros((n, degree + 1, degree + 1), dtype=complex)
    for k in range(degree + 1):
        for l in range(degree + 1 - k):
            c[:, k, l] = rng.normal(size=n) + 1j * rng.normal(size=n)
    return PolarizedPolynomial(c)


@given(st.integers(0, 2**31))
def test_d_dbar_commute(seed):
    # integer coefficients make every product exact, so equality is bitwise
    rng = np.random.default_rng(seed)
    c = rng.integers(-50, 50, size=(1, 9, 9)) + 1j * rng.integers(-50, 50, size=(1, 9, 9))
    f = GridFunction.from_spectral(default_grid(), PolarizedPolynomial(c))
    assert d(dbar(f)).spectral.allclose(dbar(d(f)).spectral, atol=0.0)
    f = GridFunction.from_spectral(default_grid(), _rand_poly(seed, 8))
    assert d(dbar(f)).spectral.allclose(dbar(d(f)).spectral, atol=1e-12)


def _dense_disc(count=4000, seed=0):
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.uniform(0, 1, count)) * np.exp(2j * np.pi * rng.uniform(0, 1, count))


@given(st.integers(0, 2**31), st.integers(0, 31))
def test_round_trip_spectral_values_spectral(seed, degree):
    # the recovered polynomial is the same function to 1e-12 relative to its size,
    # checked off the nodes as well as on them
    g = default_grid()
    p = _rand_poly(seed, degree)
    q, res = fit_spectral(g, p(g.nodes), degree=degree)
    z = _dense_disc(seed=seed % 100)
    scale = max(1.0, np.max(np.abs(p(z))))
    assert np.max(np.abs(q(z) - p(z))) <= 1e-12 * scale
    assert res <= 1e-12 * scale


@given(st.integers(0, 2**31), st.integers(0, 10))
def test_round_trip_coefficients_low_degree(seed, degree):
    g = default_grid()
    p = _rand_poly(seed, degree)
    q, _ = fit_spectral(g, p(g.nodes), degree=degree)
    assert q.allclose(p, atol=1e-12)


def test_holomorphic_trace_has_no_negative_modes():
    f = GridFunction.from_spectral(default_grid(), PolarizedPolynomial.from_terms({(0, 0): 1, (3, 0): 2}))
    t = boundary_trace(f)
    assert np.all(t.fourier[0, : t.max_mode] == 0)
    g = _gf({(1, 2): 1})
    assert np.any(boundary_trace(g).fourier[0, : boundary_trace(g).max_mode] != 0)


def test_with_spectral_tolerance():
    g = make_disc_grid(4, 8)
    f = GridFunction.from_callable(g, lambda z: np.exp(5 * z.real))
    with pytest.raises(GridError, match="projection residual"):
        f.with_spectral(tol=1e-12)


def test_json_round_trip():
    g = default_grid()
    p = _rand_poly(5, 6)
    f = GridFunction.from_spectral(g, p)
    data = json.loads(json.dumps(f.to_json()))
    assert data["n"] == 1 and data["degree_cap"] == 6
    back = GridFunction.from_json(data, g)
    assert back.spectral.allclose(p, atol=0.0)


def test_json_round_trip_vector():
    g = default_grid()
    p = _rand_poly(6, 4, n=2)
    back = GridFunction.from_json(GridFunction.from_spectral(g, p).to_json(), g)
    assert back.spectral.allclose(p, atol=0.0)


def test_json_rejects_monomials_past_cap():
    with pytest.raises(ValueError, match="degree cap"):
        GridFunction.from_json({"n": 1, "degree_cap": 2, "coefficients": [[3, 0, 1.0, 0.0]]})


def test_boundary_function_real_flag_symmetry():
    b = BoundaryFunction.from_modes({1: 0.5, -1: 0.5}, real=True)
    assert b.is_real()
    theta = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(b(theta)[0], np.cos(theta))


@given(st.integers(0, 2**31))
def test_boundary_function_from_samples(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=9) + 1j * rng.normal(size=9)
    b = BoundaryFunction(c)
    b2 = BoundaryFunction.from_callable(lambda t: b(t)[0], 4)
    assert np.allclose(b2.fourier, b.fourier, atol=1e-13)
