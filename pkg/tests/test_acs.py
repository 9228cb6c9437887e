import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holodisc.acs import (AlmostComplexStructure, DeformationTensor, StructureError, StructureField,
                          TotallyRealBoundary, antilinear_to_real, deformation_from_j,
                          is_totally_real, j_from_deformation, j_standard, load_structure,
                          normalize_coordinates, real_to_pair, sample_ball, shear_structure, to_complex,
                          to_real)
from holodisc.grid import default_grid


def lam_structure(lam):
    return AlmostComplexStructure.constant([[0.0, -lam], [1.0 / lam, 0.0]])


def degenerate_j2():
    # rotation inside ℝ² and inside iℝ²: J e_1 = e_2 lies in T_pW
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    Z = np.zeros((2, 2))
    return AlmostComplexStructure.constant(np.block([[R, Z], [Z, R]]))


def test_standard_gives_zero_tensor():
    A = deformation_from_j(AlmostComplexStructure.standard(2))
    assert np.all(A.at(np.zeros(2)) == 0)


def test_lambda_three_gives_one_half():
    A = deformation_from_j(lam_structure(3.0))
    pts = sample_ball(1, 1.0, 10)
    assert np.allclose(A.at(pts)[..., 0, 0], 0.5, atol=1e-14)


@given(st.floats(0.2, 5.0))
def test_lambda_family_formula(lam):
    # direct 2x2 arithmetic: A = (λ - 1)/(λ + 1)
    A = deformation_from_j(lam_structure(lam), points=np.zeros((1, 1)))
    assert A.at(np.zeros(1))[0, 0] == pytest.approx((lam - 1) / (lam + 1), abs=1e-13)


def test_one_half_gives_lambda_three():
    J = j_from_deformation(DeformationTensor.constant(0.5))
    assert np.allclose(J.at(np.zeros(1)), [[0, -3], [1 / 3, 0]], atol=1e-14)
    assert np.allclose(j_from_deformation(DeformationTensor.zero(2)).at(np.zeros(2)), j_standard(2))


def test_large_tensor_rejected():
    with pytest.raises(StructureError):
        j_from_deformation(DeformationTensor.constant(2.0))


def test_non_square_root_rejected():
    J = AlmostComplexStructure.constant([[0.0, -2.0], [1.0, 0.0]])
    with pytest.raises(StructureError, match="J² ≠ -Id"):
        deformation_from_j(J)


def test_opposite_structure_is_too_far():
    J = AlmostComplexStructure.constant(-j_standard(1))
    with pytest.raises(StructureError, match="too far from standard"):
        deformation_from_j(J)


def _random_tensor(seed, n, scale=0.3):
    rng = np.random.default_rng(seed)
    M0 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M0 *= scale / np.linalg.norm(M0, 2)
    M1 *= scale / np.linalg.norm(M1, 2)
    e = tuple(int(i == 0) for i in range(n))
    z = (0,) * n
    return DeformationTensor.polynomial([(z, z, M0), (e, z, M1)], n)


@given(st.integers(0, 2**31), st.integers(1, 3))
def test_round_trip_deformation(seed, n):
    A = _random_tensor(seed, n)
    J = j_from_deformation(A)
    pts = sample_ball(n, 0.9, 12, seed=seed % 1000)
    assert J.square_defect(pts) < 1e-12
    A2 = deformation_from_j(J, points=pts)
    assert np.max(np.abs(A2.at(pts) - A.at(pts))) < 1e-10


@given(st.integers(0, 2**31), st.integers(1, 3))
def test_j_from_a_matches_defining_relation(seed, n):
    # (J_st + J) Q = J_st - J with Q the real form of v -> A conj(v)
    A = _random_tensor(seed, n)
    J = j_from_deformation(A)
    pts = sample_ball(n, 0.9, 6, seed=seed % 1000)
    Js = j_standard(n)
    Jz = J.at(pts)
    Q = antilinear_to_real(A.at(pts))
    assert np.max(np.abs((Js + Jz) @ Q - (Js - Jz))) < 1e-12


def test_a_vanishes_exactly_where_j_is_standard():
    A = DeformationTensor.polynomial([((1,), (0,), 0.3)])
    J = j_from_deformation(A)
    z = np.array([[0.0], [0.5], [0.2j]])
    dev = np.max(np.abs(J.at(z) - j_standard(1)), axis=(-2, -1))
    a = np.abs(A.at(z))[..., 0, 0]
    assert dev[0] == 0 and a[0] == 0
    assert np.all(dev[1:] > 0) and np.all(a[1:] > 0)


def test_totally_real_examples():
    assert is_totally_real(TotallyRealBoundary(2, "real"), AlmostComplexStructure.standard(2), np.zeros(2))
    assert is_totally_real(TotallyRealBoundary(2, "imaginary"), AlmostComplexStructure.standard(2), np.zeros(2))
    assert not is_totally_real(TotallyRealBoundary(2, "real"), degenerate_j2(), np.zeros(2))


def test_totally_real_rejects_points_off_w():
    with pytest.raises(StructureError):
        is_totally_real(TotallyRealBoundary(1, "real"), AlmostComplexStructure.standard(1), np.array([0.3j]))


def test_normalize_standard_is_identity():
    phi = normalize_coordinates(AlmostComplexStructure.standard(2))
    x = np.random.default_rng(0).normal(size=(5, 4))
    assert np.allclose(phi(x), x)
    assert np.allclose(phi.jacobian(x), np.eye(4))


def test_normalize_shear_example():
    # J(x, y) = [[0, -λ(x)], [1/λ(x), 0]] with λ = 2 + x
    def J(z):
        x = np.real(z[0])
        lam = 2.0 + x
        return np.array([[0.0, -lam], [1.0 / lam, 0.0]])

    st_ = AlmostComplexStructure.from_callable(J, 1)
    phi = normalize_coordinates(st_)
    xs = np.linspace(-0.5, 0.5, 11)
    pts = np.stack([xs, 0.3 * np.ones_like(xs)], axis=-1)
    lam = 2.0 + xs
    # φ(x, y) = (x, y/λ(x)) up to the ordering of (x, y)
    assert np.allclose(phi(pts), np.stack([xs, 0.3 / lam], axis=-1))
    on_axis = np.stack([xs, np.zeros_like(xs)], axis=-1)
    push = phi.pushforward(on_axis)
    assert np.max(np.abs(push - j_standard(1))) < 1e-8


def test_normalize_polynomial_structure():
    J = shear_structure({(1, 0): 0.3, (0, 1): 0.2, (2, 0): 0.1})
    phi = normalize_coordinates(J)
    xs = np.linspace(-0.5, 0.5, 9)
    on_axis = np.stack([xs, np.zeros_like(xs)], axis=-1)
    assert np.max(np.abs(phi.pushforward(on_axis) - j_standard(1))) < 1e-8
    assert np.max(np.abs(phi(on_axis) - on_axis)) == 0.0


def test_normalize_rejects_degenerate():
    with pytest.raises(StructureError, match="not totally real"):
        normalize_coordinates(degenerate_j2())


def test_shear_structure_squares_to_minus_one():
    J = shear_structure({(1, 1): 0.7, (0, 2): -0.4})
    pts = sample_ball(1, 1.0, 50)
    assert J.square_defect(pts) < 1e-13


def test_polynomial_derivatives_match_finite_differences():
    J = shear_structure({(1, 1): 0.7, (2, 0): -0.4})
    z = np.array([[0.2 + 0.1j]])
    dJ = J.derivative(z)
    h = 1e-6
    fx = (J.at(z + h) - J.at(z - h)) / (2 * h)
    fy = (J.at(z + 1j * h) - J.at(z - 1j * h)) / (2 * h)
    assert np.allclose(dJ[0], fx, atol=1e-8) and np.allclose(dJ[1], fy, atol=1e-8)


@given(st.integers(0, 2**31))
def test_deformation_structure_derivatives(seed):
    A = _random_tensor(seed, 1)
    J = j_from_deformation(A)
    z = sample_ball(1, 0.5, 3, seed=seed % 1000)[1:]
    dJ = J.derivative(z)
    h = 1e-6
    fx = (J.at(z + h) - J.at(z - h)) / (2 * h)
    fy = (J.at(z + 1j * h) - J.at(z - 1j * h)) / (2 * h)
    assert np.allclose(dJ[0], fx, atol=1e-7) and np.allclose(dJ[1], fy, atol=1e-7)
    H = J.hessian(z)
    dx = (J.derivative(z + 1e-5) - J.derivative(z - 1e-5)) / 2e-5
    assert np.allclose(H[:, 0], dx, atol=1e-6)


def test_real_pair_split():
    rng = np.random.default_rng(0)
    E = rng.normal(size=(4, 4))
    P, Q = real_to_pair(E)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    assert np.allclose(to_complex(E @ to_real(v)), P @ v + Q @ np.conj(v))


def test_structure_field_constant():
    J = lam_structure(3.0).at(np.zeros(1))
    f = StructureField.constant(J)
    assert np.allclose(f.at(np.array([0.3, 0.5j])), J)
    g = default_grid()
    f2 = StructureField.from_values(g, np.broadcast_to(J, (g.size, 2, 2)))
    assert np.allclose(f2.at(g.nodes), J, atol=1e-13)


def test_load_structure_constant_and_polynomial():
    A = load_structure({"n": 1, "kind": "constant", "matrix": 0.25})
    assert A.is_constant() and A.constant_value()[0, 0] == 0.25
    A = load_structure('{"n": 1, "kind": "polynomial", "terms": [{"alpha": [1], "beta": [0], "matrix": [0.1, 0.0]}]}')
    assert A.at(np.array([0.5]))[0, 0] == pytest.approx(0.05)
    A = load_structure({"n": 2, "kind": "constant", "matrix": [[0.1, 0], [0, [0, 0.2]]]})
    assert A.at(np.zeros(2))[1, 1] == 0.2j


@pytest.mark.parametrize("bad", [
    {"n": 1},
    {"n": 1, "kind": "weird"},
    {"n": 0, "kind": "constant", "matrix": 0},
    {"n": 1, "kind": "constant"},
    {"n": 1, "kind": "polynomial", "terms": []},
    {"n": 1, "kind": "polynomial", "terms": [{"alpha": [1], "matrix": 0.1}]},
    {"n": 2, "kind": "constant", "matrix": 0.1},
    [1, 2],
])
def test_load_structure_errors(bad):
    with pytest.raises(StructureError):
        load_structure(bad)


def test_tensor_json_round_trip():
    A = DeformationTensor.polynomial([((1,), (0,), 0.1), ((0,), (2,), 0.05j)])
    B = load_structure(A.to_json())
    z = sample_ball(1, 1.0, 8)
    assert np.allclose(A.at(z), B.at(z))
