import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gslearn.core import (
    degree_map, degree_map_norm, devec_upper, is_adjacency, laplacian, matrix_polynomial,
    project_constraints, soft_threshold, sym_eig, vec_upper,
)
from gslearn.errors import ContractError, DimensionError, ParameterError

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(max_n=7):
    return st.integers(1, max_n).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite))


def adjacency(max_n=7):
    return square(max_n).map(project_constraints)


@pytest.mark.parametrize("a, expected", [
    ([[0, 1], [1, 0]], [[1, -1], [-1, 1]]),
    ([[0, 0], [0, 0]], [[0, 0], [0, 0]]),
    ([[0, 2, 0], [2, 0, 1], [0, 1, 0]], [[2, -2, 0], [-2, 3, -1], [0, -1, 1]]),
])
def test_laplacian_examples(a, expected):
    assert np.array_equal(laplacian(np.array(a, float)), np.array(expected, float))


@given(adjacency())
def test_laplacian_rows_sum_to_zero_and_psd(a):
    lap = laplacian(a)
    assert np.allclose(lap.sum(axis=1), 0, atol=1e-12 * max(1, np.abs(a).sum()))
    assert np.linalg.eigvalsh(lap).min() >= -1e-10 * max(1, np.abs(a).max())


def test_project_constraints_examples():
    assert np.array_equal(project_constraints(np.array([[1., -2], [3, 4]])), [[0, .5], [.5, 0]])
    assert np.array_equal(project_constraints(np.array([[0., -1], [-1, 0]])), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        project_constraints(np.zeros((2, 3)))


@given(square())
def test_projection_is_idempotent_and_valid(m):
    p = project_constraints(m)
    assert is_adjacency(p)
    assert np.array_equal(project_constraints(p), p)


@given(st.integers(1, 6).flatmap(
    lambda n: st.tuples(*[arrays(np.float64, (n, n), elements=finite)] * 2)))
def test_projection_is_nonexpansive(pair):
    x, y = pair
    lhs = np.linalg.norm(project_constraints(x) - project_constraints(y))
    assert lhs <= np.linalg.norm(x - y) + 1e-12


def test_soft_threshold():
    assert soft_threshold(np.array(1.5), 1.0) == 0.5
    assert soft_threshold(np.array(-0.3), 0.5) == 0.0
    x = np.array([-2.0, 0.0, 3.5])
    assert np.array_equal(soft_threshold(x, 0.0), x)
    with pytest.raises(ParameterError):
        soft_threshold(x, -1.0)


def test_vec_devec_examples():
    a = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], float)
    assert vec_upper(a).tolist() == [1, 2, 3]
    assert np.array_equal(devec_upper(np.array([1., 2, 3])), a)
    assert vec_upper(np.array([[0., 5], [5, 0]])).tolist() == [5]
    with pytest.raises(DimensionError):
        devec_upper(np.ones(4))


@given(adjacency())
def test_vec_devec_roundtrip_bitwise(a):
    back = devec_upper(vec_upper(a), a.shape[0])
    assert back.tobytes() == a.tobytes()


def test_degree_map_examples():
    assert degree_map(np.array([1., 2, 3]), "forward").tolist() == [3, 4, 5]
    assert degree_map(np.ones(3), "adjoint").tolist() == [2, 2, 2]
    with pytest.raises(DimensionError):
        degree_map(np.ones(4), "forward")


@settings(max_examples=50)
@given(st.integers(2, 50), st.integers(0, 2**32 - 1))
def test_degree_map_adjoint_identity(n, seed):
    rng = np.random.default_rng(seed)
    w, v = rng.standard_normal(n * (n - 1) // 2), rng.standard_normal(n)
    lhs = degree_map(w, "forward") @ v
    rhs = w @ degree_map(v, "adjoint", n)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(w).sum() * np.abs(v).sum())


def test_degree_map_norm_matches_spectral_norm():
    n = 7
    k = np.stack([degree_map(e, "forward") for e in np.eye(n * (n - 1) // 2)], axis=1)
    assert np.isclose(np.linalg.norm(k, 2), degree_map_norm(n))


def test_matrix_polynomial_examples():
    a = np.array([[0., 1], [1, 0]])
    assert np.array_equal(matrix_polynomial(a, [1.0]), np.eye(2))
    assert np.array_equal(matrix_polynomial(a, [0.0, 1.0]), a)
    assert np.array_equal(matrix_polynomial(a, [0.0, 0.0, 1.0]), np.eye(2))
    with pytest.raises(ParameterError):
        matrix_polynomial(a, [])


@given(adjacency(5).filter(lambda a: np.abs(a).max() < 3),
       st.lists(finite, min_size=1, max_size=4), st.lists(finite, min_size=1, max_size=4))
def test_matrix_polynomial_linear_in_coefficients(a, c1, c2):
    k = max(len(c1), len(c2))
    c1, c2 = np.pad(c1, (0, k - len(c1))), np.pad(c2, (0, k - len(c2)))
    lhs = matrix_polynomial(a, c1 + c2)
    rhs = matrix_polynomial(a, c1) + matrix_polynomial(a, c2)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * max(1.0, np.abs(lhs).max()))


def test_sym_eig_examples():
    assert np.allclose(sym_eig(np.eye(3)).lam, [1, 1, 1])
    assert np.allclose(sym_eig(np.array([[0., 1], [1, 0]])).lam, [-1, 1])
    d = sym_eig(np.diag([3., 1, 2]))
    assert np.allclose(d.lam, [1, 2, 3])
    assert np.array_equal(np.abs(d.u), np.eye(3)[:, [1, 2, 0]])
    with pytest.raises(ContractError):
        sym_eig(np.array([[0., 1], [0, 0]]))


@given(square(6))
def test_sym_eig_contract(m):
    m = (m + m.T) / 2
    d = sym_eig(m)
    n = m.shape[0]
    assert np.max(np.abs(d.u.T @ d.u - np.eye(n))) <= 1e-10
    assert np.all(np.diff(d.lam) >= 0)
    scale = max(1.0, np.linalg.norm(m))
    assert np.linalg.norm(d.u @ np.diag(d.lam) @ d.u.T - m) <= 1e-9 * scale
    # sign convention: largest-magnitude component of each column is positive
    idx = np.argmax(np.abs(d.u), axis=0)
    assert np.all(d.u[idx, np.arange(n)] > 0)
    again = sym_eig(m.copy())
    assert np.array_equal(again.u, d.u) and np.array_equal(again.lam, d.lam)
