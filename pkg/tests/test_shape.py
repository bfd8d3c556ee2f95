import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affine_shape.algebra import MatrixF, logdet_posdef
from affine_shape.errors import DegenerateConfigurationError, DimensionError, NotPositiveDefiniteError
from affine_shape.shape import (
    ConfigurationCoordinates,
    configuration_coords,
    helmert_submatrix,
    jacobian_log_factor,
    reduce_landmarks,
)

from conftest import random_matrix, random_posdef


def test_helmert_small_cases():
    assert np.allclose(helmert_submatrix(2), [[1 / math.sqrt(2), -1 / math.sqrt(2)]])
    L = helmert_submatrix(3)
    assert np.allclose(L[0], np.array([1, -1, 0]) / math.sqrt(2))
    assert np.allclose(L[1], np.array([1, 1, -2]) / math.sqrt(6))
    with pytest.raises(DimensionError):
        helmert_submatrix(1)


@pytest.mark.parametrize("N", range(2, 21))
def test_helmert_is_row_orthonormal_and_centred(N):
    L = helmert_submatrix(N)
    assert L.shape == (N - 1, N)
    assert np.max(np.abs(L @ np.ones(N))) < 1e-14
    assert np.allclose(L @ L.T, np.eye(N - 1), atol=1e-14)


def test_three_collinear_points():
    X = MatrixF.from_real(np.array([[0.0], [1.0], [2.0]]), 1)
    Y = reduce_landmarks(X)
    assert np.allclose(Y.data[:, 0, 0], [-1 / math.sqrt(2), -3 / math.sqrt(6)])
    assert configuration_coords(X).V.data[0, 0, 0] == pytest.approx(math.sqrt(3), rel=1e-14)


def test_U_has_identity_top_block(rng):
    V = random_matrix(rng, 3, 2, 4)
    c = ConfigurationCoordinates(V)
    assert (c.q, c.K, c.N) == (3, 2, 6)
    assert c.U.rows_slice(0, 2).allclose(MatrixF.identity(2, 4), atol=0)
    assert c.U.rows_slice(2, 5).allclose(V, atol=0)


@pytest.mark.parametrize("beta", (1, 2, 4))
@pytest.mark.parametrize("K", (1, 2))
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_affine_invariance(beta, K, seed):
    rng = np.random.default_rng(seed)
    N = K + 4
    X = random_matrix(rng, N, K, beta)
    E = random_matrix(rng, K, K, beta) + MatrixF.identity(K, beta) * 2.0
    e = random_matrix(rng, 1, K, beta)
    ones = MatrixF.from_real(np.ones((N, 1)), beta)
    X2 = X @ E + ones @ e
    V1 = configuration_coords(X).V
    V2 = configuration_coords(X2).V
    assert np.max(np.abs(V1.data - V2.data)) < 1e-9 * max(1.0, np.max(np.abs(V1.data)))


@pytest.mark.parametrize("beta", (1, 2, 4))
def test_theta_whitening_does_not_change_V(rng, beta):
    # X Theta^{-1/2} is a right multiplication by an invertible matrix
    X = random_matrix(rng, 6, 2, beta)
    Theta = random_posdef(rng, 2, beta)
    assert configuration_coords(X, Theta).V.allclose(configuration_coords(X).V, atol=1e-10)


def test_degenerate_configuration_reported():
    X = MatrixF.from_real(np.array([[1.0], [1.0], [5.0]]), 1)
    with pytest.raises(DegenerateConfigurationError):
        configuration_coords(X)


def test_too_few_landmarks():
    with pytest.raises(DimensionError):
        configuration_coords(MatrixF.from_real(np.ones((3, 2)), 1))


def test_jacobian_factor_examples():
    f = MatrixF.from_real(np.array([[2.7]]), 1)
    assert jacobian_log_factor(f, 1, 1, 1) == pytest.approx(-math.log(2))
    f2 = MatrixF.from_real(np.array([[2.7]]), 2)
    assert jacobian_log_factor(f2, 2, 1, 11) == pytest.approx(-math.log(2) + 11 * math.log(2.7))
    F = MatrixF.from_real(np.array([[2.0, 0.3], [0.3, 1.0]]), 1)
    assert jacobian_log_factor(F, 1, 2, 2) == pytest.approx(-2 * math.log(2) + 0.5 * logdet_posdef(F))
    with pytest.raises(NotPositiveDefiniteError):
        jacobian_log_factor(MatrixF.from_real(np.array([[-1.0]]), 1), 1, 1, 1)
