import numpy as np
import pytest

from affine_shape.algebra import MatrixF


def random_matrix(rng, rows, cols, beta):
    return MatrixF(rng.normal(size=(rows, cols, beta)), beta)


def random_posdef(rng, m, beta, ridge=0.5):
    A = random_matrix(rng, m, m, beta)
    return A @ A.H + MatrixF.identity(m, beta) * ridge


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
