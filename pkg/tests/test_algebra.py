import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affine_shape.algebra import (
    AlgebraTag,
    MatrixF,
    Scalar,
    complex_embedding,
    complex_unembedding,
    det_hermitian,
    eigvals_hermitian,
    herm_trace,
    inv_general,
    inv_posdef,
    jacobi_eigh,
    logdet_posdef,
    mat_mul,
    re_trace,
    realify,
    sqrt_posdef,
    unrealify,
)
from affine_shape.errors import (
    AlgebraError,
    DimensionError,
    NotHermitianError,
    NotPositiveDefiniteError,
)

from conftest import random_matrix, random_posdef

BETAS = (1, 2, 4)
components = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def scalars(beta):
    return st.lists(components, min_size=beta, max_size=beta).map(Scalar)


def test_algebra_tag_capabilities():
    assert [AlgebraTag(b).capability for b in (1, 2, 4, 8)] == ["full-numeric"] * 3 + ["formula-only"]
    with pytest.raises(AlgebraError):
        AlgebraTag(3)


def test_octonion_matrices_refuse_arithmetic():
    a = MatrixF(np.ones((1, 1, 8)), 8)
    with pytest.raises(AlgebraError):
        mat_mul(a, a)


@pytest.mark.parametrize("beta", (1, 2, 4, 8))
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_norm_is_multiplicative(beta, data):
    a = data.draw(scalars(beta))
    b = data.draw(scalars(beta))
    assert (a * b).norm() == pytest.approx(a.norm() * b.norm(), rel=1e-12, abs=1e-12)


def test_conjugation_negates_imaginary_parts():
    a = Scalar([1.0, 2.0, -3.0, 4.0])
    assert np.array_equal(a.conj().c, [1.0, -2.0, 3.0, -4.0])


def test_hamilton_relations():
    i, j, k = (MatrixF(Scalar.basis(4, n).c.reshape(1, 1, 4), 4) for n in (1, 2, 3))
    assert (i @ j).allclose(k)
    assert (j @ i).allclose(-k)
    assert (i @ i).allclose(-MatrixF.identity(1, 4))


def test_octonions_are_not_associative():
    e = [Scalar.basis(8, n) for n in range(8)]
    assert not ((e[1] * e[2]) * e[4] == e[1] * (e[2] * e[4]))


@pytest.mark.parametrize("beta", BETAS)
def test_identity_is_neutral(rng, beta):
    A = random_matrix(rng, 3, 3, beta)
    assert (A @ MatrixF.identity(3, beta)).allclose(A)


@pytest.mark.parametrize("beta", BETAS)
def test_product_is_associative(rng, beta):
    A, B, C = (random_matrix(rng, 3, 3, beta) for _ in range(3))
    assert ((A @ B) @ C).allclose(A @ (B @ C), atol=1e-11)


@pytest.mark.parametrize("beta", BETAS)
def test_adjoint_reverses_products(rng, beta):
    A, B = random_matrix(rng, 2, 3, beta), random_matrix(rng, 3, 2, beta)
    assert (A @ B).H.allclose(B.H @ A.H)
    assert A.H.H.allclose(A)


def test_quaternion_adjoint_against_complex_embedding(rng):
    A, B = random_matrix(rng, 2, 2, 4), random_matrix(rng, 2, 2, 4)
    lhs = complex_embedding((A @ B).H)
    rhs = complex_embedding(B).conj().T @ complex_embedding(A).conj().T
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_embedding_basics(rng):
    assert np.array_equal(complex_embedding(MatrixF.identity(3, 4)), np.eye(6))
    j = MatrixF(np.array([[[0.0, 0.0, 1.0, 0.0]]]), 4)
    assert np.array_equal(complex_embedding(j), [[0, 1], [-1, 0]])
    A, B = random_matrix(rng, 2, 2, 4), random_matrix(rng, 2, 2, 4)
    assert np.max(np.abs(complex_embedding(A @ B) - complex_embedding(A) @ complex_embedding(B))) < 1e-12
    assert complex_unembedding(complex_embedding(A)).allclose(A)
    with pytest.raises(AlgebraError):
        complex_embedding(MatrixF.identity(2, 2))


@pytest.mark.parametrize("beta", BETAS)
def test_realify_round_trip_and_homomorphism(rng, beta):
    A, B = random_matrix(rng, 2, 3, beta), random_matrix(rng, 3, 2, beta)
    assert unrealify(realify(A), beta).allclose(A)
    assert np.allclose(realify(A @ B), realify(A) @ realify(B))
    assert np.allclose(realify(A.H), realify(A).T)


def test_jacobi_matches_lapack(rng):
    a = rng.normal(size=(6, 6))
    a = a + a.T
    w, q = jacobi_eigh(a)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-12)
    assert np.allclose(q @ np.diag(w) @ q.T, a, atol=1e-12)


@pytest.mark.parametrize("beta", BETAS)
def test_det_of_identity(beta):
    assert det_hermitian(MatrixF.identity(4, beta)) == pytest.approx(1.0)


def test_det_examples():
    assert det_hermitian(MatrixF.from_real(np.diag([2.0, 3.0]), 1)) == pytest.approx(6.0)
    # [[2, i+j], [-(i+j)... conj, 3]]: |i+j|^2 = 2, so det = 2*3 - 2
    S = MatrixF(np.array([[[2, 0, 0, 0], [0, 1, 1, 0]], [[0, -1, -1, 0], [3, 0, 0, 0]]], float), 4)
    emb = np.linalg.eigvalsh(complex_embedding(S))
    assert det_hermitian(S) == pytest.approx(np.prod(emb[::2]), rel=1e-12)
    assert det_hermitian(S) == pytest.approx(4.0, rel=1e-12)


def _cofactor_det(c):
    n = c.shape[0]
    if n == 1:
        return c[0, 0]
    return sum((-1) ** j * c[0, j] * _cofactor_det(np.delete(c[1:], j, axis=1)) for j in range(n))


@pytest.mark.parametrize("m", (2, 3))
def test_complex_det_matches_cofactor_expansion(rng, m):
    A = random_matrix(rng, m, m, 2)
    S = A @ A.H
    c = S.data[..., 0] + 1j * S.data[..., 1]
    assert det_hermitian(S) == pytest.approx(_cofactor_det(c).real, rel=1e-10)
    assert det_hermitian(S) >= 0


def test_quaternion_det_squared_is_embedding_det(rng):
    S = random_posdef(rng, 3, 4)
    assert np.linalg.det(complex_embedding(S)).real == pytest.approx(det_hermitian(S) ** 2, rel=1e-9)


def test_non_hermitian_rejected(rng):
    A = random_matrix(rng, 3, 3, 2)
    with pytest.raises(NotHermitianError):
        det_hermitian(A)
    with pytest.raises(DimensionError):
        det_hermitian(random_matrix(rng, 2, 3, 1))


def test_inverse_example():
    S = MatrixF(np.array([[[2, 0], [0, 1]], [[0, -1], [2, 0]]], float), 2)
    expected = MatrixF(np.array([[[2, 0], [0, -1]], [[0, 1], [2, 0]]], float) / 3.0, 2)
    assert inv_posdef(S).allclose(expected, atol=1e-14)


@pytest.mark.parametrize("beta", BETAS)
def test_inverse_and_sqrt_round_trips(rng, beta):
    S = random_posdef(rng, 3, beta)
    I = MatrixF.identity(3, beta)
    assert (S @ inv_posdef(S)).allclose(I, atol=1e-10)
    assert inv_posdef(inv_posdef(S)).allclose(S, atol=1e-9)
    R = sqrt_posdef(S)
    assert (R @ R).allclose(S, atol=1e-10)
    assert R.allclose(R.H, atol=1e-14)
    assert inv_posdef(I).allclose(I)
    assert sqrt_posdef(I).allclose(I)
    assert logdet_posdef(S) == pytest.approx(np.log(det_hermitian(S)))


def test_sqrt_diagonal():
    assert sqrt_posdef(MatrixF.from_real(np.diag([4.0, 9.0]), 1)).allclose(
        MatrixF.from_real(np.diag([2.0, 3.0]), 1))


def test_not_posdef_rejected():
    S = MatrixF.from_real(np.diag([1.0, -1.0]), 2)
    with pytest.raises(NotPositiveDefiniteError):
        inv_posdef(S)
    with pytest.raises(NotPositiveDefiniteError):
        sqrt_posdef(S)


def test_inv_general(rng):
    A = random_matrix(rng, 3, 3, 4)
    assert (A @ inv_general(A)).allclose(MatrixF.identity(3, 4), atol=1e-10)
    with pytest.raises(np.linalg.LinAlgError):
        inv_general(MatrixF.zeros(2, 2, 2))


@pytest.mark.parametrize("beta", BETAS)
def test_trace_properties(rng, beta):
    assert re_trace(MatrixF.identity(5, beta)) == 5.0
    A, B = random_matrix(rng, 3, 3, beta), random_matrix(rng, 3, 3, beta)
    assert re_trace(A @ B) == pytest.approx(re_trace(B @ A))
    S = random_posdef(rng, 3, beta)
    assert np.allclose(np.trace(S.data[..., 1:], axis1=0, axis2=1), 0.0)
    assert herm_trace(S) == pytest.approx(np.sum(eigvals_hermitian(S)))
    with pytest.raises(DimensionError):
        re_trace(random_matrix(rng, 2, 3, beta))


def test_mixed_algebras_rejected(rng):
    with pytest.raises(AlgebraError):
        mat_mul(MatrixF.identity(2, 1), MatrixF.identity(2, 2))
    with pytest.raises(DimensionError):
        mat_mul(random_matrix(rng, 2, 3, 1), random_matrix(rng, 2, 3, 1))
