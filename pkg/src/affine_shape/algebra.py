"""Arithmetic and small dense linear algebra over R, C, H (and O at scalar level).

Scalars are stored as arrays of ``beta`` real components over the basis
``1, e1, ..., e_{beta-1}`` produced by the Cayley-Dickson doubling.  For
quaternions the basis is ``1, i, j, k`` and a quaternion ``z1 + z2 j`` with
``z1 = a + b i`` and ``z2 = c + d i`` has components ``(a, b, c, d)``.

Matrices (:class:`MatrixF`) hold a ``(rows, cols, beta)`` real array.  Products
use the algebra multiplication directly; everything spectral (determinants,
inverses, square roots) goes through the real left-regular representation
("realification"), where a Hermitian matrix over F becomes a real symmetric
matrix whose eigenvalues are those of the original, each repeated ``beta``
times.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    AlgebraError,
    DimensionError,
    NotHermitianError,
    NotPositiveDefiniteError,
)

HERMITIAN_RTOL = 1e-10

__all__ = [
    "AlgebraTag",
    "REAL",
    "COMPLEX",
    "QUATERNION",
    "OCTONION",
    "algebra",
    "structure_constants",
    "Scalar",
    "MatrixF",
    "mat_mul",
    "complex_embedding",
    "complex_unembedding",
    "realify",
    "unrealify",
    "jacobi_eigh",
    "eigh_hermitian",
    "eigvals_hermitian",
    "check_hermitian",
    "det_hermitian",
    "logdet_posdef",
    "inv_posdef",
    "sqrt_posdef",
    "invsqrt_posdef",
    "re_trace",
    "herm_trace",
    "inv_general",
]


@dataclass(frozen=True)
class AlgebraTag:
    """Selector for one of the four real normed division algebras."""

    beta: int

    def __post_init__(self):
        if self.beta not in (1, 2, 4, 8):
            raise AlgebraError(f"beta must be one of 1, 2, 4, 8; got {self.beta!r}")

    @property
    def numeric(self) -> bool:
        return self.beta in (1, 2, 4)

    @property
    def capability(self) -> str:
        return "full-numeric" if self.numeric else "formula-only"

    @property
    def name(self) -> str:
        return {1: "real", 2: "complex", 4: "quaternion", 8: "octonion"}[self.beta]

    def require_numeric(self, what: str = "matrix arithmetic") -> None:
        if not self.numeric:
            raise AlgebraError(f"{what} is not available over the {self.name}s (beta={self.beta})")


REAL = AlgebraTag(1)
COMPLEX = AlgebraTag(2)
QUATERNION = AlgebraTag(4)
OCTONION = AlgebraTag(8)


def algebra(beta) -> AlgebraTag:
    if isinstance(beta, AlgebraTag):
        return beta
    return AlgebraTag(int(beta))


def _cd_conj(x):
    out = -np.asarray(x, dtype=float)
    out[0] = -out[0]
    return out


def _cd_mul(x, y):
    """Cayley-Dickson product ``(a, b)(c, d) = (ac - d* b, d a + b c*)``."""
    n = len(x)
    if n == 1:
        return np.array([x[0] * y[0]])
    h = n // 2
    a, b = x[:h], x[h:]
    c, d = y[:h], y[h:]
    return np.concatenate([
        _cd_mul(a, c) - _cd_mul(_cd_conj(d), b),
        _cd_mul(d, a) + _cd_mul(b, _cd_conj(c)),
    ])


@lru_cache(maxsize=None)
def structure_constants(beta: int) -> np.ndarray:
    """Tensor ``T`` with ``(xy)_k = sum_ij T[i, j, k] x_i y_j``."""
    beta = algebra(beta).beta
    eye = np.eye(beta)
    table = np.zeros((beta, beta, beta))
    for i in range(beta):
        for j in range(beta):
            table[i, j] = _cd_mul(eye[i], eye[j])
    table.setflags(write=False)
    return table


def _conj_sign(beta: int) -> np.ndarray:
    sign = -np.ones(beta)
    sign[0] = 1.0
    return sign


class Scalar:
    """An element of R, C, H or O given by its real components."""

    __slots__ = ("c",)

    def __init__(self, components):
        c = np.array(components, dtype=float).reshape(-1)
        algebra(len(c))
        c.setflags(write=False)
        self.c = c

    @classmethod
    def basis(cls, beta: int, index: int) -> "Scalar":
        c = np.zeros(beta)
        c[index] = 1.0
        return cls(c)

    @property
    def beta(self) -> int:
        return len(self.c)

    def conj(self) -> "Scalar":
        return Scalar(self.c * _conj_sign(self.beta))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.c, self.c)))

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.beta != self.beta:
                raise AlgebraError("scalars from different algebras")
            return other
        c = np.zeros(self.beta)
        c[0] = float(other)
        return Scalar(c)

    def __mul__(self, other):
        other = self._coerce(other)
        return Scalar(np.einsum("i,j,ijk->k", self.c, other.c, structure_constants(self.beta)))

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __add__(self, other):
        return Scalar(self.c + self._coerce(other).c)

    __radd__ = __add__

    def __sub__(self, other):
        return Scalar(self.c - self._coerce(other).c)

    def __neg__(self):
        return Scalar(-self.c)

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.beta == other.beta and np.array_equal(self.c, other.c)

    def __hash__(self):
        return hash(self.c.tobytes())

    def __repr__(self):
        return f"Scalar({self.c.tolist()})"


class MatrixF:
    """Dense ``rows x cols`` matrix over the algebra with real dimension ``beta``.

    Instances are immutable; ``data`` is a read-only ``(rows, cols, beta)`` array.
    """

    __slots__ = ("data", "alg")

    def __init__(self, data, beta=None):
        arr = np.array(data, dtype=float)
        if beta is None:
            if arr.ndim != 3:
                raise DimensionError("component array must have shape (rows, cols, beta)")
            beta = arr.shape[2]
        alg = algebra(beta)
        if arr.ndim == 2 and alg.beta == 1:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] != alg.beta:
            raise DimensionError(f"expected a (rows, cols, {alg.beta}) array, got {arr.shape}")
        arr.setflags(write=False)
        self.data = arr
        self.alg = alg

    # construction helpers -------------------------------------------------
    @classmethod
    def from_array(cls, a, beta: int | None = None) -> "MatrixF":
        """Build from a real (beta=1) or complex (beta=2) 2-D array."""
        a = np.asarray(a)
        if beta is None:
            beta = 2 if np.iscomplexobj(a) else 1
        if a.ndim == 1:
            a = a[:, None]
        if beta == 1:
            if np.iscomplexobj(a):
                raise AlgebraError("complex array given for beta=1")
            return cls(a[:, :, None].astype(float), 1)
        comp = np.zeros(a.shape + (beta,))
        comp[..., 0] = a.real
        comp[..., 1] = np.imag(a)
        return cls(comp, beta)

    @classmethod
    def identity(cls, n: int, beta: int) -> "MatrixF":
        comp = np.zeros((n, n, beta))
        comp[np.arange(n), np.arange(n), 0] = 1.0
        return cls(comp, beta)

    @classmethod
    def zeros(cls, rows: int, cols: int, beta: int) -> "MatrixF":
        return cls(np.zeros((rows, cols, beta)), beta)

    @classmethod
    def from_real(cls, a, beta: int) -> "MatrixF":
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        comp = np.zeros(a.shape + (beta,))
        comp[..., 0] = a
        return cls(comp, beta)

    # basic properties -----------------------------------------------------
    @property
    def beta(self) -> int:
        return self.alg.beta

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def entry(self, i: int, j: int) -> Scalar:
        return Scalar(self.data[i, j])

    def conj_transpose(self) -> "MatrixF":
        return MatrixF(np.transpose(self.data, (1, 0, 2)) * _conj_sign(self.beta), self.beta)

    @property
    def H(self) -> "MatrixF":
        return self.conj_transpose()

    def real_part(self) -> np.ndarray:
        return self.data[..., 0].copy()

    def to_numpy(self) -> np.ndarray:
        """Real (beta=1) or complex (beta=2) ndarray view of the matrix."""
        if self.beta == 1:
            return self.data[..., 0].copy()
        if self.beta == 2:
            return self.data[..., 0] + 1j * self.data[..., 1]
        raise AlgebraError("to_numpy is only defined for beta in (1, 2); use complex_embedding")

    def rows_slice(self, start: int, stop: int) -> "MatrixF":
        return MatrixF(self.data[start:stop], self.beta)

    def vstack(self, other: "MatrixF") -> "MatrixF":
        if other.beta != self.beta or other.cols != self.cols:
            raise DimensionError("vstack needs equal column counts and algebras")
        return MatrixF(np.concatenate([self.data, other.data], axis=0), self.beta)

    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.sum(self.data ** 2)))

    # arithmetic -----------------------------------------------------------
    def _same(self, other: "MatrixF") -> None:
        if not isinstance(other, MatrixF):
            raise TypeError("expected MatrixF")
        if other.beta != self.beta:
            raise AlgebraError("matrices over different algebras")
        if other.shape != self.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "MatrixF") -> "MatrixF":
        self._same(other)
        return MatrixF(self.data + other.data, self.beta)

    def __sub__(self, other: "MatrixF") -> "MatrixF":
        self._same(other)
        return MatrixF(self.data - other.data, self.beta)

    def __neg__(self) -> "MatrixF":
        return MatrixF(-self.data, self.beta)

    def __mul__(self, s) -> "MatrixF":
        if isinstance(s, MatrixF):
            raise TypeError("use @ for matrix products")
        return MatrixF(self.data * float(s), self.beta)

    __rmul__ = __mul__

    def __truediv__(self, s) -> "MatrixF":
        return MatrixF(self.data / float(s), self.beta)

    def __matmul__(self, other: "MatrixF") -> "MatrixF":
        return mat_mul(self, other)

    def allclose(self, other: "MatrixF", atol: float = 1e-12) -> bool:
        return self.beta == other.beta and self.shape == other.shape and bool(
            np.allclose(self.data, other.data, rtol=0.0, atol=atol))

    def __repr__(self):
        return f"MatrixF(shape={self.shape}, beta={self.beta})"


def mat_mul(a: MatrixF, b: MatrixF) -> MatrixF:
    """Matrix product using the (possibly noncommutative) algebra multiplication."""
    if a.beta != b.beta:
        raise AlgebraError("matrices over different algebras")
    a.alg.require_numeric("matrix multiplication")
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    if a.beta == 1:
        return MatrixF((a.data[..., 0] @ b.data[..., 0])[:, :, None], 1)
    t = structure_constants(a.beta)
    return MatrixF(np.einsum("ilp,ljq,pqr->ijr", a.data, b.data, t, optimize=True), a.beta)


def complex_embedding(a: MatrixF) -> np.ndarray:
    """Quaternion ``n x m`` matrix to its ``2n x 2m`` complex adjoint.

    Each entry ``z1 + z2 j`` becomes the block ``[[z1, z2], [-conj(z2), conj(z1)]]``.
    """
    if a.beta != 4:
        raise AlgebraError("complex_embedding expects a quaternion matrix")
    z1 = a.data[..., 0] + 1j * a.data[..., 1]
    z2 = a.data[..., 2] + 1j * a.data[..., 3]
    n, m = a.shape
    out = np.empty((2 * n, 2 * m), dtype=complex)
    out[0::2, 0::2] = z1
    out[0::2, 1::2] = z2
    out[1::2, 0::2] = -np.conj(z2)
    out[1::2, 1::2] = np.conj(z1)
    return out


def complex_unembedding(c: np.ndarray) -> MatrixF:
    """Inverse of :func:`complex_embedding`; reads the top row of every block."""
    c = np.asarray(c, dtype=complex)
    if c.shape[0] % 2 or c.shape[1] % 2:
        raise DimensionError("complex adjoint must have even dimensions")
    z1 = c[0::2, 0::2]
    z2 = c[0::2, 1::2]
    return MatrixF(np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1), 4)


def _complexify(a: MatrixF) -> np.ndarray:
    if a.beta == 1:
        return a.data[..., 0]
    if a.beta == 2:
        return a.data[..., 0] + 1j * a.data[..., 1]
    return complex_embedding(a)


def realify(a: MatrixF) -> np.ndarray:
    """Real left-regular representation, a ``(beta*rows) x (beta*cols)`` real matrix.

    The map is an injective algebra homomorphism and sends ``A*`` to the transpose.
    """
    a.alg.require_numeric("realification")
    c = _complexify(a)
    if a.beta == 1:
        return np.array(c, dtype=float)
    return np.block([[c.real, -c.imag], [c.imag, c.real]])


def unrealify(r: np.ndarray, beta: int) -> MatrixF:
    """Inverse of :func:`realify` (reads the blocks that define the F-entries)."""
    r = np.asarray(r, dtype=float)
    if beta == 1:
        return MatrixF(r[:, :, None], 1)
    n2, m2 = r.shape[0] // 2, r.shape[1] // 2
    c = r[:n2, :m2] + 1j * r[n2:, :m2]
    if beta == 2:
        return MatrixF(np.stack([c.real, c.imag], axis=-1), 2)
    if beta == 4:
        return complex_unembedding(c)
    raise AlgebraError(f"no realification for beta={beta}")


def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, q)`` with ascending eigenvalues ``w`` and orthonormal columns
    ``q`` such that ``a = q diag(w) q.T``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    q = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), q
    scale = np.sqrt(np.sum(a * a)) or 1.0
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if abs(apr) <= 1e-18 * scale:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * apr)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                ar = a[:, r].copy()
                a[:, p] = c * ap - s * ar
                a[:, r] = s * ap + c * ar
                ap = a[p, :].copy()
                ar = a[r, :].copy()
                a[p, :] = c * ap - s * ar
                a[r, :] = s * ap + c * ar
                a[p, r] = a[r, p] = 0.0
                qp = q[:, p].copy()
                qr = q[:, r].copy()
                q[:, p] = c * qp - s * qr
                q[:, r] = s * qp + c * qr
    else:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], q[:, order]


def check_hermitian(s: MatrixF, rtol: float = HERMITIAN_RTOL) -> None:
    if s.rows != s.cols:
        raise DimensionError(f"expected a square matrix, got {s.shape}")
    s.alg.require_numeric("Hermitian linear algebra")
    diff = np.max(np.abs(s.data - s.conj_transpose().data), initial=0.0)
    scale = max(1.0, float(np.max(np.abs(s.data), initial=0.0)))
    if diff > rtol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (asymmetry {diff:.3e})")


def eigh_hermitian(s: MatrixF, check: bool = True):
    """Eigenvalues (ascending) and realified eigenvectors of a Hermitian matrix.

    The realified matrix has every eigenvalue repeated ``beta`` times; the
    returned eigenvalues keep one representative of each group.
    """
    if check:
        check_hermitian(s)
    r = realify(s)
    r = 0.5 * (r + r.T)
    w, q = jacobi_eigh(r)
    return w[:: s.beta].copy(), (w, q)


def eigvals_hermitian(s: MatrixF, check: bool = True) -> np.ndarray:
    return eigh_hermitian(s, check)[0]


def det_hermitian(s: MatrixF) -> float:
    """Determinant of a Hermitian matrix: the product of its ``m`` real eigenvalues."""
    return float(np.prod(eigvals_hermitian(s)))


def logdet_posdef(s: MatrixF) -> float:
    w = eigvals_hermitian(s)
    if w[0] <= 0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return float(np.sum(np.log(w)))


def _spectral_function(s: MatrixF, fn) -> MatrixF:
    check_hermitian(s)
    r = realify(s)
    w, q = jacobi_eigh(0.5 * (r + r.T))
    if w[0] <= 0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    out = (q * fn(w)) @ q.T
    return unrealify(0.5 * (out + out.T), s.beta)


def inv_posdef(s: MatrixF) -> MatrixF:
    return _spectral_function(s, lambda w: 1.0 / w)


def sqrt_posdef(s: MatrixF) -> MatrixF:
    """Hermitian positive definite square root."""
    return _spectral_function(s, np.sqrt)


def invsqrt_posdef(s: MatrixF) -> MatrixF:
    return _spectral_function(s, lambda w: 1.0 / np.sqrt(w))


def re_trace(a: MatrixF) -> float:
    """Real part of the trace."""
    if a.rows != a.cols:
        raise DimensionError(f"trace of a non-square {a.shape} matrix")
    return float(np.trace(a.data[..., 0]))


def herm_trace(*factors: MatrixF) -> float:
    """Real trace of a product chain; for Hermitian products this is the full trace."""
    if not factors:
        raise ValueError("need at least one factor")
    prod = factors[0]
    for f in factors[1:]:
        prod = prod @ f
    return re_trace(prod)


def inv_general(a: MatrixF, cond_limit: float = 1e12) -> MatrixF:
    """Inverse of a square (not necessarily Hermitian) matrix via its realification."""
    if a.rows != a.cols:
        raise DimensionError(f"cannot invert a non-square {a.shape} matrix")
    r = realify(a)
    if not np.all(np.isfinite(r)) or np.linalg.cond(r) > cond_limit:
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return unrealify(np.linalg.inv(r), a.beta)
