"""Configuration (affine shape) coordinates of landmark matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    MatrixF,
    inv_general,
    invsqrt_posdef,
    logdet_posdef,
)
from .errors import DegenerateConfigurationError, DimensionError

__all__ = [
    "helmert_submatrix",
    "ConfigurationCoordinates",
    "reduce_landmarks",
    "configuration_coords",
    "jacobian_log_factor",
]


def helmert_submatrix(N: int) -> np.ndarray:
    """``(N-1) x N`` Helmert sub-matrix: orthonormal rows, each orthogonal to ``1_N``.

    Row ``i`` (1-based) is ``(1, ..., 1, -i, 0, ..., 0) / sqrt(i (i + 1))``.
    """
    if N < 2:
        raise DimensionError("Helmert sub-matrix needs N >= 2")
    L = np.zeros((N - 1, N))
    for i in range(1, N):
        L[i - 1, :i] = 1.0
        L[i - 1, i] = -float(i)
        L[i - 1] /= math.sqrt(i * (i + 1))
    return L


@dataclass(frozen=True)
class ConfigurationCoordinates:
    """Affine shape ``V`` (``q x K``) of an ``N x K`` landmark matrix."""

    V: MatrixF

    @property
    def beta(self) -> int:
        return self.V.beta

    @property
    def q(self) -> int:
        return self.V.rows

    @property
    def K(self) -> int:
        return self.V.cols

    @property
    def N(self) -> int:
        return self.q + self.K + 1

    @property
    def U(self) -> MatrixF:
        """``(I_K | V*)*``, an ``(N-1) x K`` matrix whose top block is the identity."""
        return MatrixF.identity(self.K, self.beta).vstack(self.V)


def _as_coords(V) -> ConfigurationCoordinates:
    if isinstance(V, ConfigurationCoordinates):
        return V
    if isinstance(V, MatrixF):
        return ConfigurationCoordinates(V)
    raise TypeError("expected ConfigurationCoordinates or MatrixF")


def reduce_landmarks(X: MatrixF, Theta: MatrixF | None = None) -> MatrixF:
    """Whitened reduced landmarks ``Y = L X Theta^{-1/2}`` (translation removed)."""
    N, K = X.shape
    if N < K + 2:
        raise DimensionError(f"need N >= K + 2 landmarks (q >= 1); got N={N}, K={K}")
    L = MatrixF.from_real(helmert_submatrix(N), X.beta)
    Y = L @ X
    if Theta is not None:
        if Theta.shape != (K, K) or Theta.beta != X.beta:
            raise DimensionError("Theta must be K x K over the same algebra as X")
        Y = Y @ invsqrt_posdef(Theta)
    return Y


def configuration_coords(X: MatrixF, Theta: MatrixF | None = None) -> ConfigurationCoordinates:
    """Configuration coordinates ``V = Y2 Y1^{-1}`` of an ``N x K`` landmark matrix.

    A singular leading block ``Y1`` is a degenerate configuration and raises
    :class:`DegenerateConfigurationError`.
    """
    Y = reduce_landmarks(X, Theta)
    K = X.cols
    Y1 = Y.rows_slice(0, K)
    Y2 = Y.rows_slice(K, Y.rows)
    try:
        Y1inv = inv_general(Y1)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError("leading K x K block of L X is singular") from exc
    return ConfigurationCoordinates(Y2 @ Y1inv)


def jacobian_log_factor(F: MatrixF, beta: int, K: int, q: int) -> float:
    """Log of ``2^{-K} |F|^{beta (q+1)/2 - 1}``, the density factor of ``Y = U F^{1/2} H``."""
    if F.shape != (K, K):
        raise DimensionError("F must be K x K")
    return -K * math.log(2.0) + (beta * (q + 1) / 2.0 - 1.0) * logdet_posdef(F)
