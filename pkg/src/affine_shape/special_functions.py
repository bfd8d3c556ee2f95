"""Partitions, multivariate gamma, generalised Pochhammer symbols, Stiefel volumes.

Every function here takes ``beta`` as a plain number, so the octonion case
``beta = 8`` is available wherever no matrix arithmetic is involved.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import DomainError

__all__ = [
    "Partition",
    "partitions_of",
    "iter_partitions",
    "dominates",
    "rising_factorial",
    "gen_pochhammer",
    "mv_gamma_ln",
    "stiefel_volume_ln",
    "unitary_group_volume_ln",
]

Partition = tuple
"""A partition is a non-increasing tuple of positive ints; ``()`` is the empty one."""


def _check_partition(kappa: Sequence[int]) -> tuple:
    parts = tuple(int(k) for k in kappa if k != 0)
    if any(k < 0 for k in parts) or any(a < b for a, b in zip(parts, parts[1:])):
        raise ValueError(f"not a partition: {kappa!r}")
    return parts


def iter_partitions(k: int, max_parts: int, max_part: int | None = None) -> Iterator[tuple]:
    """Partitions of ``k`` into at most ``max_parts`` parts, reverse lexicographic."""
    if max_part is None:
        max_part = k
    if k == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(k, max_part), 0, -1):
        # remaining mass must fit in max_parts - 1 parts no larger than `first`
        if first * max_parts < k:
            break
        for rest in iter_partitions(k - first, max_parts - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def partitions_of(k: int, max_parts: int) -> tuple:
    """All partitions of ``k`` with at most ``max_parts`` parts, reverse lexicographic.

    >>> partitions_of(4, 2)
    ((4,), (3, 1), (2, 2))
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if max_parts < 1:
        raise ValueError("max_parts must be at least 1")
    return tuple(iter_partitions(k, max_parts))


def dominates(kappa: Sequence[int], mu: Sequence[int]) -> bool:
    """True if ``mu <= kappa`` in dominance order (same weight assumed)."""
    s_k = s_m = 0
    for i in range(max(len(kappa), len(mu))):
        s_k += kappa[i] if i < len(kappa) else 0
        s_m += mu[i] if i < len(mu) else 0
        if s_m > s_k:
            return False
    return True


def rising_factorial(x: float, n: int) -> float:
    """``(x)_n = x (x + 1) ... (x + n - 1)``; exactly zero once a factor vanishes."""
    out = 1.0
    for i in range(n):
        f = x + i
        if f == 0:
            return 0.0
        out *= f
    return out


def gen_pochhammer(beta: float, a: float, kappa: Sequence[int]) -> float:
    """Generalised Pochhammer symbol ``prod_i (a - (i - 1) beta / 2)_{k_i}``."""
    out = 1.0
    for i, k in enumerate(_check_partition(kappa)):
        f = rising_factorial(a - i * beta / 2.0, k)
        if f == 0.0:
            return 0.0
        out *= f
    return out


def mv_gamma_ln(beta: float, m: int, a: float) -> float:
    """Log of the multivariate gamma function over Hermitian ``m x m`` matrices.

    ``Gamma_m[a] = pi^{m(m-1)beta/4} prod_{i=1}^m Gamma(a - (i-1) beta / 2)``,
    defined for ``a > (m - 1) beta / 2``.
    """
    if m < 1:
        raise DomainError("m must be a positive integer")
    if not a > (m - 1) * beta / 2.0:
        raise DomainError(f"multivariate gamma needs a > (m-1)beta/2 = {(m - 1) * beta / 2}; got {a}")
    out = m * (m - 1) * beta / 4.0 * math.log(math.pi)
    for i in range(m):
        out += math.lgamma(a - i * beta / 2.0)
    return out


def stiefel_volume_ln(beta: float, m: int, n: int) -> float:
    """Log volume of the Stiefel manifold of ``n x m`` semi-orthogonal matrices over F."""
    if m > n:
        raise DomainError(f"Stiefel manifold needs m <= n, got m={m}, n={n}")
    return m * math.log(2.0) + m * n * beta / 2.0 * math.log(math.pi) - mv_gamma_ln(beta, m, n * beta / 2.0)


def unitary_group_volume_ln(beta: float, m: int) -> float:
    return stiefel_volume_ln(beta, m, m)
