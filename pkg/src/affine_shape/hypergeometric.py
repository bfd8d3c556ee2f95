"""Hypergeometric functions of one Hermitian matrix argument.

    pFq(a; b; X) = sum_k sum_{kappa |- k} prod[a_i]_kappa / prod[b_j]_kappa * C_kappa(X) / k!

The series is summed shell by shell (one shell per weight ``k``), partitions
in reverse lexicographic order, each shell with exactly rounded summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .jack import jack_table
from .special_functions import gen_pochhammer, partitions_of

__all__ = [
    "HypergeometricSpec",
    "HypergeometricResult",
    "hypergeometric_matrix",
    "hypergeometric_series",
    "termination_weight",
    "DEFAULT_MAX_WEIGHT",
    "DEFAULT_TOL",
]

DEFAULT_MAX_WEIGHT = 40
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class HypergeometricSpec:
    upper: tuple = ()
    lower: tuple = ()
    beta: float = 1.0
    max_weight: int = DEFAULT_MAX_WEIGHT
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(a) for a in self.upper))
        object.__setattr__(self, "lower", tuple(float(b) for b in self.lower))
        if self.max_weight < 0:
            raise ValueError("max_weight must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class HypergeometricResult:
    value: float
    error_estimate: float
    shells: list = field(default_factory=list)
    terminated: bool = False

    def __float__(self):
        return self.value


def termination_weight(spec: HypergeometricSpec, m: int):
    """Largest weight with a nonzero term when some upper parameter is a nonpositive integer.

    ``(a)_{k_1}`` vanishes for ``k_1 > -a``, so no partition with at most
    ``m`` parts and weight above ``-a m`` contributes.  Returns ``None`` for
    non-terminating series.
    """
    caps = [int(round(-a)) for a in spec.upper if a <= 0 and float(a).is_integer()]
    if not caps:
        return None
    return min(caps) * m


def _coefficient(spec: HypergeometricSpec, kappa: tuple) -> float:
    num = 1.0
    for a in spec.upper:
        num *= gen_pochhammer(spec.beta, a, kappa)
        if num == 0.0:
            return 0.0
    den = 1.0
    for b in spec.lower:
        den *= gen_pochhammer(spec.beta, b, kappa)
    if den == 0.0:
        raise DomainError(f"lower parameter pole reached at partition {kappa}")
    return num / den


def _shell_values(spec: HypergeometricSpec, k: int, x: np.ndarray) -> list:
    m = x.size
    if m == 1:
        return [((k,) if k else (), float(x[0]) ** k)]
    table = jack_table(spec.beta, m, max(k, 1))
    return list(table.evaluate_weight(k, x).items())


def _tail_estimate(shells: list) -> float:
    """Last shell magnitude, inflated by a geometric tail when shells are shrinking."""
    last = abs(shells[-1])
    if len(shells) < 2 or shells[-2] == 0.0:
        return last
    r = last / abs(shells[-2])
    return last / (1.0 - r) if r < 1.0 else float("inf")


def hypergeometric_series(spec: HypergeometricSpec, eigenvalues) -> HypergeometricResult:
    """Evaluate the series and report its shells and a truncation error estimate.

    Zero eigenvalues are dropped (partitions with more parts than nonzero
    eigenvalues contribute nothing).  Terminating series are summed exactly
    to their last nonzero shell regardless of ``spec.max_weight``.  For other
    series the summation stops after two consecutive shells whose estimated
    remainder (last shell plus a geometric tail) is below ``spec.tol``
    relative to the running sum, or at ``spec.max_weight``.
    """
    x = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    x = x[x != 0.0]
    m = x.size
    if m == 0:
        return HypergeometricResult(1.0, 0.0, [1.0], True)
    cap = termination_weight(spec, m)
    last = cap if cap is not None else spec.max_weight
    shells: list[float] = []
    small_run = 0
    for k in range(last + 1):
        log_kfact = math.lgamma(k + 1)
        terms = []
        for kappa, c in _shell_values(spec, k, x):
            if c == 0.0:
                continue
            coef = _coefficient(spec, kappa)
            if coef != 0.0:
                terms.append(coef * c / math.exp(log_kfact))
        shells.append(math.fsum(terms))
        if cap is None:
            total = math.fsum(shells)
            if _tail_estimate(shells) <= spec.tol * abs(total):
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
    value = math.fsum(shells)
    if cap is not None and len(shells) == cap + 1:
        return HypergeometricResult(value, 0.0, shells, True)
    tail = _tail_estimate(shells)
    err = tail / abs(value) if value != 0 else tail
    return HypergeometricResult(value, err, shells, False)


def hypergeometric_matrix(spec: HypergeometricSpec, eigenvalues, full_output: bool = False):
    """``pFq`` at a Hermitian matrix given by its eigenvalues.

    Raises :class:`ConvergenceError` if a non-terminating series has not reached
    ``spec.tol`` by ``spec.max_weight``.
    """
    res = hypergeometric_series(spec, eigenvalues)
    if not res.terminated and res.error_estimate > spec.tol:
        raise ConvergenceError(
            f"hypergeometric series not converged after {len(res.shells) - 1} shells "
            f"(remainder estimate {res.error_estimate:.2e} > tol {spec.tol:.1e})")
    return res if full_output else res.value
