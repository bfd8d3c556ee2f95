"""Jack polynomials in the C normalisation, stored as monomial expansions.

For ``alpha = 2 / beta`` the monic Jack polynomial ``P_kappa`` is expanded in
monomial symmetric functions ``m_mu`` (``mu`` dominated by ``kappa``) with the
coefficient recursion derived from the Laplace-Beltrami eigen-operator:

    c[kappa, mu] = (2/alpha) / (rho(kappa) - rho(mu))
                   * sum_{i<j, 1<=t<=mu_j} (mu_i - mu_j + 2t) c[kappa, raise(mu, i, j, t)]

with ``rho(kappa) = sum_i k_i (k_i - 1 - (2/alpha)(i - 1))``.  All terms are
positive, so the recursion is numerically benign in floating point.  The C
normalisation multiplies ``P_kappa`` by ``alpha^k k! / prod_s (alpha(a(s)+1) + l(s))``
which makes the polynomials of each weight sum to ``(trace)^k``.

Coefficients involving only partitions with at most ``m`` parts do not depend
on the parts beyond ``m``, so a table built for ``max_parts = m`` is exact for
matrices of order ``m``.
"""

from __future__ import annotations

import json
import math
import os
import threading
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError
from .special_functions import dominates, partitions_of

__all__ = [
    "JackTable",
    "jack_table",
    "jack_c",
    "monomial",
    "c_normaliser",
    "CACHE_ENV",
    "FORMAT_VERSION",
]

CACHE_ENV = "AFFINE_SHAPE_JACK_CACHE"
FORMAT_VERSION = 1
DEFAULT_MAX_WEIGHT = 25


def _beta_key(beta) -> Fraction:
    return Fraction(beta).limit_denominator(1000)


def _rho(kappa: tuple, alpha: float) -> float:
    return sum(k * (k - 1 - (2.0 / alpha) * i) for i, k in enumerate(kappa))


def c_normaliser(kappa: tuple, alpha: float) -> float:
    """Factor turning ``P_kappa`` into ``C_kappa``."""
    k = sum(kappa)
    conj = [sum(1 for p in kappa if p > j) for j in range(kappa[0])] if kappa else []
    log_hooks = 0.0
    for i, row in enumerate(kappa):
        for j in range(row):
            arm = row - j - 1
            leg = conj[j] - i - 1
            log_hooks += math.log(alpha * (arm + 1) + leg)
    return math.exp(k * math.log(alpha) + math.lgamma(k + 1) - log_hooks)


def _raisings(mu: tuple):
    """Partitions reached from ``mu`` by moving ``t`` boxes from row j to row i < j."""
    n = len(mu)
    for i in range(n - 1):
        for j in range(i + 1, n):
            for t in range(1, mu[j] + 1):
                lam = list(mu)
                lam[i] += t
                lam[j] -= t
                lam = tuple(sorted((p for p in lam if p), reverse=True))
                yield lam, mu[i] - mu[j] + 2 * t


def _p_coefficients(kappa: tuple, alpha: float, max_parts: int) -> dict:
    coef = {kappa: 1.0}
    rho_k = _rho(kappa, alpha)
    # reverse lex order is a linear extension of dominance, so every raising
    # of mu has already been visited when mu is reached
    for mu in partitions_of(sum(kappa), max_parts):
        if mu >= kappa or not dominates(kappa, mu):
            continue
        acc = 0.0
        for lam, weight in _raisings(mu):
            c = coef.get(lam)
            if c is not None:
                acc += weight * c
        if acc != 0.0:
            coef[mu] = (2.0 / alpha) * acc / (rho_k - _rho(mu, alpha))
    return coef


@lru_cache(maxsize=None)
def _exponent_vectors(mu: tuple, n: int) -> np.ndarray:
    padded = tuple(mu) + (0,) * (n - len(mu))
    return np.array(sorted(set(permutations(padded))), dtype=float).reshape(-1, n)


def monomial(mu: Sequence[int], x) -> float:
    """Monomial symmetric function ``m_mu`` at the point ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    mu = tuple(mu)
    if len(mu) > n:
        return 0.0
    if not mu:
        return 1.0
    exps = _exponent_vectors(mu, n)
    return float(np.sum(np.prod(x[None, :] ** exps, axis=1)))


class JackTable:
    """Monomial expansions of ``C_kappa`` for all ``|kappa| <= max_weight``.

    Weights are built lazily and in ascending order; after a weight is built
    its entry is never modified, so concurrent readers are safe.
    """

    def __init__(self, beta, max_weight: int = DEFAULT_MAX_WEIGHT, max_parts: int = 4):
        self.beta = _beta_key(beta)
        if self.beta <= 0:
            raise DomainError("beta must be positive")
        self.alpha = 2.0 / float(self.beta)
        self.max_weight = int(max_weight)
        self.max_parts = int(max_parts)
        self._weights: dict[int, dict] = {}
        self._lock = threading.Lock()

    def coefficients(self, k: int) -> dict:
        """``{kappa: {mu: coefficient}}`` for partitions of weight ``k``."""
        if k > self.max_weight:
            raise DomainError(f"weight {k} exceeds the table limit {self.max_weight}")
        table = self._weights.get(k)
        if table is None:
            with self._lock:
                table = self._weights.get(k)
                if table is None:
                    table = {}
                    for kappa in partitions_of(k, self.max_parts):
                        norm = c_normaliser(kappa, self.alpha)
                        p = _p_coefficients(kappa, self.alpha, self.max_parts)
                        table[kappa] = {mu: norm * c for mu, c in p.items()}
                    self._weights[k] = table
        return table

    def weight_matrix(self, k: int):
        """Partitions, monomial index and dense coefficient matrix for weight ``k``."""
        parts = partitions_of(k, self.max_parts)
        index = {mu: i for i, mu in enumerate(parts)}
        coef = self.coefficients(k)
        mat = np.zeros((len(parts), len(parts)))
        for r, kappa in enumerate(parts):
            for mu, c in coef[kappa].items():
                mat[r, index[mu]] = c
        return parts, mat

    def evaluate_weight(self, k: int, x) -> dict:
        """``{kappa: C_kappa(x)}`` for every ``kappa`` of weight ``k``."""
        x = np.asarray(x, dtype=float)
        n = x.size
        if n > self.max_parts:
            raise DomainError(f"{n} eigenvalues but the table only holds {self.max_parts} parts")
        parts, mat = self.weight_matrix(k)
        mono = np.array([monomial(mu, x) for mu in parts])
        vals = mat @ mono
        return {kappa: float(v) for kappa, v in zip(parts, vals)}

    def evaluate(self, kappa: Sequence[int], x) -> float:
        kappa = tuple(int(p) for p in kappa if p)
        x = np.asarray(x, dtype=float)
        if len(kappa) > x.size:
            return 0.0
        coef = self.coefficients(sum(kappa))[kappa]
        return float(sum(c * monomial(mu, x) for mu, c in coef.items()))

    # persistence ----------------------------------------------------------
    def to_json(self) -> dict:
        tables = {}
        for k in range(self.max_weight + 1):
            for kappa, row in self.coefficients(k).items():
                tables[_pstr(kappa)] = {_pstr(mu): c for mu, c in row.items()}
        return {
            "format_version": FORMAT_VERSION,
            "beta": str(self.beta),
            "max_weight": self.max_weight,
            "max_parts": self.max_parts,
            "tables": tables,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "JackTable":
        if obj.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
            raise ValueError("unsupported Jack table format version")
        table = cls(Fraction(obj["beta"]), obj["max_weight"], obj.get("max_parts", 4))
        by_weight: dict[int, dict] = {}
        for ks, row in obj["tables"].items():
            kappa = _pparse(ks)
            by_weight.setdefault(sum(kappa), {})[kappa] = {_pparse(m): float(c) for m, c in row.items()}
        table._weights = by_weight
        return table

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "JackTable":
        return cls.from_json(json.loads(Path(path).read_text()))


def _pstr(p: tuple) -> str:
    return ",".join(str(x) for x in p)


def _pparse(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x)


_TABLES: dict = {}
_TABLES_LOCK = threading.Lock()


def _cache_path(beta: Fraction, max_weight: int, max_parts: int):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    name = f"jack_beta{beta.numerator}-{beta.denominator}_w{max_weight}_p{max_parts}.json"
    return Path(root) / name


def jack_table(beta, max_parts: int, max_weight: int = DEFAULT_MAX_WEIGHT) -> JackTable:
    """Shared table for ``(beta, max_parts)`` holding at least ``max_weight``.

    When the environment variable ``AFFINE_SHAPE_JACK_CACHE`` names a directory,
    tables are read from and written to JSON files there.
    """
    key = (_beta_key(beta), max(1, int(max_parts)))
    with _TABLES_LOCK:
        table = _TABLES.get(key)
        if table is not None and table.max_weight >= max_weight:
            return table
        path = _cache_path(key[0], max_weight, key[1])
        if path is not None and path.exists():
            table = JackTable.load(path)
        else:
            new = JackTable(key[0], max_weight, key[1])
            if table is not None:
                new._weights.update(table._weights)
            table = new
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                table.save(path)
        _TABLES[key] = table
        return table


def jack_c(beta, kappa: Sequence[int], eigenvalues, max_weight: int = DEFAULT_MAX_WEIGHT) -> float:
    """C-normalised Jack polynomial ``C_kappa^beta`` evaluated at the given eigenvalues."""
    kappa = tuple(int(p) for p in kappa if p)
    x = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    k = sum(kappa)
    if k > max_weight:
        raise DomainError(f"weight {k} exceeds the table limit {max_weight}")
    if len(kappa) > x.size:
        return 0.0
    if x.size == 1:
        return float(x[0] ** k)
    return jack_table(beta, x.size, max(max_weight, k)).evaluate(kappa, x)
