"""Affine shape densities under matrix-variate elliptical models.

Notation used throughout: ``U = (I_K | V*)*``, ``W = U* Sigma^{-1} U``,
``a = beta (N-1) / 2`` and ``D = beta K (N-1)``.  The noncentrality is
``Omega = Sigma^{-1} mu Theta^{-1} mu*`` and the Jack polynomials are
evaluated at the eigenvalues of ``U* Omega Sigma^{-1} U W^{-1}``, obtained
from the Hermitian matrix ``W^{-1/2} (U* Omega Sigma^{-1} U) W^{-1/2}`` that
has the same spectrum.

The general density is

    f(V) = pi^{beta K^2/2} Gamma_K[a] / (Gamma_K[beta K/2] |Sigma|^{beta K/2} |W|^a)
           * sum_t sum_r (tr Omega)^r / (t! r! Gamma(D/2 + t))
             * sum_{tau |- t} [a]_tau / [beta K/2]_tau C_tau(G) gamma(t, r)

with ``gamma(t, r) = int_0^inf h^{(2t+r)}(z) z^{D/2+t-1} dz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    MatrixF,
    check_hermitian,
    eigvals_hermitian,
    inv_posdef,
    invsqrt_posdef,
    logdet_posdef,
    re_trace,
)
from .errors import ConvergenceError, DimensionError, DomainError
from .generators import GaussianGenerator, GeneratorFamily
from .hypergeometric import HypergeometricSpec, hypergeometric_series
from .jack import jack_table
from .shape import ConfigurationCoordinates, _as_coords, helmert_submatrix
from .special_functions import gen_pochhammer, mv_gamma_ln

__all__ = [
    "Truncation",
    "EllipticalShapeModel",
    "noncentrality",
    "log_density_central",
    "density_central",
    "log_density_general",
    "density_general",
    "log_density_isotropic",
    "density_isotropic",
    "log_density_gaussian",
    "density_gaussian",
    "gaussian_gamma_closed",
]


@dataclass(frozen=True)
class Truncation:
    """Budgets for the triple series of the general density."""

    max_t: int = 12
    max_r: int = 12
    max_shell: int = 20
    tol: float = 1e-10

    def __post_init__(self):
        if min(self.max_t, self.max_r, self.max_shell) < 0 or not self.tol > 0:
            raise ValueError("truncation budgets must be nonnegative and tol positive")


@dataclass(frozen=True)
class EllipticalShapeModel:
    """Parameters of the reduced model ``Y ~ E(mu, Sigma (x) Theta, h)``.

    ``mu`` is the reduced ``(N-1) x K`` location ``L mu_X`` and ``Sigma`` the
    reduced ``(N-1) x (N-1)`` scale ``L Sigma_X L*``.
    """

    N: int
    K: int
    beta: int
    mu: MatrixF
    Sigma: MatrixF
    Theta: MatrixF
    generator: GeneratorFamily = field(default=None)

    def __post_init__(self):
        if self.q < 1:
            raise DimensionError(f"need q = N - K - 1 >= 1, got N={self.N}, K={self.K}")
        n1 = self.N - 1
        if self.mu.shape != (n1, self.K):
            raise DimensionError(f"mu must be {(n1, self.K)}, got {self.mu.shape}")
        if self.Sigma.shape != (n1, n1) or self.Theta.shape != (self.K, self.K):
            raise DimensionError("Sigma must be (N-1)x(N-1) and Theta K x K")
        for m in (self.mu, self.Sigma, self.Theta):
            if m.beta != self.beta:
                raise DimensionError("all parameters must share the model's algebra")
        check_hermitian(self.Sigma)
        check_hermitian(self.Theta)
        if self.generator is None:
            object.__setattr__(self, "generator",
                               GaussianGenerator(self.beta, self.beta * self.K * (self.N - 1)))

    @property
    def q(self) -> int:
        return self.N - self.K - 1

    @classmethod
    def from_landmark_parameters(cls, mu_X: MatrixF, Sigma_X: MatrixF, Theta: MatrixF,
                                 generator: GeneratorFamily | None = None):
        """Reduce landmark-level ``mu_X`` (N x K) and ``Sigma_X`` (N x N) with the Helmert matrix."""
        N, K = mu_X.shape
        L = MatrixF.from_real(helmert_submatrix(N), mu_X.beta)
        return cls(N, K, mu_X.beta, L @ mu_X, L @ Sigma_X @ L.H, Theta, generator)

    @classmethod
    def isotropic(cls, mu: MatrixF, sigma2: float, Theta: MatrixF | None = None,
                  generator: GeneratorFamily | None = None):
        n1, K = mu.shape
        Theta = Theta if Theta is not None else MatrixF.identity(K, mu.beta)
        Sigma = MatrixF.identity(n1, mu.beta) * sigma2
        return cls(n1 + 1, K, mu.beta, mu, Sigma, Theta, generator)


def _check_dims(c: ConfigurationCoordinates, N: int, K: int, beta: int) -> None:
    if (c.N, c.K, c.beta) != (N, K, beta):
        raise DimensionError(f"V has (N, K, beta) = {(c.N, c.K, c.beta)}, model expects {(N, K, beta)}")


def noncentrality(mu: MatrixF, Sigma_inv: MatrixF, Theta_inv: MatrixF) -> MatrixF:
    """``Omega = Sigma^{-1} mu Theta^{-1} mu*``."""
    return Sigma_inv @ mu @ Theta_inv @ mu.H


def _log_constant(beta: float, N: int, K: int) -> float:
    """``log Gamma_K[a] - (beta K q/2) log pi - log Gamma_K[beta K/2]``."""
    q = N - K - 1
    a = beta * (N - 1) / 2.0
    return (mv_gamma_ln(beta, K, a) - beta * K * q / 2.0 * math.log(math.pi)
            - mv_gamma_ln(beta, K, beta * K / 2.0))


def _spectrum_of_ratio(A: MatrixF, W: MatrixF) -> np.ndarray:
    """Eigenvalues of ``A W^{-1}`` for Hermitian ``A`` and positive definite ``W``."""
    Wi = invsqrt_posdef(W)
    S = Wi @ A @ Wi
    S = MatrixF(0.5 * (S.data + S.H.data), S.beta)
    w = eigvals_hermitian(S)
    # psd argument: clip round-off below zero
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    return np.where(np.abs(w) <= 1e-14 * scale, 0.0, w)


def log_density_central(V, Sigma: MatrixF, beta: int | None = None, N: int | None = None,
                        K: int | None = None) -> float:
    """Log of the central affine shape density (independent of the generator)."""
    c = _as_coords(V)
    beta = c.beta if beta is None else beta
    N = c.N if N is None else N
    K = c.K if K is None else K
    _check_dims(c, N, K, beta)
    U = c.U
    W = U.H @ inv_posdef(Sigma) @ U
    a = beta * (N - 1) / 2.0
    return (_log_constant(beta, N, K) - beta * K / 2.0 * logdet_posdef(Sigma)
            - a * logdet_posdef(_hermitize(W)))


def density_central(V, Sigma: MatrixF, beta: int | None = None, N: int | None = None,
                    K: int | None = None) -> float:
    return math.exp(log_density_central(V, Sigma, beta, N, K))


def _hermitize(S: MatrixF) -> MatrixF:
    return MatrixF(0.5 * (S.data + S.H.data), S.beta)


def _jack_shell(beta: float, a: float, b: float, t: int, g: np.ndarray) -> float:
    """``sum_{tau |- t} [a]_tau / [b]_tau C_tau(g)`` over partitions with at most len(g) parts."""
    if t == 0:
        return 1.0
    if g.size == 0:
        return 0.0
    if g.size == 1:
        return gen_pochhammer(beta, a, (t,)) / gen_pochhammer(beta, b, (t,)) * float(g[0]) ** t
    vals = jack_table(beta, g.size, t).evaluate_weight(t, g)
    terms = [gen_pochhammer(beta, a, kappa) / gen_pochhammer(beta, b, kappa) * c
             for kappa, c in vals.items() if c != 0.0]
    return math.fsum(terms)


def _series(beta: float, N: int, K: int, g: np.ndarray, trace_omega: float,
            generator: GeneratorFamily, trunc: Truncation) -> float:
    """``sum_t sum_r`` part of the general density (without the prefactor)."""
    a = beta * (N - 1) / 2.0
    b = beta * K / 2.0
    g = g[g != 0.0]
    shells: list[float] = []
    small = 0
    t_budget = min(trunc.max_t, trunc.max_shell)
    converged = False
    for t in range(t_budget + 1):
        jack = _jack_shell(beta, a, b, t, g)
        if jack == 0.0:
            shells.append(0.0)
        else:
            rsum = _r_series(t, trace_omega, generator, trunc)
            shells.append(jack / math.factorial(t) * rsum)
        total = math.fsum(shells)
        if t > 0 and abs(shells[-1]) <= trunc.tol * abs(total):
            small += 1
            if small >= 2:
                converged = True
                break
        else:
            small = 0
    if not converged:
        raise ConvergenceError(f"density series did not reach tol {trunc.tol:.1e} within "
                               f"{t_budget} t-shells")
    return math.fsum(shells)


def _r_series(t: int, c: float, generator: GeneratorFamily, trunc: Truncation) -> float:
    if c == 0.0:
        return generator.scaled_gamma(t, 0)
    terms: list[float] = []
    small = 0
    log_c = math.log(abs(c))
    for r in range(trunc.max_r + 1):
        gam = generator.scaled_gamma(t, r)
        term = math.copysign(math.exp(r * log_c - math.lgamma(r + 1)), c ** r) * gam
        terms.append(term)
        if r > 0 and abs(term) <= trunc.tol * abs(math.fsum(terms)):
            small += 1
            if small >= 2:
                return math.fsum(terms)
        else:
            small = 0
    raise ConvergenceError(f"r-series for t={t} did not reach tol {trunc.tol:.1e} within "
                           f"{trunc.max_r} terms")


def log_density_general(V, model: EllipticalShapeModel, truncation: Truncation | None = None) -> float:
    """Log of the noncentral, non-isotropic affine shape density for any generator."""
    trunc = truncation or Truncation()
    c = _as_coords(V)
    beta, N, K = model.beta, model.N, model.K
    _check_dims(c, N, K, beta)
    U = c.U
    Sinv = inv_posdef(model.Sigma)
    W = _hermitize(U.H @ Sinv @ U)
    Omega = noncentrality(model.mu, Sinv, inv_posdef(model.Theta))
    B = U.H @ Sinv @ model.mu @ invsqrt_posdef(model.Theta)
    g = _spectrum_of_ratio(_hermitize(B @ B.H), W)
    a = beta * (N - 1) / 2.0
    prefix = (beta * K * K / 2.0 * math.log(math.pi) + mv_gamma_ln(beta, K, a)
              - mv_gamma_ln(beta, K, beta * K / 2.0) - beta * K / 2.0 * logdet_posdef(model.Sigma)
              - a * logdet_posdef(W))
    s = _series(beta, N, K, g, re_trace(Omega), model.generator, trunc)
    if not s > 0:
        raise ConvergenceError(f"density series summed to a non-positive value {s!r}")
    return prefix + math.log(s)


def density_general(V, model: EllipticalShapeModel, truncation: Truncation | None = None) -> float:
    return math.exp(log_density_general(V, model, truncation))


def log_density_isotropic(V, mu: MatrixF, Theta: MatrixF, sigma2: float,
                          generator: GeneratorFamily | None = None,
                          truncation: Truncation | None = None) -> float:
    """Log density for ``Sigma = sigma2 I``, written with ``|I + V* V|``."""
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    trunc = truncation or Truncation()
    c = _as_coords(V)
    beta, K = c.beta, c.K
    N = mu.rows + 1
    _check_dims(c, N, K, beta)
    if generator is None:
        generator = GaussianGenerator(beta, beta * K * (N - 1))
    U = c.U
    IVV = _hermitize(MatrixF.identity(K, beta) + c.V.H @ c.V)
    Omega1 = mu @ inv_posdef(Theta) @ mu.H / sigma2
    g = _spectrum_of_ratio(_hermitize(U.H @ Omega1 @ U), IVV)
    a = beta * (N - 1) / 2.0
    prefix = (beta * K * K / 2.0 * math.log(math.pi) + mv_gamma_ln(beta, K, a)
              - mv_gamma_ln(beta, K, beta * K / 2.0) - a * logdet_posdef(IVV))
    s = _series(beta, N, K, g, re_trace(Omega1), generator, trunc)
    if not s > 0:
        raise ConvergenceError(f"density series summed to a non-positive value {s!r}")
    return prefix + math.log(s)


def density_isotropic(V, mu, Theta, sigma2, generator=None, truncation=None) -> float:
    return math.exp(log_density_isotropic(V, mu, Theta, sigma2, generator, truncation))


def log_density_gaussian(V, mu: MatrixF, Sigma: MatrixF, Theta: MatrixF | None = None,
                         max_weight: int = 200, tol: float = 1e-12) -> float:
    """Closed-form log density of the Gaussian affine shape model.

    Uses ``etr{-beta (Omega - G)/2} 1F1(-beta q/2; beta K/2; -beta G/2)`` when the
    confluent series terminates (``beta q / 2`` an integer), otherwise the
    equivalent positive series ``etr{-beta Omega/2} 1F1(a; beta K/2; beta G/2)``.
    """
    c = _as_coords(V)
    beta, K = c.beta, c.K
    N = mu.rows + 1
    _check_dims(c, N, K, beta)
    if Theta is None:
        Theta = MatrixF.identity(K, beta)
    q = N - K - 1
    U = c.U
    Sinv = inv_posdef(Sigma)
    W = _hermitize(U.H @ Sinv @ U)
    B = U.H @ Sinv @ mu @ invsqrt_posdef(Theta)
    g = _spectrum_of_ratio(_hermitize(B @ B.H), W)
    tr_omega = re_trace(noncentrality(mu, Sinv, inv_posdef(Theta)))
    a = beta * (N - 1) / 2.0
    base = (_log_constant(beta, N, K) - beta * K / 2.0 * logdet_posdef(Sigma)
            - a * logdet_posdef(W))
    return base + _log_gaussian_factor(beta, q, K, N, g, tr_omega, max_weight, tol)


def _log_gaussian_factor(beta, q, K, N, g, tr_omega, max_weight, tol) -> float:
    upper = -beta * q / 2.0
    if float(upper).is_integer():
        spec = HypergeometricSpec((upper,), (beta * K / 2.0,), beta, max_weight, tol)
        res = hypergeometric_series(spec, -beta * g / 2.0)
        expo = -beta * (tr_omega - float(np.sum(g))) / 2.0
    else:
        spec = HypergeometricSpec((beta * (N - 1) / 2.0,), (beta * K / 2.0,), beta, max_weight, tol)
        res = hypergeometric_series(spec, beta * g / 2.0)
        if res.error_estimate > tol:
            raise ConvergenceError(f"1F1 series not converged (estimate {res.error_estimate:.2e})")
        expo = -beta * tr_omega / 2.0
    if not res.value > 0:
        raise ConvergenceError(f"1F1 evaluated to a non-positive value {res.value!r}")
    return expo + math.log(res.value)


def density_gaussian(V, mu, Sigma, Theta=None, max_weight: int = 200, tol: float = 1e-12) -> float:
    return math.exp(log_density_gaussian(V, mu, Sigma, Theta, max_weight, tol))


def gaussian_gamma_closed(beta: float, K: int, N: int, t: int, r: int):
    """``gamma(t, r)`` for the Gaussian generator as ``(log|gamma|, sign)``.

    ``Gamma(beta K (N-1)/2 + t) / pi^{beta K (N-1)/2} (-beta/2)^r (beta/2)^t``.
    """
    if t < 0 or r < 0:
        raise DomainError("t and r must be nonnegative")
    p = beta * K * (N - 1) / 2.0
    log_mag = math.lgamma(p + t) - p * math.log(math.pi) + (t + r) * math.log(beta / 2.0)
    return log_mag, (-1.0) ** r
