"""Generator functions ``h`` of matrix-variate elliptical laws.

A generator is tied to the real dimension ``D = beta * K * (N - 1)`` of the
matrix it describes: the density of ``Y`` with ``Sigma = I`` is ``h(tr Y Y*)``
and the normalisation ``int_0^inf h(z) z^{D/2 - 1} dz = Gamma(D/2) / pi^{D/2}``
holds for every family shipped here.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError

__all__ = [
    "GeneratorFamily",
    "GaussianGenerator",
    "KotzGenerator",
    "MatrixTGenerator",
    "CustomGenerator",
    "gamma_integral_quadrature",
    "semi_infinite_quad",
]


class GeneratorFamily:
    """Base class: subclasses implement :meth:`derivative`.

    ``closed_gamma(t, r)`` may return ``log|gamma| - lgamma(D/2 + t)`` and the
    sign of ``gamma(t, r) = int_0^inf h^{(2t+r)}(z) z^{D/2+t-1} dz``;
    ``None`` means "use quadrature".
    """

    name = "generator"
    max_order: int | None = None
    samplable = False

    def __init__(self, beta: float, dim: int):
        if dim <= 0:
            raise DomainError("generator dimension must be positive")
        self.beta = beta
        self.dim = int(dim)

    @property
    def params(self) -> dict:
        return {}

    def derivative(self, n: int, z):
        raise NotImplementedError

    def __call__(self, z):
        return self.derivative(0, z)

    def check_order(self, n: int) -> None:
        if self.max_order is not None and n > self.max_order:
            raise DomainError(f"{self.name} generator provides derivatives up to order "
                              f"{self.max_order}, order {n} requested")

    def scale_hint(self, power: float) -> float:
        """Rough location of the peak of ``|h(z)| z^{power-1}``, used to split quadrature."""
        return max(1.0, power)

    def closed_gamma(self, t: int, r: int):
        return None

    def scaled_gamma(self, t: int, r: int) -> float:
        """``gamma(t, r) / Gamma(D/2 + t)``, closed form when available.

        Quadrature results are memoised per instance.
        """
        closed = self.closed_gamma(t, r)
        if closed is not None:
            log_mag, sign = closed
            return sign * math.exp(log_mag)
        cache = self.__dict__.setdefault("_gamma_cache", {})
        key = (t, r)
        if key not in cache:
            cache[key] = gamma_integral_quadrature(self, t, r)
        return cache[key]

    def check_finite(self, normalised: bool = True) -> None:
        """Check the generator's radial integral is finite (and, optionally, normalised)."""
        p = self.dim / 2.0
        try:
            val = semi_infinite_quad(
                lambda z: self.derivative(0, z) * np.exp((p - 1) * np.log(z) - math.lgamma(p)),
                self.scale_hint(p))
        except ConvergenceError as exc:
            raise DomainError(f"{self.name} generator has no finite radial integral "
                              f"in dimension {self.dim}") from exc
        if not normalised:
            return
        target = math.exp(-p * math.log(math.pi))
        if not np.isfinite(val) or abs(val - target) > 1e-6 * target:
            raise DomainError(f"{self.name} generator is not normalised in dimension {self.dim}: "
                              f"radial integral {val!r}, expected {target!r}")


class GaussianGenerator(GeneratorFamily):
    """``h(v) = (2 pi / beta)^{-D/2} exp(-beta v / 2)``, so each real component has variance 1/beta."""

    name = "gaussian"
    samplable = True

    def derivative(self, n: int, z):
        z = np.asarray(z, dtype=float)
        b = self.beta
        log_c = -self.dim / 2.0 * math.log(2.0 * math.pi / b)
        return (-b / 2.0) ** n * np.exp(log_c - b * z / 2.0)

    def scale_hint(self, power: float) -> float:
        return max(2.0 * power / self.beta, 1e-3)

    def closed_gamma(self, t: int, r: int):
        return gaussian_gamma_scaled(self.beta, self.dim, t, r)


def gaussian_gamma_scaled(beta: float, dim: int, t: int, r: int):
    """``log|gamma| - lgamma(D/2 + t)`` and sign for the Gaussian generator."""
    log_mag = -dim / 2.0 * math.log(math.pi) + (t + r) * math.log(beta / 2.0)
    return log_mag, (-1.0) ** r


class KotzGenerator(GeneratorFamily):
    """Kotz-type generator ``h(v) = c v^{s-1} exp(-rate v)`` with integer shape ``s >= 1``.

    ``shape = 1, rate = beta/2`` is the Gaussian generator.  Derivatives come
    from the Leibniz rule on the polynomial-times-exponential product.
    """

    name = "kotz"

    def __init__(self, beta: float, dim: int, shape: int = 2, rate: float = 0.5):
        super().__init__(beta, dim)
        if int(shape) != shape or shape < 1:
            raise DomainError("Kotz shape must be a positive integer")
        if not rate > 0:
            raise DomainError("Kotz rate must be positive")
        self.shape = int(shape)
        self.rate = float(rate)
        p = self.dim / 2.0 + self.shape - 1
        self._log_c = (math.lgamma(self.dim / 2.0) + p * math.log(self.rate)
                       - self.dim / 2.0 * math.log(math.pi) - math.lgamma(p))
        self.check_finite()

    @property
    def params(self) -> dict:
        return {"shape": self.shape, "rate": self.rate}

    def derivative(self, n: int, z):
        z = np.asarray(z, dtype=float)
        s = self.shape - 1
        out = np.zeros_like(z)
        for j in range(min(n, s) + 1):
            # d^j z^s = s!/(s-j)! z^{s-j}
            poly = math.comb(n, j) * math.perm(s, j) * z ** (s - j)
            out = out + poly * (-self.rate) ** (n - j)
        return out * np.exp(self._log_c - self.rate * z)

    def scale_hint(self, power: float) -> float:
        return max((power + self.shape - 1) / self.rate, 1e-3)


class MatrixTGenerator(GeneratorFamily):
    """Matrix-t generator ``h(v) = c (1 + beta v / nu)^{-(nu + D)/2}``.

    This is the Gaussian law scaled by ``sqrt(nu / chi^2_nu)``, so it is
    samplable; the heavy tails make it the reference non-Gaussian family for
    the generator-invariance checks.
    """

    name = "matrix_t"
    samplable = True

    def __init__(self, beta: float, dim: int, nu: float = 3.0):
        super().__init__(beta, dim)
        if not nu > 0:
            raise DomainError("degrees of freedom must be positive")
        self.nu = float(nu)
        d = self.dim / 2.0
        self._power = -(self.nu / 2.0 + d)
        self._log_c = (math.lgamma(self.nu / 2.0 + d) - math.lgamma(self.nu / 2.0)
                       - d * math.log(self.nu * math.pi / beta))
        self.check_finite()

    @property
    def params(self) -> dict:
        return {"nu": self.nu}

    def derivative(self, n: int, z):
        z = np.asarray(z, dtype=float)
        k = self.beta / self.nu
        falling = 1.0
        for j in range(n):
            falling *= self._power - j
        return falling * k ** n * np.exp(self._log_c + (self._power - n) * np.log1p(k * z))

    def scale_hint(self, power: float) -> float:
        return max(power / self.beta, 1e-3)

    def radial_scale(self, rng, size):
        """Mixing draws ``sqrt(nu / chi^2_nu)``."""
        return np.sqrt(self.nu / rng.chisquare(self.nu, size=size))


class CustomGenerator(GeneratorFamily):
    """Generator defined by a user callable ``derivative(n, z)``."""

    def __init__(self, beta: float, dim: int, derivative: Callable, name: str = "custom",
                 max_order: int | None = None, scale: float | None = None):
        super().__init__(beta, dim)
        self._derivative = derivative
        self.name = name
        self.max_order = max_order
        self._scale = scale
        self.check_finite(normalised=False)

    def derivative(self, n: int, z):
        self.check_order(n)
        return np.asarray(self._derivative(n, np.asarray(z, dtype=float)), dtype=float)

    def scale_hint(self, power: float) -> float:
        return self._scale if self._scale is not None else super().scale_hint(power)


def semi_infinite_quad(f: Callable, scale: float, rtol: float = 1e-11, atol: float = 1e-12) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``(0, inf)``.

    The range is split at multiples of ``scale`` (the rough location of the
    integrand's mass) so QUADPACK sees the peak on a finite interval.
    """
    edges = [0.0, 0.5 * scale, scale, 2.0 * scale, 4.0 * scale, 8.0 * scale]
    total = 0.0
    abserr = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err, *rest = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol, limit=200, full_output=1)
        total += val
        abserr += err
    val, err, *rest = integrate.quad(f, edges[-1], np.inf, epsabs=0.0, epsrel=rtol, limit=200,
                                     full_output=1)
    total += val
    abserr += err
    if not np.isfinite(total) or abserr > max(atol, 1e-8 * abs(total)):
        raise ConvergenceError(f"quadrature did not converge (estimate {total!r}, error {abserr:.2e})")
    return total


def gamma_integral_quadrature(gen: GeneratorFamily, t: int, r: int) -> float:
    """``gamma(t, r) / Gamma(D/2 + t)`` by quadrature of the generator derivative."""
    n = 2 * t + r
    gen.check_order(n)
    p = gen.dim / 2.0 + t
    log_norm = math.lgamma(p)

    def integrand(z):
        if z <= 0.0:
            return 0.0
        return float(gen.derivative(n, z)) * math.exp((p - 1.0) * math.log(z) - log_norm)

    return semi_infinite_quad(integrand, gen.scale_hint(p))
