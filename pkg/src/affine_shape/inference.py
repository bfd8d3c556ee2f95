"""Likelihood, maximum-likelihood fitting and the two-group likelihood-ratio test.

The model is the isotropic Gaussian affine shape model with ``Theta = I_K``.
Parameters are packed as the real components of the reduced mean ``mu``
(``(N-1) x K`` entries, ``beta`` components each, row-major) followed by
``log sigma^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import MatrixF, structure_constants
from .densities import _log_constant, log_density_gaussian
from .errors import ConvergenceError, DimensionError, DomainError
from .shape import ConfigurationCoordinates, _as_coords, configuration_coords

__all__ = [
    "chisq_sf",
    "ShapeSample",
    "FitOptions",
    "FitResult",
    "LRTResult",
    "NelderMeadResult",
    "nelder_mead",
    "loglik",
    "fit_mle",
    "lrt_equal_means",
]


# ---------------------------------------------------------------------------
# chi-square tail

def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cf(a: float, x: float) -> float:
    # modified Lentz on the continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chisq_sf(x: float, df: int) -> float:
    """Upper tail ``P(chi^2_df >= x)`` through the regularized incomplete gamma ``Q(df/2, x/2)``."""
    if int(df) != df or df < 1:
        raise DomainError("df must be a positive integer")
    if not x >= 0 or not math.isfinite(x):
        raise DomainError("x must be a finite nonnegative number")
    a = df / 2.0
    h = x / 2.0
    if h == 0.0:
        return 1.0
    if h < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_p_series(a, h)))
    return min(1.0, max(0.0, _gamma_q_cf(a, h)))


# ---------------------------------------------------------------------------
# Nelder-Mead

@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    f_spread: float
    x_spread: float
    trace: list = field(default_factory=list)


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] = x0[i] * 1.05 if x0[i] != 0.0 else 0.00025
    return simplex


def nelder_mead(fun: Callable[[np.ndarray], float], x0, *, simplex=None, ftol: float = 1e-9,
                xtol: float = 1e-8, max_iter: int | None = None) -> NelderMeadResult:
    """Minimise ``fun`` with the Nelder-Mead simplex method.

    Reflection 1, expansion 2, contraction 0.5, shrink 0.5.  Stops when the
    spread of function values is below ``ftol`` and every vertex is within
    ``xtol`` (max norm) of the best one, or after ``max_iter`` iterations
    (default ``200 * dim``).  ``trace`` holds the best value after every
    iteration and is non-increasing.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    max_iter = 200 * n if max_iter is None else max_iter
    sim = _initial_simplex(x0) if simplex is None else np.array(simplex, dtype=float)
    if sim.shape != (n + 1, n):
        raise DimensionError("simplex must have shape (dim + 1, dim)")
    fs = np.array([fun(v) for v in sim])
    nev = n + 1
    trace: list[float] = []
    it = 0
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        f_spread = float(fs[-1] - fs[0])
        x_spread = float(np.max(np.abs(sim[1:] - sim[0]))) if n else 0.0
        if it > 0:
            trace.append(float(fs[0]))
        if f_spread <= ftol and x_spread <= xtol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = fun(xr)
        nev += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = fun(xe)
            nev += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fun(xc)
            nev += 1
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
            fc = fun(xc)
            nev += 1
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fs[1:] = [fun(v) for v in sim[1:]]
        nev += n
    return NelderMeadResult(sim[0].copy(), float(fs[0]), it, nev, converged, f_spread, x_spread,
                            trace)


# ---------------------------------------------------------------------------
# samples and likelihood

@dataclass(frozen=True)
class ShapeSample:
    """Configuration coordinates of one group of specimens sharing ``(beta, N, K)``."""

    label: str
    specimens: tuple
    ids: tuple = ()

    def __post_init__(self):
        specs = tuple(_as_coords(v) for v in self.specimens)
        object.__setattr__(self, "specimens", specs)
        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(len(specs)))
        if len(ids) != len(specs):
            raise DimensionError("ids and specimens differ in length")
        object.__setattr__(self, "ids", ids)
        dims = {(c.beta, c.N, c.K) for c in specs}
        if len(dims) > 1:
            raise DimensionError(f"specimens have mixed (beta, N, K): {sorted(dims)}")

    @classmethod
    def from_landmarks(cls, label: str, landmarks: Sequence[MatrixF], ids: Sequence[str] = ()):
        return cls(label, tuple(configuration_coords(X) for X in landmarks), tuple(ids))

    def __len__(self):
        return len(self.specimens)

    @property
    def beta(self) -> int:
        return self.specimens[0].beta

    @property
    def N(self) -> int:
        return self.specimens[0].N

    @property
    def K(self) -> int:
        return self.specimens[0].K

    @property
    def n_mean_params(self) -> int:
        return (self.N - 1) * self.K * self.beta

    def V_array(self) -> np.ndarray:
        """Stacked ``(n, q, K, beta)`` component array."""
        return np.stack([c.V.data for c in self.specimens])

    def U_array(self) -> np.ndarray:
        return np.stack([c.U.data for c in self.specimens])


class _K1Likelihood:
    """Vectorised isotropic Gaussian log-likelihood for ``K = 1``.

    With ``u_i = (1, v_i*)*`` the density is
    ``C (1 + |v|^2)^{-a} etr{-beta (c - g)/2} 1F1(-beta q/2; beta/2; -beta g/2)``,
    ``c = |mu|^2 / sigma^2`` and ``g = |u* mu|^2 / (sigma^2 (1 + |v|^2))``.
    """

    def __init__(self, sample: ShapeSample):
        b, N = sample.beta, sample.N
        self.beta, self.N, self.q = b, N, N - 2
        U = sample.U_array()[:, :, 0, :]  # (n, N-1, beta)
        self.Uc = U * np.where(np.arange(b) == 0, 1.0, -1.0)  # conj(u)
        if b == 1:
            self.Uz = U[:, :, 0]
        elif b == 2:
            self.Uz = U[:, :, 0] - 1j * U[:, :, 1]
        self.norm1 = 1.0 + np.sum(U[:, 1:, :] ** 2, axis=(1, 2))
        a = b * (N - 1) / 2.0
        self.base = _log_constant(b, N, 1) - a * np.log(self.norm1)
        self.const = structure_constants(b)
        self.upper = -b * self.q / 2.0
        self.terminating = float(self.upper).is_integer()
        if self.terminating:
            n = int(-self.upper)
            bb = b / 2.0
            # coefficients of 1F1(-n; bb; -y) in y: (-n)_k (-1)^k / ((bb)_k k!) = C(n,k) k! / ((bb)_k k!)
            coef = [1.0]
            for k in range(n):
                coef.append(coef[-1] * (n - k) / ((bb + k) * (k + 1)))
            self.poly = np.array(coef)
            self.powers = np.arange(n + 1)

    def __call__(self, mu: np.ndarray, sigma2: float) -> np.ndarray:
        """Per-specimen log densities; ``mu`` is an ``(N-1, beta)`` component array."""
        b = self.beta
        if b == 1:
            g = (self.Uz @ mu[:, 0]) ** 2
        elif b == 2:
            g = np.abs(self.Uz @ (mu[:, 0] + 1j * mu[:, 1])) ** 2
        else:
            ip = np.einsum("snj,nk,jkl->sl", self.Uc, mu, self.const)
            g = np.sum(ip ** 2, axis=1)
        g = g / (sigma2 * self.norm1)
        c = float(np.sum(mu ** 2)) / sigma2
        if self.terminating:
            y = b * g / 2.0
            return self.base - b * (c - g) / 2.0 + np.log(np.power.outer(y, self.powers) @ self.poly)
        return self.base - b * c / 2.0 + _log_1f1_positive(b * (self.N - 1) / 2.0, b / 2.0, b * g / 2.0)


def _log_1f1_positive(a: float, b: float, x: np.ndarray) -> np.ndarray:
    """``log 1F1(a; b; x)`` for ``a, b > 0`` and ``x >= 0`` by the power series (all terms positive)."""
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    k = 0
    while True:
        term = term * (a + k) / (b + k) * x / (k + 1)
        total = total + term
        k += 1
        if np.all(term <= 1e-17 * total) or k > 100_000:
            break
    if k > 100_000:
        raise ConvergenceError("scalar 1F1 series did not converge")
    return np.log(total)


def _mu_components(mu) -> np.ndarray:
    if isinstance(mu, MatrixF):
        return mu.data
    return np.asarray(mu, dtype=float)


def _loglik_terms(mu, sigma2: float, sample: ShapeSample, _cache: dict | None = None) -> np.ndarray:
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    mu = _mu_components(mu)
    if mu.shape != (sample.N - 1, sample.K, sample.beta):
        raise DimensionError(f"mu must have shape {(sample.N - 1, sample.K)} over beta={sample.beta}")
    if sample.K == 1:
        lik = _cache.get(id(sample)) if _cache is not None else None
        if lik is None:
            lik = _K1Likelihood(sample)
            if _cache is not None:
                _cache[id(sample)] = lik
        out = lik(mu[:, 0, :], sigma2)
    else:
        muF = MatrixF(mu, sample.beta)
        S = MatrixF.identity(sample.N - 1, sample.beta) * sigma2
        out = np.array([log_density_gaussian(c, muF, S) for c in sample.specimens])
    bad = ~np.isfinite(out)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DomainError(f"log density is not finite for specimen {sample.ids[i]!r}")
    return out


def loglik(mu, sigma2: float, sample: ShapeSample) -> float:
    """Sum over specimens of the isotropic Gaussian log affine shape density (``Theta = I``)."""
    return math.fsum(_loglik_terms(mu, sigma2, sample))


# ---------------------------------------------------------------------------
# fitting

@dataclass(frozen=True)
class FitOptions:
    restarts: int = 5
    seed: int = 0
    ftol: float = 1e-9
    xtol: float = 1e-8
    max_iter: int | None = None
    jitter: float = 0.5


@dataclass
class FitResult:
    mu_hat: MatrixF
    sigma2_hat: float
    loglik: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "beta": self.mu_hat.beta,
            "mu_hat": self.mu_hat.data.tolist(),
            "sigma2_hat": self.sigma2_hat,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class LRTResult:
    statistic: float
    df: int
    p_value: float
    fit_h0: tuple = ()
    fit_h1: tuple = ()

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "df": self.df, "p_value": self.p_value,
                "loglik_h0": sum(f.loglik for f in self.fit_h0) if self.fit_h0 else None,
                "loglik_h1": sum(f.loglik for f in self.fit_h1) if self.fit_h1 else None}


def initial_parameters(sample: ShapeSample) -> tuple[np.ndarray, float]:
    """``mu_0`` = mean of the ``U_i``; ``sigma^2_0`` = median per-real-coordinate variance of the ``V_i``."""
    if len(sample) < 2:
        raise DimensionError("at least 2 specimens are needed")
    mu0 = sample.U_array().mean(axis=0)
    V = sample.V_array().reshape(len(sample), -1)
    s2 = float(np.median(np.var(V, axis=0, ddof=1)))
    if not s2 > 0 or not math.isfinite(s2):
        raise DomainError("cannot initialise sigma^2 from a sample with no spread")
    return mu0, s2


def _multistart(objective: Callable, x0: np.ndarray, opts: FitOptions,
                extra_starts: Sequence[np.ndarray] = ()) -> tuple[NelderMeadResult, dict]:
    """Nelder-Mead from ``x0`` (and any ``extra_starts``), then seeded restarts from the best point."""
    rng = np.random.default_rng(opts.seed)
    runs = []
    best = None
    total_iter = 0
    for start in [x0, *extra_starts]:
        res = nelder_mead(objective, start, ftol=opts.ftol, xtol=opts.xtol, max_iter=opts.max_iter)
        runs.append(res)
        total_iter += res.iterations
        if best is None or res.fun < best.fun:
            best = res
    for _ in range(opts.restarts):
        x = best.x
        steps = np.where(x != 0.0, 0.05 * x, 0.00025)
        steps = steps * rng.uniform(1.0 - opts.jitter, 1.0 + opts.jitter, x.size)
        steps = steps * rng.choice([-1.0, 1.0], x.size)
        sim = np.tile(x, (x.size + 1, 1))
        sim[1:] += np.diag(steps)
        res = nelder_mead(objective, x, simplex=sim, ftol=opts.ftol, xtol=opts.xtol,
                          max_iter=opts.max_iter)
        runs.append(res)
        total_iter += res.iterations
        improved = best.fun - res.fun
        if res.fun < best.fun:
            best = res
        if res.converged and improved <= opts.ftol:
            break  # a converged restart reproduced the optimum
    trace: list[float] = []
    for r in runs:
        for v in r.trace:
            trace.append(min(v, trace[-1]) if trace else v)
    diag = {
        "runs": len(runs),
        "iterations": total_iter,
        "f_spread": best.f_spread,
        "x_spread": best.x_spread,
        "evaluations": sum(r.evaluations for r in runs),
        "best_trace": [-v for v in trace],
        "seed": opts.seed,
        "restarts": opts.restarts,
    }
    return best, diag


def _pack(mu: np.ndarray, log_s2: Sequence[float]) -> np.ndarray:
    return np.concatenate([np.asarray(mu, dtype=float).ravel(), np.asarray(log_s2, dtype=float)])


def fit_mle(sample: ShapeSample, options: FitOptions | None = None,
            starts: Sequence[tuple] = ()) -> FitResult:
    """Maximum-likelihood ``(mu, sigma^2)`` of the isotropic Gaussian shape model by Nelder-Mead.

    ``starts`` may add ``(mu, sigma2)`` starting points besides the default
    initialiser; the best optimum over all starts and restarts is returned.
    """
    opts = options or FitOptions()
    shape = (sample.N - 1, sample.K, sample.beta)
    cache: dict = {}
    npar = int(np.prod(shape))

    def objective(x):
        s2 = math.exp(x[-1])
        if not s2 > 0 or not math.isfinite(s2):
            return math.inf
        return -math.fsum(_loglik_terms(x[:npar].reshape(shape), s2, sample, cache))

    mu0, s20 = initial_parameters(sample)
    x0 = _pack(mu0, [math.log(s20)])
    extra = [_pack(m, [math.log(s)]) for m, s in starts]
    best, diag = _multistart(objective, x0, opts, extra)
    if not math.isfinite(best.fun):
        raise ConvergenceError("no finite log-likelihood was found")
    mu_hat = MatrixF(best.x[:npar].reshape(shape), sample.beta)
    return FitResult(mu_hat, math.exp(best.x[-1]), -best.fun, diag["iterations"], best.converged,
                     diag)


def lrt_equal_means(sample_a: ShapeSample, sample_b: ShapeSample,
                    options: FitOptions | None = None) -> LRTResult:
    """Likelihood-ratio test of a common mean shape with group-specific ``sigma^2``.

    ``df = beta K (N - 1)``.  Each H1 group fit also starts from the H0
    optimum so the statistic is never negative through optimizer noise.
    """
    opts = options or FitOptions()
    if (sample_a.beta, sample_a.N, sample_a.K) != (sample_b.beta, sample_b.N, sample_b.K):
        raise DimensionError("samples differ in (beta, N, K)")
    shape = (sample_a.N - 1, sample_a.K, sample_a.beta)
    npar = int(np.prod(shape))
    cache: dict = {}

    def objective0(x):
        mu = x[:npar].reshape(shape)
        sa, sb = math.exp(x[npar]), math.exp(x[npar + 1])
        if not (sa > 0 and sb > 0 and math.isfinite(sa) and math.isfinite(sb)):
            return math.inf
        return -(math.fsum(_loglik_terms(mu, sa, sample_a, cache))
                 + math.fsum(_loglik_terms(mu, sb, sample_b, cache)))

    mua, sa0 = initial_parameters(sample_a)
    mub, sb0 = initial_parameters(sample_b)
    na, nb = len(sample_a), len(sample_b)
    mu0 = (na * mua + nb * mub) / (na + nb)
    best0, diag0 = _multistart(objective0, _pack(mu0, [math.log(sa0), math.log(sb0)]), opts)
    mu_h0 = best0.x[:npar].reshape(shape)
    s2a, s2b = math.exp(best0.x[npar]), math.exp(best0.x[npar + 1])
    ll_a0 = loglik(mu_h0, s2a, sample_a)
    ll_b0 = loglik(mu_h0, s2b, sample_b)
    muF = MatrixF(mu_h0, sample_a.beta)
    it0 = diag0["iterations"]
    h0 = (FitResult(muF, s2a, ll_a0, it0, best0.converged, diag0),
          FitResult(muF, s2b, ll_b0, it0, best0.converged, diag0))
    fa = fit_mle(sample_a, opts, starts=[(mu_h0, s2a)])
    fb = fit_mle(sample_b, opts, starts=[(mu_h0, s2b)])
    stat = 2.0 * ((fa.loglik + fb.loglik) - (ll_a0 + ll_b0))
    if stat < -1e-8 * max(1.0, abs(fa.loglik + fb.loglik)):
        raise ConvergenceError(f"negative likelihood-ratio statistic {stat!r}")
    stat = max(stat, 0.0)
    df = sample_a.beta * sample_a.K * (sample_a.N - 1)
    return LRTResult(stat, df, chisq_sf(stat, df), h0, (fa, fb))
