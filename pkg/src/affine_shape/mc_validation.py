"""Monte Carlo and quadrature checks of the integral identities behind the densities.

Every check returns an :class:`McReport` comparing an estimate with its
analytic target through a z-score.  Monte Carlo standard errors come from
batch means.  Each check accepts ``negative_control=True``, which evaluates
a deliberately wrong variant that must be rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .algebra import MatrixF, sqrt_posdef, structure_constants
from .errors import DimensionError, DomainError
from .generators import GaussianGenerator, GeneratorFamily, MatrixTGenerator, semi_infinite_quad
from .jack import jack_c
from .shape import configuration_coords, helmert_submatrix
from .special_functions import gen_pochhammer, mv_gamma_ln, partitions_of, stiefel_volume_ln

__all__ = [
    "RngSpec",
    "McReport",
    "InvarianceReport",
    "batch_means",
    "sample_stiefel",
    "sample_matrix_elliptical",
    "sample_matrix_gamma",
    "batch_configuration_coords",
    "check_stiefel_moment",
    "check_cone_integral",
    "check_jacobian",
    "check_density_normalization",
    "check_central_invariance",
    "central_density_batch",
    "SUITES",
    "run_suite",
]

DEFAULT_BATCHES = 32


@dataclass(frozen=True)
class RngSpec:
    """Seeded bit generator; identical specs give identical streams."""

    seed: int = 0
    algorithm: str = "PCG64"

    def __post_init__(self):
        if self.algorithm not in ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937"):
            raise ValueError(f"unknown bit generator {self.algorithm!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        bitgen = getattr(np.random, self.algorithm)(int(self.seed))
        return np.random.Generator(bitgen)


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return RngSpec(0 if rng is None else int(rng)).generator()


def _seed_of(rng) -> int | None:
    if isinstance(rng, RngSpec):
        return int(rng.seed)
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return None


@dataclass
class McReport:
    check: str
    estimate: float
    std_error: float
    target: float
    n: int
    params: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def z_score(self) -> float:
        return (self.estimate - self.target) / self.std_error

    def passed(self, band: float = 3.0) -> bool:
        return abs(self.z_score) < band

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["z_score"] = self.z_score
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def batch_means(values, n_batches: int = DEFAULT_BATCHES) -> tuple[float, float]:
    """Mean and batch-means standard error of a 1-D sample.

    The standard error is floored at ``1e-15 * max(1, |mean|)`` so that a
    constant integrand still yields a finite z-score.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 2:
        raise DomainError("need at least 2 samples")
    nb = min(n_batches, n)
    size = n // nb
    means = np.array([math.fsum(v[i * size:(i + 1) * size]) / size for i in range(nb)])
    mean = math.fsum(v[:nb * size]) / (nb * size)
    se = float(np.std(means, ddof=1) / math.sqrt(nb))
    return mean, max(se, 1e-15 * max(1.0, abs(mean)))


# ---------------------------------------------------------------------------
# batched algebra helpers on (..., beta) component arrays

def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    beta = a.shape[-1]
    return np.einsum("...i,...j,ijk->...k", a, b, structure_constants(beta))


def _conj(a: np.ndarray) -> np.ndarray:
    sign = -np.ones(a.shape[-1])
    sign[0] = 1.0
    return a * sign


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched product of ``(..., n, m, beta)`` and ``(..., m, p, beta)`` arrays."""
    beta = a.shape[-1]
    return np.einsum("...ijx,...jky,xyz->...ikz", a, b, structure_constants(beta))


def _H(a: np.ndarray) -> np.ndarray:
    return _conj(np.swapaxes(a, -2, -3))


def _gaussian_components(rng, shape, beta: int, var: float) -> np.ndarray:
    return rng.normal(scale=math.sqrt(var), size=(*shape, beta))


# ---------------------------------------------------------------------------
# samplers

def sample_stiefel(beta: int, m: int, n: int, rng=None, size: int | None = None):
    """Haar draws from ``V_{m,n}`` (``n x m`` with ``H* H = I``).

    Gram-Schmidt on an ``n x m`` Gaussian matrix over the algebra (each entry
    ``beta`` independent N(0,1) components); the implied ``R`` factor has a
    positive real diagonal.  Returns a MatrixF, or an ``(size, n, m, beta)``
    array when ``size`` is given.
    """
    if beta not in (1, 2, 4):
        raise DimensionError("Stiefel sampling needs beta in {1, 2, 4}")
    if not 1 <= m <= n:
        raise DimensionError("need 1 <= m <= n")
    g = _rng(rng)
    count = 1 if size is None else int(size)
    Z = g.normal(size=(count, n, m, beta))
    Q = np.empty_like(Z)
    for j in range(m):
        x = Z[:, :, j, :].copy()
        for i in range(j):
            h = Q[:, :, i, :]
            r = np.sum(_mul(_conj(h), x), axis=1)  # h_i* x_j
            x = x - _mul(h, r[:, None, :])
        # re-orthogonalise once for accuracy
        for i in range(j):
            h = Q[:, :, i, :]
            r = np.sum(_mul(_conj(h), x), axis=1)
            x = x - _mul(h, r[:, None, :])
        norm = np.sqrt(np.sum(x * x, axis=(1, 2)))
        Q[:, :, j, :] = x / norm[:, None, None]
    if size is None:
        return MatrixF(Q[0], beta)
    return Q


def _sqrt_components(S: MatrixF) -> np.ndarray:
    return sqrt_posdef(S).data


def sample_matrix_elliptical(mu: MatrixF, Sigma: MatrixF, Theta: MatrixF,
                             generator: GeneratorFamily | None = None, rng=None,
                             size: int | None = None, mixing: Callable | None = None):
    """Draw ``X = mu + w Sigma^{1/2} G Theta^{1/2}``.

    ``G`` has iid entries over the algebra with real components of variance
    ``1/beta`` (``E|g|^2 = 1``), matching the Gaussian generator
    ``exp(-beta v / 2)``.  ``w = 1`` for the Gaussian generator; for a
    scale mixture it is drawn by ``generator.radial_scale`` or by the
    user-supplied ``mixing(rng, size)``.
    """
    beta = mu.beta
    n, K = mu.shape
    if Sigma.shape != (n, n) or Theta.shape != (K, K):
        raise DimensionError("Sigma must be n x n and Theta K x K for an n x K mean")
    if generator is None:
        generator = GaussianGenerator(beta, beta * n * K)
    if not generator.samplable and mixing is None:
        raise DomainError(f"generator {generator.name!r} has no sampler")
    g = _rng(rng)
    count = 1 if size is None else int(size)
    G = _gaussian_components(g, (count, n, K), beta, 1.0 / beta)
    if mixing is not None:
        w = np.asarray(mixing(g, count), dtype=float)
    elif hasattr(generator, "radial_scale"):
        w = generator.radial_scale(g, count)
    else:
        w = np.ones(count)
    A = _sqrt_components(Sigma)
    B = _sqrt_components(Theta)
    X = mu.data[None] + w[:, None, None, None] * _matmul(_matmul(A[None], G), B[None])
    if size is None:
        return MatrixF(X[0], beta)
    return X


def sample_matrix_gamma(beta: int, m: int, a: float, b: float, rng, size: int) -> np.ndarray:
    """Draws with density ``b^{am} |X|^{a-(m-1)beta/2-1} etr(-b X) / Gamma_m[a]`` on the cone.

    Uses the Cholesky factor ``X = T* T``: ``t_ii^2 ~ Gamma(a - (i-1)beta/2, rate b)``
    and off-diagonal components ``N(0, 1/(2b))``.  Returns ``(size, m, m, beta)``.
    """
    if a <= (m - 1) * beta / 2.0:
        raise DomainError("matrix gamma shape must exceed (m-1) beta / 2")
    g = _rng(rng)
    T = np.zeros((size, m, m, beta))
    for i in range(m):
        T[:, i, i, 0] = np.sqrt(g.gamma(a - i * beta / 2.0, 1.0 / b, size=size))
        for j in range(i + 1, m):
            T[:, i, j, :] = g.normal(scale=math.sqrt(0.5 / b), size=(size, beta))
    return _matmul(_H(T), T)


def _log_matrix_gamma_pdf(X: np.ndarray, beta: int, a: float, b: float) -> np.ndarray:
    m = X.shape[-2]
    return (a * m * math.log(b) + (a - (m - 1) * beta / 2.0 - 1.0) * np.log(_det_small(X))
            - b * _re_trace(X) - mv_gamma_ln(beta, m, a))


def _re_trace(X: np.ndarray) -> np.ndarray:
    return np.trace(X[..., 0], axis1=-2, axis2=-1)


def _re_trace_product(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``Re tr(A B)`` for batched square matrices."""
    sign = -np.ones(A.shape[-1])
    sign[0] = 1.0
    return np.einsum("...ijx,...jix,x->...", A, B, sign)


def _det_small(X: np.ndarray) -> np.ndarray:
    """Determinant of batched Hermitian 1x1 or 2x2 matrices."""
    m = X.shape[-2]
    if m == 1:
        return X[..., 0, 0, 0]
    if m == 2:
        return X[..., 0, 0, 0] * X[..., 1, 1, 0] - np.sum(X[..., 0, 1, :] ** 2, axis=-1)
    raise DimensionError("batched determinants are provided for m <= 2")


def batch_configuration_coords(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``V`` for a batch ``(n, N, K, beta)`` of landmark matrices with ``K = 1``.

    Returns the ``(n, q, 1, beta)`` coordinates and a boolean mask of
    nondegenerate draws; degenerate draws have zero rows in the output.
    """
    n, N, K, beta = X.shape
    if K != 1:
        raise DimensionError("batched coordinates are provided for K = 1")
    L = helmert_submatrix(N)
    Y = np.einsum("ij,sjkx->sikx", L, X)
    y1 = Y[:, 0, 0, :]
    n1 = np.sum(y1 * y1, axis=1)
    scale = np.sqrt(np.sum(Y * Y, axis=(1, 2, 3)))
    ok = np.sqrt(n1) > 1e-12 * np.maximum(scale, 1e-300)
    inv = _conj(y1) / np.where(ok, n1, 1.0)[:, None]
    V = _mul(Y[:, 1:, 0, :], inv[:, None, :])[:, :, None, :]
    V[~ok] = 0.0
    return V, ok


# ---------------------------------------------------------------------------
# moments over the Stiefel manifold

def stiefel_moment_target(X: MatrixF, k: int, n: int, shift: float = 0.0) -> float:
    """``sum_{kappa |- k} (1/2)_k / [beta n/2]_kappa C_kappa(X X*)`` (normalised Haar measure)."""
    beta = X.beta
    m = X.rows
    eig = np.linalg.eigvalsh(X.to_numpy() @ X.to_numpy().conj().T) if beta <= 2 else None
    if eig is None:
        raise DimensionError("Stiefel moment target needs beta <= 2")
    poch = math.prod(0.5 + i for i in range(k))
    total = []
    for kappa in partitions_of(k, m):
        total.append(poch / gen_pochhammer(beta, beta * n / 2.0 + shift, kappa)
                     * jack_c(beta, kappa, eig))
    return math.fsum(total)


def check_stiefel_moment(X: MatrixF, k: int, n_mc: int = 100_000, rng=None,
                         negative_control: bool = False) -> McReport:
    """MC mean of ``(Re tr X H1)^{2k}`` with ``H1`` Haar on ``V_{m,n}``, ``X`` of size ``m x n``.

    The negative control compares with the target for ``n + 1`` columns.
    """
    beta = X.beta
    if beta not in (1, 2):
        raise DimensionError("check_stiefel_moment supports beta in {1, 2}")
    m, n = X.shape
    g = _rng(rng)
    H = sample_stiefel(beta, m, n, g, size=n_mc)
    tr = _re_trace(_matmul(X.data[None], H))
    est, se = batch_means(tr ** (2 * k))
    target = stiefel_moment_target(X, k, n, shift=beta / 2.0 if negative_control else 0.0)
    return McReport("stiefel", est, se, target, n_mc,
                    {"beta": beta, "m": m, "n": n, "k": k, "negative_control": negative_control},
                    _seed_of(rng))


# ---------------------------------------------------------------------------
# integrals over the positive definite cone

def cone_integral_target(a: float, kappa: Sequence[int], Z: MatrixF, U: MatrixF,
                         h: Callable) -> float:
    """``[a]_kappa Gamma_m[a] / Gamma[am + k] |Z|^{-a} C_kappa(U Z^{-1}) gamma``."""
    beta, m = Z.beta, Z.rows
    kappa = tuple(int(p) for p in kappa if p)
    k = sum(kappa)
    Zn, Un = Z.to_numpy(), U.to_numpy()
    Zi = np.linalg.inv(Zn)
    # U Z^{-1} is similar to the Hermitian Z^{-1/2} U Z^{-1/2}
    w, Q = np.linalg.eigh(Zi)
    Zih = (Q * np.sqrt(w)) @ Q.conj().T
    eig = np.linalg.eigvalsh(Zih @ Un @ Zih)
    p = a * m + k
    gamma = semi_infinite_quad(lambda z: float(h(z)) * z ** (p - 1.0), max(1.0, p))
    logdetZ = float(np.sum(np.log(np.linalg.eigvalsh(Zn))))
    return (gen_pochhammer(beta, a, kappa) * math.exp(mv_gamma_ln(beta, m, a) - math.lgamma(p)
                                                     - a * logdetZ)
            * jack_c(beta, kappa, eig) * gamma)


def check_cone_integral(a: float, kappa: Sequence[int], Z: MatrixF, U: MatrixF,
                        h: Callable | None = None, n: int = 200_000, rng=None,
                        negative_control: bool = False) -> McReport:
    """Left side of the cone identity against its closed form.

    ``m = 1`` uses adaptive quadrature (the reported error is the quadrature
    bound); ``m = 2`` uses importance sampling from a matrix gamma law on the
    Cholesky parametrisation.  ``h`` defaults to ``exp(-z)``.  The negative
    control raises the determinant exponent by one.
    """
    beta, m = Z.beta, Z.rows
    if beta not in (1, 2) or m > 2:
        raise DimensionError("check_cone_integral supports beta in {1, 2} and m <= 2")
    kappa = tuple(int(p) for p in kappa if p)
    if len(kappa) > m:
        raise DimensionError("partition has more parts than the matrix order")
    k = sum(kappa)
    k_m = kappa[-1] if len(kappa) == m else 0
    if not a > (m - 1) * beta / 2.0 - k_m:
        raise DomainError("a is outside the convergence region")
    h = h or (lambda z: np.exp(-np.asarray(z, dtype=float)))
    expo = a - (m - 1) * beta / 2.0 - 1.0 + (1.0 if negative_control else 0.0)
    target = cone_integral_target(a, kappa, Z, U, h)
    params = {"beta": beta, "m": m, "a": a, "kappa": list(kappa),
              "negative_control": negative_control}
    if m == 1:
        z0 = float(Z.data[0, 0, 0])
        u0 = float(U.data[0, 0, 0])
        f = lambda x: float(h(x * z0)) * x ** expo * (x * u0) ** k
        val = semi_infinite_quad(f, max(1.0, (expo + k + 1.0) / z0))
        return McReport("cone", val, max(1e-10 * abs(target), 1e-300), target, 0, params,
                        _seed_of(rng))
    g = _rng(rng)
    Zn = Z.data
    b = float(np.mean(np.linalg.eigvalsh(Z.to_numpy())))
    ap = max(a + k / 2.0, (m - 1) * beta / 2.0 + 0.5)
    X = sample_matrix_gamma(beta, m, ap, b, g, n)
    logq = _log_matrix_gamma_pdf(X, beta, ap, b)
    trXZ = _re_trace_product(X, np.broadcast_to(Zn, X.shape))
    jack = _jack_batch(beta, kappa, X, U)
    vals = np.asarray(h(trXZ), dtype=float) * np.exp(expo * np.log(_det_small(X)) - logq) * jack
    est, se = batch_means(vals)
    return McReport("cone", est, se, target, n, params, _seed_of(rng))


def _jack_batch(beta: int, kappa: tuple, X: np.ndarray, U: MatrixF) -> np.ndarray:
    """``C_kappa(X U)`` for a batch of 2x2 positive definite ``X``.

    ``X U`` is similar to the Hermitian ``X^{1/2} U X^{1/2}``, so its two
    eigenvalues are the real roots of ``t^2 - tr(XU) t + |X||U|``.
    """
    tr = _re_trace_product(X, np.broadcast_to(U.data, X.shape))
    if not kappa:
        return np.ones(X.shape[0])
    if kappa == (1,):
        return tr
    det = _det_small(X) * float(np.prod(np.linalg.eigvalsh(U.to_numpy())))
    # a weight-k symmetric polynomial in two variables is a combination of
    # e1^(k-2j) e2^j; recover the coefficients exactly from a few evaluations
    k = sum(kappa)
    js = np.arange(k // 2 + 1)
    nodes = [(1.0 + 0.5 * i, 0.3 + 0.25 * i) for i in range(len(js))]
    A = np.array([[(x + y) ** (k - 2 * j) * (x * y) ** j for j in js] for x, y in nodes])
    c = np.linalg.solve(A, np.array([jack_c(beta, kappa, p) for p in nodes]))
    return sum(cj * tr ** (k - 2 * j) * det ** j for j, cj in zip(js, c))


# ---------------------------------------------------------------------------
# Jacobian of Y = U F^{1/2} H

def check_jacobian(beta: int, K: int, q: int, n_mc: int = 100_000, rng=None,
                   negative_control: bool = False) -> McReport:
    """Monte Carlo check of ``(dY) = 2^{-K} |F|^{beta(q+1)/2 - 1} (dV)(dF)(H* dH)``.

    ``Y`` is drawn from the Gaussian bump ``g`` (iid components of variance
    ``1/beta``) and mapped to ``V = Y2 Y1^{-1}``, ``F = Y1 Y1*``.  For any
    density ``r`` on ``(V, F, H)`` space the change of variables gives
    ``E_g[r / (J g)] = 1``.  Here ``r`` is Gaussian in ``V``, Haar in ``H`` and
    a matrix gamma law in ``F`` whose rate depends on ``V``, which keeps the
    weights light tailed.  The negative control raises the ``|F|`` exponent of the
    claimed Jacobian ``J`` by one.
    """
    if beta not in (1, 2) or K > 2 or q < 1:
        raise DimensionError("check_jacobian supports beta in {1, 2}, K <= 2, q >= 1")
    g = _rng(rng)
    D = beta * K * (q + K)
    Y = g.normal(scale=math.sqrt(1.0 / beta), size=(n_mc, q + K, K, beta))
    log_g = D / 2.0 * math.log(beta / (2.0 * math.pi)) - beta / 2.0 * np.sum(Y ** 2, axis=(1, 2, 3))
    Yc = Y[..., 0] + 1j * Y[..., 1] if beta == 2 else Y[..., 0]
    Y1, Y2 = Yc[:, :K, :], Yc[:, K:, :]
    Vc = Y2 @ np.linalg.inv(Y1)
    Fc = Y1 @ np.conj(np.swapaxes(Y1, 1, 2))
    Wc = np.eye(K) + np.conj(np.swapaxes(Vc, 1, 2)) @ Vc
    logdetF = np.log(np.real(np.linalg.det(Fc)))
    logdetW = np.log(np.real(np.linalg.det(Wc)))
    trFW = np.real(np.trace(Fc @ Wc, axis1=1, axis2=2))
    # shape one above the exact conditional law keeps both the check and its
    # negative control square integrable near |F| = 0
    a = beta * (q + K) / 2.0 + 1.0
    expo = beta * (q + 1) / 2.0 - 1.0
    d = beta * q * K
    s = 0.5  # a unit scale would make the K = 1 negative control average to exactly 1
    log_rv = (-d / 2.0 * math.log(2.0 * math.pi * s * s)
              - 0.5 * np.sum(np.abs(Vc) ** 2, axis=(1, 2)) / (s * s))
    log_rf = (a * (K * math.log(beta / 2.0) + logdetW) + (a - (K - 1) * beta / 2.0 - 1.0) * logdetF
              - beta / 2.0 * trFW - mv_gamma_ln(beta, K, a))
    log_rh = -stiefel_volume_ln(beta, K, K)
    claimed = expo + (1.0 if negative_control else 0.0)
    log_j = -K * math.log(2.0) + claimed * logdetF
    est, se = batch_means(np.exp(log_rv + log_rf + log_rh - log_j - log_g))
    return McReport("jacobian", est, se, 1.0, n_mc,
                    {"beta": beta, "K": K, "q": q, "negative_control": negative_control},
                    _seed_of(rng))


# ---------------------------------------------------------------------------
# density normalisation

def check_density_normalization(density: Callable, beta: int, q: int, K: int,
                                n: int = 100_000, rng=None, scale: float = 1.0,
                                t_dof: float = 1.0, label: str = "density",
                                vectorized: bool = False) -> McReport:
    """Importance-sampled integral of ``density`` over ``F^{q x K}`` (target 1).

    The proposal is a multivariate t with ``t_dof`` degrees of freedom and
    scale ``scale`` in ``beta q K`` real dimensions.  ``density`` takes a
    MatrixF, or with ``vectorized=True`` an ``(n, q, K, beta)`` array.
    """
    d = beta * q * K
    if d > 6:
        raise DimensionError("normalisation checks are limited to beta q K <= 6")
    if not scale > 0:
        raise DomainError("proposal scale must be positive")
    g = _rng(rng)
    z = g.normal(size=(n, d)) * np.sqrt(t_dof / g.chisquare(t_dof, size=n))[:, None] * scale
    log_p = (math.lgamma((t_dof + d) / 2.0) - math.lgamma(t_dof / 2.0)
             - d / 2.0 * math.log(t_dof * math.pi) - d * math.log(scale)
             - (t_dof + d) / 2.0 * np.log1p(np.sum(z ** 2, axis=1) / (t_dof * scale ** 2)))
    if vectorized:
        vals = np.asarray(density(z.reshape(n, q, K, beta)), dtype=float)
    else:
        vals = np.array([density(MatrixF(row.reshape(q, K, beta), beta)) for row in z])
    est, se = batch_means(vals * np.exp(-log_p))
    return McReport("normalization", est, se, 1.0, n,
                    {"beta": beta, "q": q, "K": K, "label": label}, _seed_of(rng))


def central_density_batch(V: np.ndarray, beta: int, N: int) -> np.ndarray:
    """Central density with ``Sigma = I`` and ``K = 1`` for a batch ``(n, q, 1, beta)``."""
    from .densities import _log_constant

    a = beta * (N - 1) / 2.0
    return np.exp(_log_constant(beta, N, 1) - a * np.log1p(np.sum(V ** 2, axis=(1, 2, 3))))


# ---------------------------------------------------------------------------
# generator invariance of the central shape law

@dataclass
class InvarianceReport:
    passed: bool
    statistics: dict
    p_values: dict
    alpha: float
    n: int
    discarded: tuple
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def to_record(self) -> dict:
        return asdict(self)


def check_central_invariance(generator_a: GeneratorFamily, generator_b: GeneratorFamily,
                             N: int, beta: int, n: int = 5000, rng=None, alpha: float = 0.01,
                             Sigma: MatrixF | None = None, mu_b: MatrixF | None = None
                             ) -> InvarianceReport:
    """Two-sample Kolmogorov-Smirnov comparison of ``V`` drawn under two generators.

    Landmarks ``X`` (``N x 1``) are drawn with ``mu = 0`` and a common
    ``Sigma`` (default ``I_N``); ``mu_b`` shifts the second group (the
    negative control).  ``|V|`` and every real coordinate of ``V`` are tested;
    the family passes when no test rejects at the Bonferroni-corrected level
    ``alpha / (number of tests)``.  Degenerate draws are discarded and
    counted; more than 0.1% of them is an error.
    """
    g = _rng(rng)
    Sigma = Sigma if Sigma is not None else MatrixF.identity(N, beta)
    Theta = MatrixF.identity(1, beta)
    zero = MatrixF.zeros(N, 1, beta)
    samples = []
    discarded = []
    for gen, mu in ((generator_a, zero), (generator_b, mu_b if mu_b is not None else zero)):
        X = sample_matrix_elliptical(mu, Sigma, Theta, gen, g, size=n)
        V, ok = batch_configuration_coords(X)
        discarded.append(int(np.sum(~ok)))
        if np.sum(~ok) > 1e-3 * n:
            raise DomainError(f"{int(np.sum(~ok))} degenerate draws exceed the 0.1% budget")
        samples.append(V[ok].reshape(int(np.sum(ok)), -1))
    va, vb = samples
    stats_out = {}
    pvals = {}
    stats_out["norm"], pvals["norm"] = _ks(np.linalg.norm(va, axis=1), np.linalg.norm(vb, axis=1))
    for j in range(va.shape[1]):
        stats_out[f"coord{j}"], pvals[f"coord{j}"] = _ks(va[:, j], vb[:, j])
    level = alpha / len(pvals)
    passed = all(p > level for p in pvals.values())
    return InvarianceReport(passed, stats_out, pvals, alpha, n, tuple(discarded),
                            {"N": N, "beta": beta, "generator_a": generator_a.name,
                             "generator_b": generator_b.name, "shifted": mu_b is not None},
                            _seed_of(rng))


def _ks(x, y) -> tuple[float, float]:
    res = stats.ks_2samp(x, y)
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------------
# named suites driven by the command line and the acceptance tests

def _stiefel_cases():
    r = np.array
    return [
        ("stiefel/b1-m1-n3-k2", MatrixF(r([[[0.7], [-0.4], [0.2]]]), 1), 2),
        ("stiefel/b2-m1-n2-k2", MatrixF(r([[[0.6, 0.2], [-0.3, 0.5]]]), 2), 2),
        ("stiefel/b1-m2-n3-k2", MatrixF(r([[[0.5], [0.1], [-0.3]], [[0.2], [0.6], [0.1]]]), 1), 2),
        ("stiefel/b2-m2-n3-k1", MatrixF(r([[[0.5, 0.1], [0.1, -0.2], [-0.3, 0.0]],
                                           [[0.2, 0.3], [0.6, 0.0], [0.1, 0.1]]]), 2), 1),
    ]


def _cone_cases():
    Z1 = MatrixF.from_real(np.array([[1.5]]), 1)
    U1 = MatrixF.from_real(np.array([[0.7]]), 1)
    Zr = MatrixF.from_real(np.array([[1.2, 0.3], [0.3, 0.9]]), 1)
    Ur = MatrixF.from_real(np.array([[0.8, -0.2], [-0.2, 0.5]]), 1)
    Zc = MatrixF(np.array([[[1.2, 0.0], [0.3, 0.2]], [[0.3, -0.2], [0.9, 0.0]]]), 2)
    Uc = MatrixF(np.array([[[0.8, 0.0], [-0.2, 0.1]], [[-0.2, -0.1], [0.5, 0.0]]]), 2)
    return [
        ("cone/b1-m1-k(2)", 2.5, (2,), Z1, U1),
        ("cone/b1-m2-k(1)", 2.5, (1,), Zr, Ur),
        ("cone/b1-m2-k(1,1)", 2.5, (1, 1), Zr, Ur),
        ("cone/b2-m2-k(2)", 3.0, (2,), Zc, Uc),
    ]


_JACOBIAN_CASES = ((1, 1, 1), (2, 1, 1), (1, 1, 3), (1, 2, 2), (2, 2, 1))
_CENTRAL_CASES = ((1, 3), (2, 3), (1, 4), (2, 4), (1, 5))


def _wrong_central_batch(V, beta, N):
    # correct constant, exponent raised by beta/2
    return central_density_batch(V, beta, N) / (1.0 + np.sum(V ** 2, axis=(1, 2, 3))) ** (beta / 2.0)


def _suite_stiefel(budget, seed, neg):
    n = max(1000, int(100_000 * budget))
    return [(name, check_stiefel_moment(X, k, n, RngSpec(seed + i), negative_control=neg))
            for i, (name, X, k) in enumerate(_stiefel_cases())]


def _suite_cone(budget, seed, neg):
    n = max(1000, int(200_000 * budget))
    return [(name, check_cone_integral(a, kap, Z, U, n=n, rng=RngSpec(seed + i),
                                       negative_control=neg))
            for i, (name, a, kap, Z, U) in enumerate(_cone_cases())]


def _suite_jacobian(budget, seed, neg):
    n = max(1000, int(100_000 * budget))
    return [(f"jacobian/b{b}-K{K}-q{q}", check_jacobian(b, K, q, n, RngSpec(seed + i),
                                                         negative_control=neg))
            for i, (b, K, q) in enumerate(_JACOBIAN_CASES)]


def _suite_normalization(budget, seed, neg):
    from .densities import log_density_gaussian

    n = max(1000, int(100_000 * budget))
    dens = _wrong_central_batch if neg else central_density_batch
    out = []
    # for beta = 1 a unit-scale Cauchy proposal equals the target, hence scale 1.3
    for i, (beta, N) in enumerate(_CENTRAL_CASES):
        rep = check_density_normalization(lambda V, b=beta, NN=N: dens(V, b, NN), beta, N - 2, 1,
                                          n, RngSpec(seed + i), scale=1.3, t_dof=1.0,
                                          label=f"central-N{N}", vectorized=True)
        out.append((f"normalization/central-b{beta}-N{N}", rep))
    # a noncentral Gaussian case through the full density routine
    mu = MatrixF(np.array([[[0.8]], [[-0.5]]]), 1)
    Sigma = MatrixF.from_real(np.array([[0.6, 0.1], [0.1, 0.4]]), 1)
    shift = 1.0 if neg else 0.0
    f = lambda V: math.exp(log_density_gaussian(V, mu, Sigma) - shift)
    rep = check_density_normalization(f, 1, 1, 1, max(500, n // 10), RngSpec(seed + 99),
                                      label="gaussian-noncentral-N3")
    out.append(("normalization/gaussian-b1-N3", rep))
    return out


def _suite_invariance(budget, seed, neg):
    n = max(500, int(5000 * budget))
    out = []
    for i, (beta, N) in enumerate(((1, 4), (2, 13))):
        D = beta * N
        mu_b = None
        if neg:
            d = np.zeros((N, 1, beta))
            d[-1, 0, 0] = 1.0
            mu_b = MatrixF(d, beta)
        rep = check_central_invariance(GaussianGenerator(beta, D), MatrixTGenerator(beta, D, 3.0),
                                       N, beta, n, RngSpec(seed + i), mu_b=mu_b)
        out.append((f"invariance/b{beta}-N{N}", rep))
    return out


SUITES = {
    "stiefel": _suite_stiefel,
    "cone": _suite_cone,
    "jacobian": _suite_jacobian,
    "normalization": _suite_normalization,
    "invariance": _suite_invariance,
    "all": None,
}


def run_suite(name: str, budget: float = 1.0, seed: int = 0, negative_control: bool = False,
              band: float = 4.0) -> list[tuple[str, dict, bool]]:
    """Run a named suite; returns ``(check name, record, passed)`` sorted by name.

    ``budget`` scales every Monte Carlo sample size.  Monte Carlo checks pass
    when ``|z| < band``; invariance checks pass when no KS test rejects.
    """
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    names = [k for k in SUITES if k != "all"] if name == "all" else [name]
    results = []
    for s in names:
        for check, rep in SUITES[s](budget, seed, negative_control):
            if isinstance(rep, McReport):
                rec = rep.to_record()
                ok = rep.passed(band)
            else:
                rec = rep.to_record()
                ok = rep.passed
            rec["negative_control"] = negative_control
            results.append((check, rec, ok))
    return sorted(results, key=lambda t: t[0])
