import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from affine_shape.algebra import MatrixF
from affine_shape.densities import log_density_gaussian
from affine_shape.errors import DimensionError, DomainError
from affine_shape.inference import (
    FitOptions,
    ShapeSample,
    chisq_sf,
    fit_mle,
    initial_parameters,
    loglik,
    lrt_equal_means,
    nelder_mead,
)
from affine_shape.mc_validation import RngSpec, batch_configuration_coords, sample_matrix_elliptical
from affine_shape.shape import ConfigurationCoordinates, helmert_submatrix


def _ellipse(N, shift=0.0):
    th = np.linspace(0, 2 * np.pi, N, endpoint=False)
    mu = np.zeros((N, 1, 2))
    mu[:, 0, 0] = np.cos(th)
    mu[:, 0, 1] = 0.6 * np.sin(th) + 0.1 * np.cos(2 * th)
    mu[-1, 0, 0] += shift
    return MatrixF(mu, 2)


def _sample(label, n, seed, N=13, sigma2=0.02, shift=0.0):
    muX = _ellipse(N, shift)
    X = sample_matrix_elliptical(muX, MatrixF.identity(N, 2) * sigma2, MatrixF.identity(1, 2), None,
                                 RngSpec(seed).generator(), n)
    V, ok = batch_configuration_coords(X)
    specs = tuple(ConfigurationCoordinates(MatrixF(v, 2)) for v in V[ok])
    return ShapeSample(label, specs, tuple(f"{label}{i}" for i in range(len(specs))))


@pytest.fixture(scope="module")
def group_a():
    return _sample("a", 14, 1)


@pytest.fixture(scope="module")
def fit_a(group_a):
    return fit_mle(group_a, FitOptions(seed=3))


# ---------------------------------------------------------------------------
# chi-square tail

def test_chisq_examples():
    assert chisq_sf(0.0, 7) == 1.0
    assert 0.0032 <= chisq_sf(46.98, 24) <= 0.0036
    for x in (0.1, 1.0, 7.5, 40.0):
        assert chisq_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0, 400), df=st.integers(1, 120))
def test_chisq_against_scipy(x, df):
    assert abs(chisq_sf(x, df) - stats.chi2.sf(x, df)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0, 100), dx=st.floats(0.01, 10), df=st.integers(1, 60))
def test_chisq_monotone(x, dx, df):
    assert chisq_sf(x + dx, df) <= chisq_sf(x, df)


def test_chisq_domain():
    with pytest.raises(ValueError):
        chisq_sf(-1.0, 3)
    with pytest.raises(ValueError):
        chisq_sf(1.0, 0)


# ---------------------------------------------------------------------------
# Nelder-Mead

def _rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


def test_nelder_mead_rosenbrock():
    res = nelder_mead(_rosenbrock, np.array([-1.2, 1.0]), ftol=1e-14, xtol=1e-10, max_iter=5000)
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-5)


def test_nelder_mead_trace_is_monotone():
    res = nelder_mead(lambda x: float(np.sum((x - 3.0) ** 2)), np.zeros(4))
    assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))
    assert res.fun < 1e-9


def test_nelder_mead_iteration_cap():
    res = nelder_mead(_rosenbrock, np.array([-1.2, 1.0, 0.5]), max_iter=10)
    assert not res.converged and res.iterations == 10


def test_nelder_mead_deterministic():
    a = nelder_mead(_rosenbrock, np.array([0.3, -0.4]))
    b = nelder_mead(_rosenbrock, np.array([0.3, -0.4]))
    assert np.array_equal(a.x, b.x) and a.trace == b.trace


# ---------------------------------------------------------------------------
# likelihood

def test_loglik_matches_density_sum(group_a):
    mu, s2 = initial_parameters(group_a)
    Sigma = MatrixF.identity(12, 2) * s2
    direct = math.fsum(log_density_gaussian(c, MatrixF(mu, 2), Sigma) for c in group_a.specimens)
    assert loglik(mu, s2, group_a) == pytest.approx(direct, abs=1e-10)
    one = ShapeSample("one", group_a.specimens[:1])
    two = ShapeSample("two", group_a.specimens[:1] * 2)
    assert loglik(mu, s2, two) == pytest.approx(2 * loglik(mu, s2, one), abs=1e-12)
    assert loglik(mu, s2, one) == pytest.approx(log_density_gaussian(group_a.specimens[0], MatrixF(mu, 2), Sigma))


def test_loglik_permutation_invariant(group_a):
    mu, s2 = initial_parameters(group_a)
    perm = ShapeSample("p", tuple(reversed(group_a.specimens)))
    assert abs(loglik(mu, s2, perm) - loglik(mu, s2, group_a)) < 1e-12


def test_loglik_quaternion_and_two_columns(rng):
    # general path through the per-specimen closed form
    specs = tuple(ConfigurationCoordinates(MatrixF(rng.normal(size=(2, 2, 1)) * 0.5, 1)) for _ in range(3))
    s = ShapeSample("k2", specs)
    mu = rng.normal(size=(4, 2, 1)) * 0.3
    direct = math.fsum(log_density_gaussian(c, MatrixF(mu, 1), MatrixF.identity(4, 1) * 0.7) for c in specs)
    assert loglik(mu, 0.7, s) == pytest.approx(direct, abs=1e-10)
    specs4 = tuple(ConfigurationCoordinates(MatrixF(rng.normal(size=(2, 1, 4)) * 0.5, 4)) for _ in range(3))
    mu4 = rng.normal(size=(3, 1, 4)) * 0.3
    direct4 = math.fsum(log_density_gaussian(c, MatrixF(mu4, 4), MatrixF.identity(3, 4) * 0.5)
                        for c in specs4)
    assert loglik(mu4, 0.5, ShapeSample("q", specs4)) == pytest.approx(direct4, abs=1e-10)


def test_sample_validation(rng):
    c1 = ConfigurationCoordinates(MatrixF(rng.normal(size=(2, 1, 2)), 2))
    c2 = ConfigurationCoordinates(MatrixF(rng.normal(size=(3, 1, 2)), 2))
    with pytest.raises(DimensionError):
        ShapeSample("bad", (c1, c2))
    with pytest.raises(DimensionError):
        initial_parameters(ShapeSample("single", (c1,)))


# ---------------------------------------------------------------------------
# fitting

def test_fit_beats_true_parameters(group_a, fit_a):
    L = MatrixF.from_real(helmert_submatrix(13), 2)
    mu_true = (L @ _ellipse(13)).data
    assert fit_a.loglik >= loglik(mu_true, 0.02, group_a)
    assert fit_a.sigma2_hat > 0 and math.isfinite(fit_a.loglik)
    assert fit_a.converged


def test_fit_trace_monotone(fit_a):
    trace = fit_a.diagnostics["best_trace"]
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    assert trace[-1] == pytest.approx(fit_a.loglik)


def test_fit_is_deterministic(group_a, fit_a):
    again = fit_mle(group_a, FitOptions(seed=3))
    assert again.to_dict() == fit_a.to_dict()


def test_restart_at_optimum_is_a_fixed_point(group_a, fit_a):
    again = fit_mle(group_a, FitOptions(seed=9, restarts=1), starts=[(fit_a.mu_hat.data, fit_a.sigma2_hat)])
    assert abs(again.loglik - fit_a.loglik) < 1e-6


def test_identical_specimens_have_no_spread():
    c = ConfigurationCoordinates(MatrixF(np.array([[[0.4, 0.1]], [[-0.2, 0.3]]]), 2))
    with pytest.raises(DomainError):
        fit_mle(ShapeSample("same", (c,) * 5), FitOptions(restarts=1))


# ---------------------------------------------------------------------------
# likelihood-ratio test

def test_lrt_copy_gives_zero(group_a):
    copy = ShapeSample("copy", group_a.specimens)
    res = lrt_equal_means(group_a, copy, FitOptions(restarts=2))
    assert res.statistic < 1e-6
    assert res.p_value > 0.999
    assert res.df == 24


def test_lrt_detects_large_shift(group_a):
    b = _sample("b", 14, 2, shift=1.0)
    res = lrt_equal_means(group_a, b, FitOptions(restarts=2))
    assert res.p_value < 1e-3


def test_lrt_invariant_to_common_reregistration():
    N = 6
    rng = np.random.default_rng(4)
    muX = _ellipse(N)
    draw = lambda seed: sample_matrix_elliptical(muX, MatrixF.identity(N, 2) * 0.05, MatrixF.identity(1, 2),
                                                 None, RngSpec(seed).generator(), 10)
    Xa, Xb = draw(21), draw(22)
    E = MatrixF(np.array([[[1.3, -0.4]]]), 2)
    t = MatrixF(np.ones((N, 1, 2)) * 0.7, 2)

    def samples(transform):
        out = []
        for label, X in (("a", Xa), ("b", Xb)):
            lm = [MatrixF(x, 2) for x in X]
            if transform:
                lm = [x @ E + t for x in lm]
            out.append(ShapeSample.from_landmarks(label, lm))
        return out

    r0 = lrt_equal_means(*samples(False), FitOptions(restarts=2))
    r1 = lrt_equal_means(*samples(True), FitOptions(restarts=2))
    assert abs(r0.statistic - r1.statistic) < 1e-6


def test_lrt_dimension_mismatch(group_a):
    with pytest.raises(DimensionError):
        lrt_equal_means(group_a, _sample("c", 5, 3, N=8))


@pytest.mark.slow
def test_parameter_recovery_with_bootstrap():
    """n = 200 specimens; every coordinate of mu_hat within 3 bootstrap SE of the truth."""
    n, B = 200, 100
    L = MatrixF.from_real(helmert_submatrix(13), 2)
    mu_true = (L @ _ellipse(13)).data
    sample = _sample("big", n, 77)
    opts = FitOptions(restarts=1)
    fit = fit_mle(sample, opts, starts=[(mu_true, 0.02)])
    rng = RngSpec(78).generator()
    boots, s2 = [], []
    for _ in range(B):
        idx = rng.integers(0, n, size=n)
        s = ShapeSample("boot", tuple(sample.specimens[i] for i in idx))
        refit = fit_mle(s, opts, starts=[(fit.mu_hat.data, fit.sigma2_hat)])
        boots.append(refit.mu_hat.data)
        s2.append(refit.sigma2_hat)
    se = np.std(np.array(boots), axis=0, ddof=1)
    z = np.abs(fit.mu_hat.data - mu_true) / se
    assert np.max(z) < 3.0
    assert abs(fit.sigma2_hat - 0.02) < 3 * np.std(s2, ddof=1)
