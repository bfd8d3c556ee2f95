"""Acceptance criteria, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -s`` (or look for the ``ACCEPTANCE``
lines in the verbose log).  Criterion 8 takes about 17 minutes on one core.
Criterion 9 needs the original two-group landmark data; point
``AFFINE_SHAPE_GROUP_A`` and ``AFFINE_SHAPE_GROUP_B`` at the files to run it.
"""

import math
import os

import numpy as np
import pytest
from scipy import integrate

from affine_shape.algebra import MatrixF
from affine_shape.densities import (
    EllipticalShapeModel,
    density_central,
    log_density_gaussian,
    log_density_general,
    noncentrality,
)
from affine_shape.hypergeometric import HypergeometricSpec, hypergeometric_matrix
from affine_shape.inference import FitOptions, ShapeSample, chisq_sf, lrt_equal_means
from affine_shape.io import configurations_from_landmarks, read_landmarks
from affine_shape.jack import jack_c
from affine_shape.mc_validation import (
    RngSpec,
    batch_configuration_coords,
    run_suite,
    sample_matrix_elliptical,
)
from affine_shape.shape import ConfigurationCoordinates
from affine_shape.special_functions import partitions_of

from conftest import random_matrix, random_posdef


def report(capsys, number, title, ok, detail=""):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
    assert ok, f"criterion {number} failed: {detail}"


def test_1_chisq_tail(capsys):
    p = chisq_sf(46.98, 24)
    report(capsys, 1, "chi-square tail", 0.0032 <= p <= 0.0036, f"chisq_sf(46.98, 24) = {p:.6f}")


def test_2_jack_sum_identity(capsys):
    rng = np.random.default_rng(2)
    worst = 0.0
    for beta in (1, 2, 4):
        for m in (1, 2, 3, 4):
            for _ in range(3):
                x = rng.uniform(0.05, 2.0, size=m)
                for k in range(1, 7):
                    s = math.fsum(jack_c(beta, kap, x) for kap in partitions_of(k, m))
                    worst = max(worst, abs(s - x.sum() ** k) / x.sum() ** k)
    report(capsys, 2, "Jack sum identity", worst < 1e-10, f"max rel err {worst:.2e}")


def test_3_hypergeometric_identities(capsys):
    rng = np.random.default_rng(3)
    worst = 0.0
    for beta in (1, 2, 4):
        for m in (1, 2, 3):
            for _ in range(4):
                x = rng.uniform(-0.5, 0.5, size=m)
                f00 = hypergeometric_matrix(HypergeometricSpec((), (), beta, max_weight=40, tol=1e-8), x)
                worst = max(worst, abs(f00 / math.exp(x.sum()) - 1))
                a = float(rng.uniform(0.3, 3.0))
                f10 = hypergeometric_matrix(HypergeometricSpec((a,), (), beta, max_weight=40, tol=1e-8), x)
                worst = max(worst, abs(f10 / np.prod(1 - x) ** (-a) - 1))
    report(capsys, 3, "0F0 and 1F0 identities (M = 40, radius <= 0.5)", worst < 1e-8,
           f"max rel err {worst:.2e}")


def test_4_central_normalisation(capsys):
    cauchy = integrate.quad(lambda v: density_central(
        ConfigurationCoordinates(MatrixF(np.array([[[v]]]), 1)), MatrixF.identity(2, 1)), -np.inf, np.inf)[0]
    res = [r for r in run_suite("normalization", band=3.0)]
    zs = {name: rec["z_score"] for name, rec, _ in res}
    ok = abs(cauchy - 1) < 1e-3 and all(ok for _, _, ok in res)
    detail = f"Cauchy integral {cauchy:.10f}; max |z| {max(abs(z) for z in zs.values()):.2f} over {len(zs)} MC cases"
    report(capsys, 4, "central density normalisation", ok, detail)


def test_5_general_vs_gaussian(capsys):
    worst = 0.0
    for beta, K, N in ((1, 1, 4), (2, 1, 13)):
        rng = np.random.default_rng(500 + beta)
        n1 = N - 1
        Sigma = random_posdef(rng, n1, beta, ridge=1.0)
        Theta = random_posdef(rng, K, beta, ridge=1.0)
        mu = random_matrix(rng, n1, K, beta) * (0.5 / math.sqrt(n1 * K))
        model = EllipticalShapeModel(N, K, beta, mu, Sigma, Theta)
        for _ in range(50):
            V = ConfigurationCoordinates(MatrixF(0.7 * rng.normal(size=(N - K - 1, K, beta)), beta))
            lg = log_density_general(V, model)
            lc = log_density_gaussian(V, mu, Sigma, Theta)
            worst = max(worst, abs(math.expm1(lg - lc)))
    report(capsys, 5, "general series vs Gaussian closed form (100 points)", worst < 1e-6,
           f"max rel err {worst:.2e}")


def test_6_moment_and_jacobian_suites(capsys):
    pos = [r for s in ("stiefel", "cone", "jacobian") for r in run_suite(s, band=3.0)]
    neg = [r for s in ("stiefel", "cone", "jacobian") for r in run_suite(s, negative_control=True)]
    zpos = max(abs(rec["z_score"]) for _, rec, _ in pos)
    zneg = min(abs(rec["z_score"]) for _, rec, _ in neg)
    ok = all(ok for _, _, ok in pos) and zpos < 3 and zneg > 5
    report(capsys, 6, "Stiefel, cone and Jacobian checks", ok,
           f"{len(pos)} checks max |z| {zpos:.2f}; negative controls min |z| {zneg:.1f}")


def test_7_central_invariance(capsys):
    pos = run_suite("invariance")
    neg = run_suite("invariance", negative_control=True)
    pmin = min(min(rec["p_values"].values()) for _, rec, _ in pos)
    ok = all(ok for _, _, ok in pos) and not any(ok for _, _, ok in neg)
    report(capsys, 7, "central law free of the generator (n = 5000 per group)", ok,
           f"smallest KS p {pmin:.3g}; shifted control rejected in {sum(not o for *_, o in neg)}/{len(neg)}")


@pytest.mark.slow
def test_8_wilks_calibration(capsys):
    N = 13
    th = np.linspace(0, 2 * np.pi, N, endpoint=False)
    mu = np.zeros((N, 1, 2))
    mu[:, 0, 0] = np.cos(th)
    mu[:, 0, 1] = 0.6 * np.sin(th) + 0.1 * np.cos(2 * th)
    muX, S, T = MatrixF(mu, 2), MatrixF.identity(N, 2) * 0.02, MatrixF.identity(1, 2)

    def group(label, g):
        V, ok = batch_configuration_coords(sample_matrix_elliptical(muX, S, T, None, g, size=14))
        return ShapeSample(label, tuple(ConfigurationCoordinates(MatrixF(v, 2)) for v in V[ok]))

    stats = []
    for i in range(200):
        g = RngSpec(1000 + i).generator()
        stats.append(lrt_equal_means(group("a", g), group("b", g)).statistic)
    stats = np.array(stats)
    crit = 36.41502850180731  # upper 5% point of chi-square with 24 df
    mean, rate = float(stats.mean()), float(np.mean(stats > crit))
    ok = 21.6 <= mean <= 26.4 and 0.02 <= rate <= 0.09
    report(capsys, 8, "Wilks calibration (200 null replicates)", ok,
           f"mean statistic {mean:.2f}; 5% rejection rate {rate:.3f}")


def test_9_reference_dataset(capsys):
    a, b = os.environ.get("AFFINE_SHAPE_GROUP_A"), os.environ.get("AFFINE_SHAPE_GROUP_B")
    if not (a and b):
        with capsys.disabled():
            print("\nACCEPTANCE 9: SKIP  reference dataset not supplied "
                  "(set AFFINE_SHAPE_GROUP_A and AFFINE_SHAPE_GROUP_B)")
        pytest.skip("reference dataset not available")

    def sample(path):
        cf = configurations_from_landmarks(read_landmarks(path))
        return ShapeSample(cf.group, tuple(c for _, c in cf.specimens))

    res = lrt_equal_means(sample(a), sample(b), FitOptions())
    ok = abs(res.statistic - 46.98) <= 0.5 and abs(res.p_value - 0.0034) <= 0.001
    report(capsys, 9, "reference dataset", ok, f"statistic {res.statistic:.3f}; p {res.p_value:.4f}")
