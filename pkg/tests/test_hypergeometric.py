import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import hyp1f1

from affine_shape.errors import ConvergenceError, DomainError
from affine_shape.hypergeometric import (
    HypergeometricSpec,
    hypergeometric_matrix,
    hypergeometric_series,
    termination_weight,
)
from affine_shape.jack import jack_c
from affine_shape.special_functions import gen_pochhammer, partitions_of

small_spectra = st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=3)


def test_0f0_is_exponential_of_trace():
    val = hypergeometric_matrix(HypergeometricSpec(beta=1, max_weight=30), [0.1, 0.2])
    assert val == pytest.approx(math.exp(0.3), rel=1e-10)


@pytest.mark.parametrize("beta", (1, 2, 4))
@settings(max_examples=15, deadline=None)
@given(x=small_spectra)
def test_0f0_property(beta, x):
    val = hypergeometric_matrix(HypergeometricSpec(beta=beta, max_weight=40), x)
    assert val == pytest.approx(math.exp(sum(x)), rel=1e-8)


def test_1f0_determinant_identity():
    val = hypergeometric_matrix(HypergeometricSpec((1.5,), beta=1, max_weight=40), [0.2, 0.3])
    assert val == pytest.approx((0.8 * 0.7) ** -1.5, rel=1e-8)


@pytest.mark.parametrize("beta", (1, 2, 4))
@settings(max_examples=15, deadline=None)
@given(x=small_spectra, a=st.floats(0.3, 3.0))
def test_1f0_property(beta, x, a):
    # at spectral radius 0.5 the slowest case sits near the 1e-10 remainder
    # target at M = 40, so read the truncated value without the convergence gate
    val = hypergeometric_series(HypergeometricSpec((a,), beta=beta, max_weight=40), x).value
    assert val == pytest.approx(np.prod(1.0 - np.array(x)) ** -a, rel=1e-8)


def test_terminating_scalar_1f1():
    res = hypergeometric_series(HypergeometricSpec((-2.0,), (1.0,), beta=2), [0.7])
    x = 0.7
    assert res.terminated and len(res.shells) == 3
    assert res.value == pytest.approx(1 - 2 * x + x * x / 2, rel=1e-15)
    assert res.value == pytest.approx(hyp1f1(-2, 1, x), rel=1e-14)


def test_terminating_matrix_series_equals_finite_sum():
    spec = HypergeometricSpec((-2.0,), (1.5,), beta=1)
    x = [0.4, -0.9]
    direct = math.fsum(
        gen_pochhammer(1, -2.0, kap) / gen_pochhammer(1, 1.5, kap) * jack_c(1, kap, x) / math.factorial(k)
        for k in range(5) for kap in partitions_of(k, 2))
    res = hypergeometric_series(spec, x)
    assert res.terminated
    assert res.value == pytest.approx(direct, rel=1e-14)
    assert termination_weight(spec, 2) == 4


def test_scalar_1f1_against_scipy():
    for a, b, x in [(0.5, 1.5, 2.0), (2.3, 0.7, -1.2), (1.0, 3.0, 4.0)]:
        val = hypergeometric_matrix(HypergeometricSpec((a,), (b,), beta=1, max_weight=60), [x])
        assert val == pytest.approx(hyp1f1(a, b, x), rel=1e-10)


def test_lower_pole_is_an_error():
    with pytest.raises(DomainError):
        hypergeometric_matrix(HypergeometricSpec((1.0,), (-1.0,), beta=1), [0.3])


def test_truncation_shortfall_is_an_error():
    with pytest.raises(ConvergenceError):
        hypergeometric_matrix(HypergeometricSpec((1.0,), beta=1, max_weight=5), [0.9])


def test_raising_the_budget_keeps_earlier_shells():
    x = [0.3, 0.1]
    a = hypergeometric_series(HypergeometricSpec((2.0,), (3.0,), beta=2, max_weight=8, tol=1e-30), x)
    b = hypergeometric_series(HypergeometricSpec((2.0,), (3.0,), beta=2, max_weight=15, tol=1e-30), x)
    assert b.shells[:9] == a.shells
    assert b.error_estimate < a.error_estimate


def test_spec_validation():
    with pytest.raises(ValueError):
        HypergeometricSpec(max_weight=-1)
    with pytest.raises(ValueError):
        HypergeometricSpec(tol=0.0)
