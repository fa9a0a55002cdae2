import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from twr.specfun import (QuadratureSpec, Transform, erfc, exp_moments, gamma_fn,
                         integrate_interval, integrate_semi_infinite, lower_inc_gamma)


def test_lower_inc_gamma_values():
    assert math.isclose(lower_inc_gamma(1, 1), 1 - math.exp(-1), rel_tol=1e-14)
    assert lower_inc_gamma(2.5, 0) == 0.0
    ref, _ = integrate.quad(lambda t: t ** 1.5 * math.exp(-t), 0, 3.7, epsabs=1e-14, epsrel=1e-13)
    assert abs(lower_inc_gamma(2.5, 3.7) - ref) < 1e-10
    assert math.isclose(lower_inc_gamma(3.0, 200.0), 2.0, rel_tol=1e-14)


def test_lower_inc_gamma_domain():
    for a, x in ((0, 1), (-1, 1), (1, -0.5)):
        with pytest.raises(ValueError):
            lower_inc_gamma(a, x)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.1, 20), x=st.floats(0.01, 50))
def test_lower_inc_gamma_recurrence(a, x):
    lhs = lower_inc_gamma(a + 1, x)
    rhs = a * lower_inc_gamma(a, x) - x ** a * math.exp(-x)
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-300)


def test_erfc():
    assert erfc(0) == 1.0
    assert erfc(40.0) < 1e-300
    assert abs(erfc(1.0) - 0.1572992070502851) < 1e-15
    x = np.array([-2.0, 0.3, 1.5])
    np.testing.assert_allclose(erfc(-x), 2 - erfc(x), rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.0, 4.0])
def test_erfc_vs_incomplete_gamma(x):
    erf = lower_inc_gamma(0.5, x * x) / math.sqrt(math.pi)
    assert abs(erfc(x) + erf - 1) < 1e-10


def test_gamma_fn():
    assert math.isclose(gamma_fn(2.5), 3 * math.sqrt(math.pi) / 4, rel_tol=1e-14)
    assert gamma_fn(1) == 1.0
    assert gamma_fn(4) == 6.0
    with pytest.raises(ValueError):
        gamma_fn(0)


def test_semi_infinite_examples():
    v, err = integrate_semi_infinite(lambda g: math.exp(-g))
    assert abs(v - 1) < 1e-9 and err >= 0
    spec = QuadratureSpec(transform=Transform.SQRT)
    v, _ = integrate_semi_infinite(lambda g: math.exp(-g) / math.sqrt(g), spec)
    assert abs(v - math.sqrt(math.pi)) < 1e-8
    a, b = 0.5, 1.0
    v, _ = integrate_semi_infinite(lambda g: a * math.sqrt(b / math.pi) * math.exp(-b * g) / math.sqrt(g),
                                   spec, upper=36.84 / b)
    assert abs(v - 0.5) < 1e-8


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 5.0])
@pytest.mark.parametrize("transform", list(Transform))
def test_semi_infinite_reproduces_gamma(a, transform):
    spec = QuadratureSpec(transform=transform)
    v, _ = integrate_semi_infinite(lambda t: t ** (a - 1) * math.exp(-t), spec)
    assert math.isclose(v, math.gamma(a), rel_tol=1e-7)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=4)


def test_nonconvergence_is_flagged():
    spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=16)
    with pytest.warns(RuntimeWarning):
        res = integrate_interval(lambda x: math.sin(1.0 / x) if x > 0 else 0.0, 0.0, 1.0, spec)
    assert not res.converged


def _moment_ref(l, x):
    # J_l(x) = int_0^1 u^l e^{-xu} du = l! x^{-(l+1)} P(l+1, x) for x > 0.
    from scipy import special
    if x == 0:
        return 1.0 / (l + 1)
    if x > 0:
        return math.exp(math.lgamma(l + 1) - (l + 1) * math.log(x)) * special.gammainc(l + 1, x)
    v, _ = integrate.quad(lambda u: u ** l * math.exp(-x * u), 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    return v


@pytest.mark.parametrize("x", [-80.0, -30.0, -3.0, -1e-3, 0.0, 1e-3, 0.7, 5.0, 40.0, 300.0,
                               599.0, 601.0, 2000.0, 1e5])
def test_exp_moments(x):
    m, shift = exp_moments(x, 60)
    for l in (0, 1, 5, 17, 30, 59):
        assert math.isclose(m[l] * math.exp(shift), _moment_ref(l, x), rel_tol=1e-9, abs_tol=1e-300)
