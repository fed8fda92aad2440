import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from darkkepler.bessel import bessel_j, log_bessel_j_series


def quadrature_j(n, x):
    value, _ = integrate.quad(lambda t: math.cos(n * t - x * math.sin(t)), 0.0, math.pi,
                              epsabs=1e-13, epsrel=1e-13, limit=200)
    return value / math.pi


def test_special_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(1, 1.0) == pytest.approx(0.4400505857, abs=1e-10)
    assert bessel_j(1, 1.0) == pytest.approx(quadrature_j(1, 1.0), abs=1e-13)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 7, 20, 50])
@pytest.mark.parametrize("x", [1e-3, 0.3, 1.0, 4.2, 17.5, 99.0, 640.0, 1000.0])
def test_against_scipy(n, x):
    assert abs(bessel_j(n, x) - special.jv(n, x)) < 1e-12


@pytest.mark.parametrize("n,x", [(0, 2.5), (2, 0.7), (5, 12.0), (11, 9.3)])
def test_against_quadrature(n, x):
    assert bessel_j(n, x) == pytest.approx(quadrature_j(n, x), abs=1e-12)


@given(st.integers(1, 49), st.floats(0.1, 100.0))
def test_recurrence(n, x):
    lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
    assert lhs == pytest.approx(2 * n / x * bessel_j(n, x), abs=1e-10)


@given(st.integers(0, 50), st.floats(0.0, 1000.0))
def test_bounded(n, x):
    assert abs(bessel_j(n, x)) <= 1.0


@pytest.mark.parametrize("n,x", [(-1, 1.0), (51, 1.0), (1.5, 1.0), (2, -0.1), (2, 1001.0)])
def test_domain_errors(n, x):
    with pytest.raises(ValueError):
        bessel_j(n, x)


@pytest.mark.parametrize("n,x", [(3, 0.5), (20, 2.0), (45, 1e-3), (40, 6.0)])
def test_log_series(n, x):
    assert log_bessel_j_series(n, x) == pytest.approx(np.log(special.jv(n, x)), rel=1e-12)


def test_log_series_reaches_beyond_underflow():
    # J_200(1e-3) underflows a double; its log does not
    expected = 200 * math.log(5e-4) - math.lgamma(201)
    assert log_bessel_j_series(200, 1e-3) == pytest.approx(expected, rel=1e-9)
    with pytest.raises(ValueError):
        log_bessel_j_series(2, 5.0)


@pytest.mark.parametrize("n", [0, 1, 5, 50])
def test_subnormal_argument(n):
    assert abs(bessel_j(n, 5e-324) - special.jv(n, 5e-324)) < 1e-12
    assert math.isfinite(log_bessel_j_series(n + 1, 5e-324))
