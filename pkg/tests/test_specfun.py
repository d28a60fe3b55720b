import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from phevdemand.specfun import (
    bessel_i0,
    bessel_i0e,
    q_function,
    std_normal_cdf,
    std_normal_cdf_antiderivative,
    std_normal_pdf,
)

reals = st.floats(min_value=-40, max_value=40, allow_nan=False)


def gauss_tail_quad(x):
    f = lambda u: math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
    if x >= 0:
        return integrate.quad(f, x, np.inf, epsabs=1e-15, epsrel=1e-13)[0]
    return 1.0 - integrate.quad(f, -np.inf, x, epsabs=1e-15, epsrel=1e-13)[0]


def i0_series(x, terms=30):
    term, total = 1.0, 1.0
    for k in range(1, terms):
        term *= (x * x / 4.0) / (k * k)
        total += term
    return total


def test_q_function_examples():
    assert q_function(0.0) == 0.5
    assert abs(q_function(-30.0) - 1.0) <= 1e-15
    # mpmath quadrature of the Gaussian tail, 40 digits
    assert q_function(1.6448536) == pytest.approx(0.050000002779657456, abs=1e-15)


def test_pdf_examples():
    assert std_normal_pdf(0.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    assert std_normal_pdf(1.0) == std_normal_pdf(-1.0)
    # series for exp(-2) / sqrt(2 pi)
    assert std_normal_pdf(2.0) == pytest.approx(0.05399096651318805, rel=1e-14)


def test_cdf_examples():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_cdf(30.0) - 1.0) <= 1e-15
    assert std_normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-15)


def test_antiderivative_examples():
    assert std_normal_cdf_antiderivative(0.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    assert abs(std_normal_cdf_antiderivative(-40.0)) < 1e-300
    diff = std_normal_cdf_antiderivative(1.0) - std_normal_cdf_antiderivative(-1.0)
    oracle = integrate.quad(std_normal_cdf, -1, 1, epsabs=1e-14)[0]
    assert diff == pytest.approx(oracle, abs=1e-13)


def test_bessel_examples():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520082, rel=1e-15)
    assert bessel_i0(-2.0) == bessel_i0(2.0)


def test_bessel_overflow_guard():
    with pytest.raises(OverflowError):
        bessel_i0(701.0)
    assert math.isfinite(bessel_i0(700.0))


def test_bessel_matches_series_oracle():
    xs = np.linspace(0, 20, 401)
    ours = bessel_i0(xs)
    oracle = np.array([i0_series(x, 30) for x in xs])
    np.testing.assert_allclose(ours, oracle, rtol=1e-12)


@pytest.mark.parametrize("x", [0.5, 10.0, 14.999, 15.0, 15.001, 30.0, 300.0])
def test_bessel_scaled_consistent(x):
    assert bessel_i0e(x) == pytest.approx(bessel_i0(x) * math.exp(-x), rel=1e-14)


def test_vector_inputs_keep_shape():
    x = np.linspace(-3, 3, 7).reshape(7, 1)
    for fn in (q_function, std_normal_pdf, std_normal_cdf, std_normal_cdf_antiderivative, bessel_i0):
        assert fn(x).shape == (7, 1)
    assert isinstance(q_function(0.3), float)


@given(reals)
def test_q_bounds_and_symmetry(x):
    q = q_function(x)
    assert 0.0 <= q <= 1.0
    assert abs(q + q_function(-x) - 1.0) <= 1e-14


@given(st.floats(min_value=-10, max_value=10))
@settings(max_examples=60)
def test_q_matches_quadrature(x):
    assert abs(q_function(x) - gauss_tail_quad(x)) <= 1e-12


@given(st.floats(min_value=-8, max_value=8))
def test_antiderivative_derivative_is_cdf(x):
    h = 1e-5
    d = (std_normal_cdf_antiderivative(x + h) - std_normal_cdf_antiderivative(x - h)) / (2 * h)
    assert abs(d - std_normal_cdf(x)) <= 1e-6


@given(reals, reals)
def test_q_strictly_decreasing(a, b):
    if a < b and q_function(a) > 0 and q_function(b) < 1:
        assert q_function(a) >= q_function(b)


def test_pdf_peak_at_zero():
    xs = np.linspace(-5, 5, 1001)
    assert np.all(std_normal_pdf(xs) <= std_normal_pdf(0.0))
