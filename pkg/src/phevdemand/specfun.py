"""Scalar special functions used by the analytic demand formulas.

All functions accept Python floats or numpy arrays and return the same
shape. Scalars come back as plain ``float``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# I0 switches from the power series to the asymptotic expansion here.
_I0_SWITCH = 15.0
_I0_SERIES_TERMS = 60
_I0_ASYMPTOTIC_TERMS = 24
I0_OVERFLOW_GUARD = 700.0


def _out(x, value):
    if np.ndim(x) == 0:
        return float(value)
    return value


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x) for a standard normal Z."""
    xa = np.asarray(x, dtype=float)
    # erfc keeps full relative accuracy in the upper tail
    return _out(x, 0.5 * erfc(xa / math.sqrt(2.0)))


def std_normal_pdf(x):
    xa = np.asarray(x, dtype=float)
    return _out(x, np.exp(-0.5 * xa * xa) * INV_SQRT_2PI)


def std_normal_cdf(x):
    """F(x) = 1 - Q(x), evaluated as Q(-x) so the lower tail keeps precision."""
    xa = np.asarray(x, dtype=float)
    return _out(x, 0.5 * erfc(-xa / math.sqrt(2.0)))


def std_normal_cdf_antiderivative(x):
    """Return x F(x) + f(x), the antiderivative of F with zero constant."""
    xa = np.asarray(x, dtype=float)
    F = np.asarray(std_normal_cdf(xa))
    f = np.asarray(std_normal_pdf(xa))
    return _out(x, xa * F + f)


def _i0_series(ax):
    # terms (x^2/4)^k / (k!)^2 built iteratively; all positive so no cancellation
    y = 0.25 * ax * ax
    term = np.ones_like(ax)
    total = np.ones_like(ax)
    for k in range(1, _I0_SERIES_TERMS + 1):
        term = term * y / (k * k)
        total = total + term
    return total


def _i0_asymptotic_scaled(ax):
    # e^{-x} I0(x) ~ 1/sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    term = np.ones_like(ax)
    total = np.ones_like(ax)
    for k in range(1, _I0_ASYMPTOTIC_TERMS + 1):
        term = term * (2 * k - 1) ** 2 / (8.0 * k * ax)
        total = total + term
    return total / np.sqrt(2.0 * math.pi * ax)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero.

    Raises OverflowError for ``|x| > 700``.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    if np.any(ax > I0_OVERFLOW_GUARD):
        raise OverflowError(f"bessel_i0 argument exceeds |x| <= {I0_OVERFLOW_GUARD}")
    small = ax < _I0_SWITCH
    out = np.empty_like(ax)
    out[small] = _i0_series(ax[small])
    big = ax[~small]
    out[~small] = np.exp(big) * _i0_asymptotic_scaled(big)
    return _out(x, out)


def bessel_i0e(x):
    """Exponentially scaled I0: exp(-|x|) * I0(x). Finite for every finite x."""
    ax = np.abs(np.asarray(x, dtype=float))
    small = ax < _I0_SWITCH
    out = np.empty_like(ax)
    s = ax[small]
    out[small] = np.exp(-s) * _i0_series(s)
    out[~small] = _i0_asymptotic_scaled(ax[~small])
    return _out(x, out)
