import math

import numpy as np
import pytest
from scipy import integrate

from phevdemand.analytic import SessionModel
from phevdemand.distributions import new_gaussian, new_uniform

TARGET_VARIANCE = 100.0 / 12.0


def quad_range(dist):
    """Integration limits from the support and the analytic moments only."""
    lo, hi = dist.support
    m, s = dist.mean(), math.sqrt(dist.variance())
    if not math.isfinite(lo):
        lo = m - 40 * s
    if not math.isfinite(hi):
        hi = m + 40 * s
    return lo, hi


def quad_moments(dist):
    """(mass, mean, variance) of ``dist`` by adaptive quadrature of its pdf."""
    lo, hi = quad_range(dist)
    pts = [p for p in np.linspace(lo, hi, 9)[1:-1]]
    kw = dict(epsabs=1e-14, epsrel=1e-13, limit=500, points=pts)
    mass = integrate.quad(dist.pdf, lo, hi, **kw)[0]
    mean = integrate.quad(lambda x: x * dist.pdf(x), lo, hi, **kw)[0]
    var = integrate.quad(lambda x: (x - mean) ** 2 * dist.pdf(x), lo, hi, **kw)[0]
    return mass, mean, var


@pytest.fixture
def fig9_model():
    return SessionModel(new_gaussian(19, 10), new_uniform(1, 11), 1.4)
