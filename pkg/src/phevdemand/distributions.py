"""Arrival-time and charging-time distributions.

Five continuous families are provided: the full-line Gaussian used for the
arrival time, and uniform, exponential, positive-support Gaussian and Rician
families for the charging time. A small discrete ``Lattice`` family exists
for brute-force cross-checks of the analytic code.

Every distribution is immutable. Sampling draws from a ``RandomStream``,
which wraps a counter-based generator keyed by ``(seed, stream_id)``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .specfun import (
    bessel_i0e,
    q_function,
    std_normal_cdf,
    std_normal_cdf_antiderivative,
    std_normal_pdf,
)

# accept-reject is refused below this acceptance probability
MIN_ACCEPTANCE = 1e-3


class InvalidParameterError(ValueError):
    pass


class NoSolutionError(ValueError):
    """No parameter set of the family reproduces the requested moments."""


class MomentMismatchWarning(UserWarning):
    pass


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    RICIAN = "rician"
    LATTICE = "lattice"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "normal": cls.GAUSSIAN,
            "trunc_gauss": cls.TRUNCATED_GAUSSIAN,
            "truncated_normal": cls.TRUNCATED_GAUSSIAN,
            "rice": cls.RICIAN,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidParameterError(f"unknown distribution family {name!r}") from None


class RandomStream:
    """Reproducible, independent random stream.

    Equal ``(seed, stream_id)`` pairs yield identical sequences; different
    ``stream_id`` values under one seed are spawned children of the same
    ``SeedSequence`` and therefore independent.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        if self.seed < 0 or self.stream_id < 0:
            raise InvalidParameterError("seed and stream_id must be non-negative")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"


def _check_finite(**params):
    for name, value in params.items():
        if not math.isfinite(value):
            raise InvalidParameterError(f"{name} must be finite, got {value!r}")


def _ret(x, value):
    if np.ndim(x) == 0:
        return float(value)
    return value


class Distribution:
    """Common interface. Subclasses are frozen dataclasses."""

    family: Family

    @property
    def support(self):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, p):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def variance(self):
        raise NotImplementedError

    def std(self):
        return math.sqrt(self.variance())

    def params(self):
        raise NotImplementedError

    def scaled(self, k):
        """Distribution of ``k * X`` for a positive finite scale ``k``."""
        raise NotImplementedError

    def _draw(self, rng, n):
        raise NotImplementedError

    def sample(self, stream, size=None):
        n = 1 if size is None else int(size)
        out = self._draw(stream.generator, n)
        return float(out[0]) if size is None else out

    def mass_interval(self, eps=1e-10):
        """Interval holding all but ``2 * eps`` of the mass, clipped to the support."""
        lo, hi = self.support
        if not math.isfinite(lo):
            lo = self.ppf(eps)
        if not math.isfinite(hi):
            hi = self.ppf(1.0 - eps)
        return float(lo), float(hi)

    def cdf_integral(self, x):
        """Integral of the CDF from -inf to ``x``, i.e. E[(x - X)^+]."""
        lo = self.mass_interval(1e-15)[0]

        def one(v):
            if v <= lo:
                return 0.0
            val, _ = integrate.quad(self.cdf, lo, v, limit=200, epsabs=1e-13)
            return val

        xa = np.asarray(x, dtype=float)
        return _ret(x, np.vectorize(one, otypes=[float])(xa))

    def describe(self):
        args = ", ".join(f"{k}={v:.12g}" for k, v in self.params().items())
        return f"{self.family.value}({args})"


def _check_scale(k):
    if not (math.isfinite(k) and k > 0):
        raise InvalidParameterError(f"scale factor must be positive and finite, got {k!r}")


@dataclass(frozen=True)
class Gaussian(Distribution):
    mu: float
    sigma2: float
    family: Family = field(default=Family.GAUSSIAN, init=False, repr=False)

    def __post_init__(self):
        _check_finite(mu=self.mu, sigma2=self.sigma2)
        if self.sigma2 <= 0:
            raise InvalidParameterError(f"sigma2 must be > 0, got {self.sigma2}")

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def support(self):
        return (-math.inf, math.inf)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return _ret(x, std_normal_pdf(z) / self.sigma)

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return _ret(x, std_normal_cdf(z))

    def ppf(self, p):
        return _ret(p, self.mu + self.sigma * special.ndtri(np.asarray(p, dtype=float)))

    def cdf_integral(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return _ret(x, self.sigma * std_normal_cdf_antiderivative(z))

    def mean(self):
        return float(self.mu)

    def variance(self):
        return float(self.sigma2)

    def params(self):
        return {"mu": self.mu, "sigma2": self.sigma2}

    def scaled(self, k):
        _check_scale(k)
        return Gaussian(self.mu * k, self.sigma2 * k * k)

    def _draw(self, rng, n):
        return rng.normal(self.mu, self.sigma, n)


@dataclass(frozen=True)
class Uniform(Distribution):
    """Uniform on ``[c, d)`` with ``0 <= c < d``."""

    c: float
    d: float
    family: Family = field(default=Family.UNIFORM, init=False, repr=False)

    def __post_init__(self):
        _check_finite(c=self.c, d=self.d)
        if self.c < 0 or self.d <= self.c:
            raise InvalidParameterError(f"uniform needs 0 <= c < d, got c={self.c}, d={self.d}")

    @property
    def support(self):
        return (float(self.c), float(self.d))

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        inside = (xa >= self.c) & (xa < self.d)
        return _ret(x, np.where(inside, 1.0 / (self.d - self.c), 0.0))

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _ret(x, np.clip((xa - self.c) / (self.d - self.c), 0.0, 1.0))

    def ppf(self, p):
        return _ret(p, self.c + np.asarray(p, dtype=float) * (self.d - self.c))

    def cdf_integral(self, x):
        xa = np.asarray(x, dtype=float)
        w = self.d - self.c
        inner = 0.5 * np.clip(xa - self.c, 0.0, w) ** 2 / w
        return _ret(x, inner + np.maximum(xa - self.d, 0.0))

    def mean(self):
        return 0.5 * (self.c + self.d)

    def variance(self):
        return (self.d - self.c) ** 2 / 12.0

    def params(self):
        return {"c": self.c, "d": self.d}

    def scaled(self, k):
        _check_scale(k)
        return Uniform(self.c * k, self.d * k)

    def _draw(self, rng, n):
        return rng.uniform(self.c, self.d, n)


@dataclass(frozen=True)
class Exponential(Distribution):
    mean_value: float
    family: Family = field(default=Family.EXPONENTIAL, init=False, repr=False)

    def __post_init__(self):
        _check_finite(mean=self.mean_value)
        if self.mean_value <= 0:
            raise InvalidParameterError(f"exponential mean must be > 0, got {self.mean_value}")

    @property
    def rate(self):
        return 1.0 / self.mean_value

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            val = np.where(xa >= 0, self.rate * np.exp(-self.rate * np.maximum(xa, 0.0)), 0.0)
        return _ret(x, val)

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _ret(x, -np.expm1(-self.rate * np.maximum(xa, 0.0)))

    def ppf(self, p):
        return _ret(p, -self.mean_value * np.log1p(-np.asarray(p, dtype=float)))

    def mean(self):
        return float(self.mean_value)

    def variance(self):
        return float(self.mean_value) ** 2

    def params(self):
        return {"mean": self.mean_value}

    def scaled(self, k):
        _check_scale(k)
        return Exponential(self.mean_value * k)

    def _draw(self, rng, n):
        return rng.exponential(self.mean_value, n)


def _inv_mills(alpha):
    """phi(alpha) / Q(alpha), stable for large positive alpha."""
    a = np.asarray(alpha, dtype=float)
    with np.errstate(over="ignore"):
        den = special.erfcx(a / math.sqrt(2.0))
    return _ret(alpha, math.sqrt(2.0 / math.pi) / den)


def _truncated_shape(alpha):
    """Standardized mean and variance of N(0,1) conditioned on Z >= alpha."""
    lam = _inv_mills(alpha)
    return lam, 1.0 + alpha * lam - lam * lam


@dataclass(frozen=True)
class TruncatedGaussian(Distribution):
    """Gaussian N(mu, sigma2) conditioned on the half line ``[0, inf)``."""

    mu: float
    sigma2: float
    family: Family = field(default=Family.TRUNCATED_GAUSSIAN, init=False, repr=False)

    def __post_init__(self):
        _check_finite(mu=self.mu, sigma2=self.sigma2)
        if self.sigma2 <= 0:
            raise InvalidParameterError(f"sigma2 must be > 0, got {self.sigma2}")

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def alpha(self):
        return -self.mu / self.sigma

    @property
    def acceptance(self):
        """Mass of the parent Gaussian on the positive half line, Q(-mu/sigma)."""
        return q_function(self.alpha)

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        z = (xa - self.mu) / self.sigma
        val = np.where(xa >= 0, std_normal_pdf(z) / (self.sigma * self.acceptance), 0.0)
        return _ret(x, val)

    def cdf(self, x):
        xa = np.maximum(np.asarray(x, dtype=float), 0.0)
        z = (xa - self.mu) / self.sigma
        Z = self.acceptance
        return _ret(x, np.clip((Z - q_function(z)) / Z, 0.0, 1.0))

    def ppf(self, p):
        pa = np.asarray(p, dtype=float)
        tail = self.acceptance * (1.0 - pa)
        return _ret(p, np.maximum(self.mu - self.sigma * special.ndtri(tail), 0.0))

    def mean(self):
        lam, _ = _truncated_shape(self.alpha)
        return self.mu + self.sigma * lam

    def variance(self):
        _, omega = _truncated_shape(self.alpha)
        return self.sigma2 * omega

    def params(self):
        return {"mu": self.mu, "sigma2": self.sigma2}

    def scaled(self, k):
        _check_scale(k)
        return TruncatedGaussian(self.mu * k, self.sigma2 * k * k)

    def accept_reject(self, rng, n):
        """Draw ``n`` values by rejecting negative Gaussian proposals.

        Returns ``(samples, proposals)`` where ``proposals`` counts every
        Gaussian draw made.
        """
        if self.acceptance < MIN_ACCEPTANCE:
            raise InvalidParameterError(
                f"acceptance probability {self.acceptance:.3g} below {MIN_ACCEPTANCE}; "
                "accept-reject sampling refused"
            )
        out = np.empty(n)
        filled = 0
        proposals = 0
        while filled < n:
            want = n - filled
            batch = int(want / self.acceptance * 1.05) + 16
            draws = rng.normal(self.mu, self.sigma, batch)
            ok = np.flatnonzero(draws >= 0.0)
            if ok.size >= want:
                # only the proposals up to the last accepted one are consumed
                proposals += int(ok[want - 1]) + 1
                out[filled:] = draws[ok[:want]]
                filled = n
            else:
                proposals += batch
                out[filled:filled + ok.size] = draws[ok]
                filled += ok.size
        return out, proposals

    def _draw(self, rng, n):
        return self.accept_reject(rng, n)[0]


def _laguerre_half_neg(z):
    """Laguerre function L_{1/2}(-z) for z >= 0, via scaled Bessel functions."""
    h = 0.5 * np.asarray(z, dtype=float)
    return (1.0 + 2 * h) * bessel_i0e(h) + 2 * h * special.i1e(h)


def _rice_shape(kappa):
    """Mean and second moment of a unit-scale Rician with nu/sigma = kappa."""
    g = math.sqrt(math.pi / 2.0) * float(_laguerre_half_neg(0.5 * kappa * kappa))
    return g, 2.0 + kappa * kappa


@dataclass(frozen=True)
class Rician(Distribution):
    """Rician with noncentrality ``nu`` and scale ``sigma`` on ``[0, inf)``.

    Density ``(x/s^2) exp(-(x^2 + nu^2) / (2 s^2)) I0(x nu / s^2)``.
    """

    nu: float
    sigma: float
    family: Family = field(default=Family.RICIAN, init=False, repr=False)

    def __post_init__(self):
        _check_finite(nu=self.nu, sigma=self.sigma)
        if self.nu < 0 or self.sigma <= 0:
            raise InvalidParameterError(
                f"rician needs nu >= 0 and sigma > 0, got nu={self.nu}, sigma={self.sigma}"
            )

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, x):
        xa = np.maximum(np.asarray(x, dtype=float), 0.0)
        s2 = self.sigma ** 2
        # exp(-(x^2+nu^2)/2s^2) I0(x nu/s^2) == exp(-(x-nu)^2/2s^2) I0e(x nu/s^2)
        val = xa / s2 * np.exp(-((xa - self.nu) ** 2) / (2 * s2)) * bessel_i0e(xa * self.nu / s2)
        val = np.where(np.asarray(x) >= 0, val, 0.0)
        return _ret(x, val)

    def cdf(self, x):
        # P(X <= x) = sum_j Pois(j; nu^2/2s^2) * P(j + 1, x^2/2s^2)
        xa = np.maximum(np.asarray(x, dtype=float), 0.0)
        lam = 0.5 * (self.nu / self.sigma) ** 2
        width = 10.0 * math.sqrt(lam) + 40.0
        j = np.arange(max(0, int(lam - width)), int(lam + width) + 1, dtype=float)
        logw = j * math.log(lam) - lam - special.gammaln(j + 1) if lam > 0 else np.where(j == 0, 0.0, -np.inf)
        w = np.exp(logw)
        y = 0.5 * (xa / self.sigma) ** 2
        val = special.gammainc(j + 1.0, y[..., None]) @ w
        return _ret(x, np.clip(val, 0.0, 1.0))

    def ppf(self, p):
        hi = self.nu + 50.0 * self.sigma

        def one(q):
            if q <= 0:
                return 0.0
            if q >= 1:
                return math.inf
            return optimize.brentq(lambda v: self.cdf(v) - q, 0.0, hi, xtol=1e-13, rtol=1e-14)

        return _ret(p, np.vectorize(one, otypes=[float])(np.asarray(p, dtype=float)))

    def mean(self):
        g, _ = _rice_shape(self.nu / self.sigma)
        return self.sigma * g

    def variance(self):
        m = self.mean()
        return 2.0 * self.sigma ** 2 + self.nu ** 2 - m * m

    def params(self):
        return {"nu": self.nu, "sigma": self.sigma}

    def scaled(self, k):
        _check_scale(k)
        return Rician(self.nu * k, self.sigma * k)

    def _draw(self, rng, n):
        z = rng.standard_normal((2, n))
        return np.hypot(self.nu + self.sigma * z[0], self.sigma * z[1])


@dataclass(frozen=True)
class Lattice(Distribution):
    """Finite discrete distribution on ``values`` with weights ``probs``."""

    values: tuple
    probs: tuple
    family: Family = field(default=Family.LATTICE, init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise InvalidParameterError("values and probs must be equal-length 1-D sequences")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("probs must be non-negative and sum to 1")
        object.__setattr__(self, "values", tuple(float(a) for a in v))
        object.__setattr__(self, "probs", tuple(float(a) for a in p))

    @property
    def support(self):
        return (min(self.values), max(self.values))

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        v = np.asarray(self.values)
        p = np.asarray(self.probs)
        return _ret(x, (xa[..., None] >= v).astype(float) @ p)

    def cdf_integral(self, x):
        xa = np.asarray(x, dtype=float)
        v = np.asarray(self.values)
        return _ret(x, np.maximum(xa[..., None] - v, 0.0) @ np.asarray(self.probs))

    def ppf(self, p):
        order = np.argsort(self.values)
        v = np.asarray(self.values)[order]
        cum = np.cumsum(np.asarray(self.probs)[order])
        idx = np.searchsorted(cum, np.asarray(p, dtype=float) - 1e-15)
        return _ret(p, v[np.minimum(idx, v.size - 1)])

    def mass_interval(self, eps=1e-10):
        return self.support

    def mean(self):
        return float(np.dot(self.values, self.probs))

    def variance(self):
        m = self.mean()
        return float(np.dot((np.asarray(self.values) - m) ** 2, self.probs))

    def params(self):
        return {"n_atoms": len(self.values)}

    def scaled(self, k):
        _check_scale(k)
        return Lattice(tuple(v * k for v in self.values), self.probs)

    def _draw(self, rng, n):
        return rng.choice(np.asarray(self.values), size=n, p=np.asarray(self.probs))


def new_gaussian(mu, sigma2):
    return Gaussian(float(mu), float(sigma2))


def new_uniform(c, d):
    return Uniform(float(c), float(d))


def new_exponential(mean):
    return Exponential(float(mean))


def new_truncated_gaussian(mu, sigma2):
    return TruncatedGaussian(float(mu), float(sigma2))


def new_rician(nu, sigma):
    return Rician(float(nu), float(sigma))


def sample(dist, stream, size=None):
    return dist.sample(stream, size)


# ratio variance / mean^2 of a Rician at kappa = 0 (Rayleigh)
RAYLEIGH_CV2 = 4.0 / math.pi - 1.0
_KAPPA_MAX = 1e3
_ALPHA_MIN, _ALPHA_MAX = -1e7, 25.0


def _rice_cv2(kappa):
    g, m2 = _rice_shape(kappa)
    return m2 / (g * g) - 1.0


def _trunc_cv2(alpha):
    lam, omega = _truncated_shape(alpha)
    psi = lam - alpha
    return omega / (psi * psi)


def match_moments(family, target_mean, target_variance):
    """Build a distribution of ``family`` with the given mean and variance.

    The exponential family has a single parameter; only the mean is matched
    and a ``MomentMismatchWarning`` is emitted when the variance differs.
    Raises ``NoSolutionError`` when the pair is outside the family's
    attainable range.
    """
    fam = Family.parse(family)
    m, v = float(target_mean), float(target_variance)
    if not (m > 0 and v > 0 and math.isfinite(m) and math.isfinite(v)):
        raise InvalidParameterError("target mean and variance must be positive and finite")
    r = v / (m * m)

    if fam is Family.UNIFORM:
        half = math.sqrt(3.0 * v)
        if m - half < 0:
            raise NoSolutionError(
                f"uniform needs mean >= sqrt(3 * variance) = {half:.6g} for non-negative support"
            )
        dist = Uniform(m - half, m + half)
    elif fam is Family.EXPONENTIAL:
        dist = Exponential(m)
        if abs(v - m * m) > 1e-9 * v:
            warnings.warn(
                f"exponential has one degree of freedom: variance {m * m:.6g} "
                f"does not match requested {v:.6g}",
                MomentMismatchWarning,
                stacklevel=2,
            )
        return dist
    elif fam is Family.RICIAN:
        lo_r = _rice_cv2(_KAPPA_MAX)
        if not (lo_r <= r <= RAYLEIGH_CV2 * (1 + 1e-12)):
            raise NoSolutionError(
                f"rician needs variance/mean^2 in [{lo_r:.3g}, {RAYLEIGH_CV2:.6g}], got {r:.6g}"
            )
        if r >= _rice_cv2(0.0):
            kappa = 0.0
        else:
            kappa = optimize.brentq(lambda k: _rice_cv2(k) - r, 0.0, _KAPPA_MAX,
                                    xtol=1e-15, rtol=1e-15, maxiter=200)
        g, _ = _rice_shape(kappa)
        sigma = m / g
        dist = Rician(kappa * sigma, sigma)
    elif fam is Family.TRUNCATED_GAUSSIAN:
        lo_r, hi_r = _trunc_cv2(_ALPHA_MIN), _trunc_cv2(_ALPHA_MAX)
        if not (lo_r < r < hi_r):
            raise NoSolutionError(
                f"positive-support gaussian needs variance/mean^2 in ({lo_r:.3g}, {hi_r:.6g}), got {r:.6g}"
            )
        alpha = optimize.brentq(lambda a: _trunc_cv2(a) - r, _ALPHA_MIN, _ALPHA_MAX,
                                xtol=1e-15, rtol=1e-15, maxiter=200)
        lam, _ = _truncated_shape(alpha)
        sigma = m / (lam - alpha)
        dist = TruncatedGaussian(-alpha * sigma, sigma * sigma)
    else:
        raise InvalidParameterError(f"moment matching not supported for {fam.value}")

    if abs(dist.mean() - m) > 1e-9 * m or abs(dist.variance() - v) > 1e-9 * v:
        raise NoSolutionError(
            f"{fam.value} moment match did not converge: got mean {dist.mean():.12g}, "
            f"variance {dist.variance():.12g}"
        )
    return dist
