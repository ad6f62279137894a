"""Value laws, price-to-beat laws and order-statistic moments.

All distributions are frozen dataclasses.  Sampling takes an explicit
``numpy.random.Generator``; use :func:`rng_stream` to obtain one keyed by
``(seed, stream_id)`` so that parallel blocks stay reproducible.

Unbounded families (exponential, lognormal) are supported even though the
equilibrium theory assumes compact supports.  Wherever a finite upper end is
needed (quadrature, bid caps) they are truncated at the ``1 - 1e-12``
quantile; see :data:`TAIL_MASS`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, NumericalError

TAIL_MASS = 1e-12
QUAD_EPSREL = 1e-9
QUAD_EPSABS = 1e-14


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent generator for block ``stream_id`` of a seeded run."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def quad(func, lo, hi, points=None, what="integral"):
    """``scipy.integrate.quad`` at the package tolerances.

    Raises NumericalError instead of returning a silently inaccurate value.
    """
    if hi <= lo:
        return 0.0
    if points is not None:
        points = sorted(p for p in set(points) if lo < p < hi) or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, abserr, info, *msg = integrate.quad(
            func, lo, hi, points=points, epsabs=QUAD_EPSABS,
            epsrel=QUAD_EPSREL, limit=400, full_output=1)
    if not math.isfinite(val):
        raise NumericalError(f"{what}: non-finite quadrature result on [{lo}, {hi}]")
    tol = max(1e3 * QUAD_EPSREL * abs(val), 1e-11)
    if msg and abserr > tol:
        raise NumericalError(
            f"{what}: quadrature did not converge on [{lo}, {hi}] "
            f"(value={val!r}, abserr={abserr:.3g}): {msg[0]}")
    return float(val)


@dataclass(frozen=True)
class ValueDistribution:
    """Base class; subclasses define the family-specific closed forms."""

    family: ClassVar[str] = ""
    continuous: ClassVar[bool] = True

    # -- support ---------------------------------------------------------
    @property
    def lower(self) -> float:
        raise NotImplementedError

    @property
    def upper(self) -> float:
        """Upper end of the support (may be ``inf``)."""
        raise NotImplementedError

    def upper_truncated(self) -> float:
        """Finite upper end used by quadrature and bid caps."""
        if math.isfinite(self.upper):
            return self.upper
        return float(self.ppf(1.0 - TAIL_MASS))

    # -- law -------------------------------------------------------------
    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def ppf(self, q):
        raise NotImplementedError

    def prob_below(self, x):
        """P(X < x); differs from the cdf only for atoms."""
        return self.cdf(x)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be >= 0")
        return self.ppf(rng.random(count))

    def mean(self) -> float:
        raise NotImplementedError

    def partial_expectation(self, x: float) -> float:
        """E[X 1{X < x}]."""
        lo = self.lower
        hi = min(x, self.upper_truncated())
        return quad(lambda t: t * self.pdf(t), lo, hi, what="partial expectation")

    # -- max of k draws --------------------------------------------------
    def max_cdf(self, k: int, y):
        return self.cdf(y) ** k

    def max_partial_expectation(self, k: int, y: float) -> float:
        """E[Y 1{Y < y}] for Y the maximum of ``k`` i.i.d. draws."""
        if k == 1:
            return self.partial_expectation(y)
        lo = self.lower
        hi = min(y, self.upper_truncated())
        return quad(lambda t: t * k * self.cdf(t) ** (k - 1) * self.pdf(t),
                    lo, hi, what="max partial expectation")

    def expected_max(self, k: int) -> float:
        """Closed form when the family has one, quadrature otherwise."""
        return expected_max_quadrature(self, k)

    # -- records ---------------------------------------------------------
    def params(self) -> dict:
        return {}

    def to_record(self) -> dict:
        return {"family": self.family, **self.params()}

    def describe(self) -> str:
        return ";".join(f"{k}={v:g}" for k, v in self.params().items())


@dataclass(frozen=True)
class Uniform(ValueDistribution):
    lo: float = 0.0
    hi: float = 1.0
    family: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ConfigError(f"uniform needs lo < hi, got lo={self.lo}, hi={self.hi}", key="hi")

    @property
    def lower(self):
        return float(self.lo)

    @property
    def upper(self):
        return float(self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / self.width, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / self.width, 0.0)

    def ppf(self, q):
        return self.lo + self.width * np.asarray(q, dtype=float)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def partial_expectation(self, x):
        s = min(max(x, self.lo), self.hi)
        return (s * s - self.lo * self.lo) / (2.0 * self.width)

    def max_partial_expectation(self, k, y):
        s = min(max(y, self.lo), self.hi) - self.lo
        w = self.width
        return (k / (k + 1.0) * s ** (k + 1) + self.lo * s ** k) / w ** k

    def expected_max(self, k):
        _check_k(k)
        return self.lo + self.width * k / (k + 1.0)

    def params(self):
        return {"lo": float(self.lo), "hi": float(self.hi)}


@dataclass(frozen=True)
class Power(ValueDistribution):
    """F(v) = v**a on [0, 1]."""

    a: float = 1.0
    family: ClassVar[str] = "power"

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ConfigError(f"power needs a > 0, got a={self.a}", key="a")

    @property
    def lower(self):
        return 0.0

    @property
    def upper(self):
        return 1.0

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0) ** self.a

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x <= 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.a * np.where(inside, x, 1.0) ** (self.a - 1.0)
        return np.where(inside, d, 0.0)

    def ppf(self, q):
        return np.asarray(q, dtype=float) ** (1.0 / self.a)

    def mean(self):
        return self.a / (self.a + 1.0)

    def partial_expectation(self, x):
        return self.max_partial_expectation(1, x)

    def max_partial_expectation(self, k, y):
        ak = self.a * k
        s = min(max(y, 0.0), 1.0)
        return ak / (ak + 1.0) * s ** (ak + 1.0)

    def expected_max(self, k):
        _check_k(k)
        return self.a * k / (self.a * k + 1.0)

    def params(self):
        return {"a": float(self.a)}


@dataclass(frozen=True)
class Exponential(ValueDistribution):
    rate: float = 1.0
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ConfigError(f"exponential needs rate > 0, got rate={self.rate}", key="rate")

    @property
    def lower(self):
        return 0.0

    @property
    def upper(self):
        return math.inf

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-self.rate * x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def ppf(self, q):
        return -np.log1p(-np.asarray(q, dtype=float)) / self.rate

    def sample(self, rng, count):
        if count < 0:
            raise ValueError("count must be >= 0")
        return rng.exponential(1.0 / self.rate, count)

    def mean(self):
        return 1.0 / self.rate

    def partial_expectation(self, x):
        if x <= 0:
            return 0.0
        lx = self.rate * x
        # 1 - e^{-lx}(1 + lx), written to keep precision for small lx
        return (-math.expm1(-lx) - lx * math.exp(-lx)) / self.rate

    def expected_max(self, k):
        # harmonic number H_k / rate (Renyi representation)
        _check_k(k)
        return math.fsum(1.0 / j for j in range(1, k + 1)) / self.rate

    def params(self):
        return {"rate": float(self.rate)}


@dataclass(frozen=True)
class LogNormal(ValueDistribution):
    mu: float = 0.0
    sigma: float = 1.0
    family: ClassVar[str] = "lognormal"

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ConfigError(f"lognormal needs finite mu, got {self.mu}", key="mu")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"lognormal needs sigma > 0, got sigma={self.sigma}", key="sigma")

    @property
    def lower(self):
        return 0.0

    @property
    def upper(self):
        return math.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - self.mu) / self.sigma
        return special.ndtr(z)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        pos = x > 0
        safe = np.where(pos, x, 1.0)
        z = (np.log(safe) - self.mu) / self.sigma
        return np.where(pos, np.exp(-0.5 * z * z) / (safe * self.sigma * math.sqrt(2 * math.pi)), 0.0)

    def ppf(self, q):
        return np.exp(self.mu + self.sigma * special.ndtri(np.asarray(q, dtype=float)))

    def sample(self, rng, count):
        if count < 0:
            raise ValueError("count must be >= 0")
        return rng.lognormal(self.mu, self.sigma, count)

    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma ** 2)

    def partial_expectation(self, x):
        if x <= 0:
            return 0.0
        z = (math.log(x) - self.mu - self.sigma ** 2) / self.sigma
        return self.mean() * float(special.ndtr(z))

    def max_partial_expectation(self, k, y):
        if k == 1:
            return self.partial_expectation(y)
        if y <= 0:
            return 0.0
        # integrate on the standard-normal scale: no truncation of the body
        zy = (math.log(y) - self.mu) / self.sigma
        zlo = min(-40.0, zy)
        return quad(lambda z: math.exp(self.mu + self.sigma * z) * k
                    * special.ndtr(z) ** (k - 1) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi),
                    zlo, min(zy, 40.0), what="lognormal max partial expectation")

    def expected_max(self, k):
        _check_k(k)
        if k == 1:
            return self.mean()
        if k == 2:
            return 2.0 * self.mean() * float(special.ndtr(self.sigma / math.sqrt(2.0)))
        return self.max_partial_expectation(k, math.inf)

    def params(self):
        return {"mu": float(self.mu), "sigma": float(self.sigma)}


@dataclass(frozen=True)
class PointMass(ValueDistribution):
    """Degenerate law at ``value``; used for fixed-CTR and no-competition cases."""

    value: float = 0.0
    family: ClassVar[str] = "point"
    continuous: ClassVar[bool] = False

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ConfigError(f"point needs a finite value >= 0, got {self.value}", key="value")

    @property
    def lower(self):
        return float(self.value)

    @property
    def upper(self):
        return float(self.value)

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def prob_below(self, x):
        return np.where(np.asarray(x, dtype=float) > self.value, 1.0, 0.0)

    def pdf(self, x):
        raise NumericalError("point mass has no density")

    def ppf(self, q):
        return np.full(np.shape(q), float(self.value))

    def mean(self):
        return float(self.value)

    def partial_expectation(self, x):
        return float(self.value) if self.value < x else 0.0

    def max_partial_expectation(self, k, y):
        return self.partial_expectation(y)

    def expected_max(self, k):
        _check_k(k)
        return float(self.value)

    def params(self):
        return {"value": float(self.value)}


FAMILIES = {cls.family: cls for cls in (Uniform, Power, Exponential, LogNormal, PointMass)}


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k}")


def expected_max(dist: ValueDistribution, k: int) -> float:
    """E[max of k i.i.d. draws from ``dist``]."""
    _check_k(k)
    return dist.expected_max(int(k))


def expected_max_quadrature(dist: ValueDistribution, k: int) -> float:
    """Quadrature of ``x k F^(k-1) f`` over the (truncated) support.

    Independent of the closed forms; used as their oracle and as fallback.
    """
    _check_k(k)
    if not dist.continuous:
        return dist.mean()
    lo, hi = dist.lower, dist.upper_truncated()
    # split at the median of the max, where most of the mass sits
    mid = float(dist.ppf(0.5 ** (1.0 / k)))
    return quad(lambda x: x * k * float(dist.cdf(x)) ** (k - 1) * float(dist.pdf(x)),
                lo, hi, points=[mid], what=f"E[max of {k}] for {dist.family}")


def second_order_stat(dist: ValueDistribution, n: int) -> float:
    """Expected second-highest of ``n`` draws: n E Y(n-1) - (n-1) E Y(n)."""
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    return n * expected_max(dist, n - 1) - (n - 1) * expected_max(dist, n)


# -- price to beat -----------------------------------------------------------

@dataclass(frozen=True)
class DerivedPriceToBeat:
    """Highest of ``opponents`` bids, each ``slope * v + intercept`` with v ~ value_dist.

    With zero opponents the price to beat is identically zero.
    """

    value_dist: ValueDistribution
    opponents: int
    slope: float = 1.0
    intercept: float = 0.0
    continuous: ClassVar[bool] = True

    def __post_init__(self):
        if int(self.opponents) != self.opponents or self.opponents < 0:
            raise ConfigError("opponents must be an integer >= 0", key="opponents")
        if self.slope < 0:
            raise ConfigError("opponent slope must be >= 0", key="slope")
        if self.intercept + self.slope * self.value_dist.lower < 0:
            raise ConfigError("opponent bids must be >= 0 on the value support", key="intercept")

    @property
    def _atomic(self):
        return self.opponents == 0 or self.slope == 0

    @property
    def _atom(self):
        return 0.0 if self.opponents == 0 else float(self.intercept)

    @property
    def lower(self):
        if self._atomic:
            return self._atom
        return self.intercept + self.slope * self.value_dist.lower

    def upper_truncated(self):
        if self._atomic:
            return self._atom
        return self.intercept + self.slope * self.value_dist.upper_truncated()

    def _to_value(self, x):
        return (np.asarray(x, dtype=float) - self.intercept) / self.slope

    def prob_below(self, x):
        if self._atomic:
            return np.where(np.asarray(x, dtype=float) > self._atom, 1.0, 0.0)
        return self.value_dist.max_cdf(self.opponents, self._to_value(x))

    def cdf(self, x):
        if self._atomic:
            return np.where(np.asarray(x, dtype=float) >= self._atom, 1.0, 0.0)
        return self.prob_below(x)

    @property
    def has_density(self) -> bool:
        return not self._atomic

    def pdf(self, x):
        """Density of slope * max + intercept; only defined without atoms."""
        if self._atomic:
            raise ValueError("price to beat is a point mass; no density")
        y = self._to_value(x)
        k = self.opponents
        F = self.value_dist
        return k * F.cdf(y) ** (k - 1) * F.pdf(y) / self.slope

    def partial_expectation(self, x: float) -> float:
        """E[B 1{B < x}]."""
        if self._atomic:
            return self._atom if self._atom < x else 0.0
        y = float(self._to_value(x))
        k = self.opponents
        return (self.slope * self.value_dist.max_partial_expectation(k, y)
                + self.intercept * float(self.value_dist.max_cdf(k, y)))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.opponents == 0:
            return np.zeros(count)
        draws = self.value_dist.sample(rng, count * self.opponents).reshape(count, self.opponents)
        return self.slope * draws.max(axis=1) + self.intercept

    def mean(self):
        if self._atomic:
            return self._atom
        return self.slope * self.value_dist.expected_max(self.opponents) + self.intercept

    def to_record(self):
        return {"derived": {"value": self.value_dist.to_record(), "opponents": int(self.opponents),
                            "slope": float(self.slope), "intercept": float(self.intercept)}}
