"""Analytic loss distributions exposed through their cdf and quantile sides.

Nothing here needs a density: every functional is built from cdf, quantile,
closed-form tail integrals or quadrature of those.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from utils.errors import DomainError, MomentError, ParameterError, ParseError, check_probability
from utils.quadrature import FINITE_TOL, TAIL_TOL, integrate, integrate_log_tail, integrate_to_infinity
from utils.rng import open_uniforms, stream

BISECTION_TOL = 1e-12


class ModelKind(Enum):
    LOMAX = "lomax"
    EXPONENTIAL = "exp"
    UNIFORM = "uniform"
    NORMAL = "normal"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class MomentClass:
    finite_upper_first: bool
    finite_upper_second: bool
    finite_lower_first: bool
    finite_lower_second: bool

    def __post_init__(self):
        if self.finite_upper_second and not self.finite_upper_first:
            raise ValueError("finite upper second moment implies a finite upper first moment")
        if self.finite_lower_second and not self.finite_lower_first:
            raise ValueError("finite lower second moment implies a finite lower first moment")


FULL_MOMENTS = MomentClass(True, True, True, True)


def _as_output(values):
    if np.ndim(values) == 0:
        return float(values)
    return values


class QuantileModel(ABC):
    """A loss distribution F seen through F(x) and F^{-1}(u)."""

    kind: ModelKind

    @abstractmethod
    def _cdf(self, x):
        ...

    @abstractmethod
    def support(self):
        ...

    @abstractmethod
    def moment_class(self):
        ...

    @abstractmethod
    def spec_string(self):
        ...

    def cdf(self, x):
        if np.ndim(x) == 0:
            return self._cdf(float(x))
        x = np.asarray(x, dtype=float)
        return np.fromiter(map(self._cdf, x.ravel()), dtype=float, count=x.size).reshape(x.shape)

    def quantile(self, u):
        """Generalized inverse inf{x : F(x) >= u} for u in (0,1)."""
        arr = np.asarray(u, dtype=float)
        if not np.all((arr > 0.0) & (arr < 1.0)):
            raise DomainError(f"quantile level must lie in (0,1), got {u}")
        return _as_output(self._quantile(arr))

    def _quantile(self, u):
        return np.vectorize(self._bisect_quantile, otypes=[float])(u)

    def _bisect_quantile(self, u):
        lo, hi = self.support()
        lo = -1.0 if not math.isfinite(lo) else lo
        hi = 1.0 if not math.isfinite(hi) else hi
        while self._cdf(lo) >= u:
            lo -= 2.0 * max(1.0, abs(lo))
        while self._cdf(hi) < u:
            hi += 2.0 * max(1.0, abs(hi))
        while hi - lo > BISECTION_TOL * max(1.0, abs(hi)):
            mid = 0.5 * (lo + hi)
            if self._cdf(mid) >= u:
                hi = mid
            else:
                lo = mid
        return hi

    def tail_quantile(self, q):
        """F^{-1}(1 - q), accurate for small q."""
        return _as_output(self._quantile(1.0 - np.asarray(q, dtype=float)))

    def breakpoints(self):
        return tuple(x for x in self.support() if math.isfinite(x))

    def is_continuous_at(self, x):
        return True

    def integrated_upper_quantile(self, p):
        """Integral of F^{-1}(u) over (p, 1)."""
        p = check_probability(p)
        if not self.moment_class().finite_upper_first:
            raise MomentError(f"{self.spec_string()} has no finite upper first moment")
        return self._upper_integral(p)

    def _upper_integral(self, p):
        return integrate_log_tail(self.tail_quantile, 1.0 - p)

    def integrated_lower_quantile(self, p):
        """Integral of F^{-1}(u) over (0, p)."""
        p = check_probability(p)
        if not self.moment_class().finite_lower_first:
            raise MomentError(f"{self.spec_string()} has no finite lower first moment")
        return self._lower_integral(p)

    def _lower_integral(self, p):
        return integrate_log_tail(lambda q: float(self._quantile(q)), p)

    def mean(self):
        mc = self.moment_class()
        if not (mc.finite_upper_first and mc.finite_lower_first):
            raise MomentError(f"{self.spec_string()} has no finite mean")
        return self._mean()

    def _mean(self):
        return self._lower_integral(0.5) + self._upper_integral(0.5)

    def _sf(self, x):
        return 1.0 - self._cdf(x)

    def cdf_deviation_integral(self, a, b, level):
        """Oriented integral of level - F(x) from a to b."""
        return integrate(lambda x: level - self._cdf(x), a, b, points=self.breakpoints())

    def quantile_gap_integral(self, x, p):
        """Oriented integral of p - F(t) for t from x to F^{-1}(p).

        Computed on the quantile side as the integral of F^{-1}(v) - x over v
        between F(x) and p, in tail coordinates q = 1 - v = exp(-s). A heavy
        tail then spans a short smooth s-range instead of x up to 1e20.
        """
        x = float(x)
        xp = float(self.quantile(p))
        if x == xp:
            return 0.0

        head = 0.0
        low, _ = self.support()
        if math.isfinite(low) and x < low:
            # F = 0 on [x, low)
            head = p * (low - x)
            x = low

        q0 = self._sf(x)
        if not 0.0 < q0 <= 1.0 or (q0 == 1.0 and not math.isfinite(low)):
            return head + self.cdf_deviation_integral(x, xp, p)

        def integrand(s):
            q = math.exp(-s)
            return (float(self.tail_quantile(q)) - x) * q

        q1 = 1.0 - p
        scale = abs(xp - x) * abs(q0 - q1)
        tol = FINITE_TOL * max(1.0, scale)
        return head + integrate(integrand, -math.log(q0), -math.log1p(-p), tol)

    def upper_partial_moments(self, p, tol=TAIL_TOL):
        """(E[(X - x_p)_+], E[(X - x_p)_+^2]) with x_p = F^{-1}(p)."""
        p = check_probability(p)
        if not self.moment_class().finite_upper_second:
            raise MomentError(f"{self.spec_string()} has no finite upper second moment")
        xp = float(self.quantile(p))
        return tuple(
            integrate_log_tail(lambda q, k=k: (float(self.tail_quantile(q)) - xp) ** k, 1.0 - p, tol)
            for k in (1, 2)
        )

    def expected_excess(self, y):
        """E[(X - y)_+] as the integral of the survival function over [y, inf)."""
        if not self.moment_class().finite_upper_first:
            raise MomentError(f"{self.spec_string()} has no finite upper first moment")
        return self._expected_excess(float(y))

    def _expected_excess(self, y):
        return integrate_to_infinity(lambda x: 1.0 - self._cdf(x), y, points=self.breakpoints())

    def sample(self, seed, n):
        """n inverse-transform draws from the stream keyed by seed."""
        if n < 1:
            raise DomainError(f"sample size must be >= 1, got {n}")
        return self.sample_from(stream(seed), n)

    def sample_from(self, rng, n):
        return np.asarray(self._quantile(open_uniforms(rng, n)), dtype=float)

    def __str__(self):
        return self.spec_string()


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ParameterError(f"{name} must be > 0, got {value}")
    return value


@dataclass(frozen=True)
class Lomax(QuantileModel):
    """Lomax(alpha, lambda): F(x) = 1 - (1 + x/lambda)^(-alpha) on x >= 0."""

    alpha: float
    scale: float = 1.0
    kind = ModelKind.LOMAX

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "scale", _positive("lambda", self.scale))

    def spec_string(self):
        return f"lomax:{self.alpha:g},{self.scale:g}"

    def support(self):
        return 0.0, math.inf

    def moment_class(self):
        return MomentClass(
            finite_upper_first=self.alpha > 1.0,
            finite_upper_second=self.alpha > 2.0,
            finite_lower_first=True,
            finite_lower_second=True,
        )

    def _cdf(self, x):
        if x <= 0.0:
            return 0.0
        return -math.expm1(-self.alpha * math.log1p(x / self.scale))

    def _sf(self, x):
        if x <= 0.0:
            return 1.0
        return math.exp(-self.alpha * math.log1p(x / self.scale))

    def _quantile(self, u):
        return self.scale * np.expm1(-np.log1p(-u) / self.alpha)

    def tail_quantile(self, q):
        return _as_output(self.scale * np.expm1(-np.log(q) / self.alpha))

    def _upper_integral(self, p):
        a = self.alpha
        return self.scale * (a / (a - 1.0) * (1.0 - p) ** (1.0 - 1.0 / a) - (1.0 - p))

    def _lower_integral(self, p):
        a = self.alpha
        if a == 1.0:
            return self.scale * (-math.log1p(-p) - p)
        return self.scale * (a / (a - 1.0) * (1.0 - (1.0 - p) ** (1.0 - 1.0 / a)) - p)

    def _mean(self):
        return self.scale / (self.alpha - 1.0)

    def _expected_excess(self, y):
        if y <= 0.0:
            return self._mean() - y
        return self.scale / (self.alpha - 1.0) * (1.0 + y / self.scale) ** (1.0 - self.alpha)

    def upper_partial_moments(self, p, tol=TAIL_TOL):
        # the excess over x_p is Lomax(alpha, lambda + x_p)
        p = check_probability(p)
        a = self.alpha
        if not a > 2.0:
            raise MomentError(f"{self.spec_string()} has no finite upper second moment")
        q = 1.0 - p
        shifted = self.scale * q ** (-1.0 / a)
        return q * shifted / (a - 1.0), q * 2.0 * shifted * shifted / ((a - 1.0) * (a - 2.0))


@dataclass(frozen=True)
class Exponential(QuantileModel):
    rate: float
    kind = ModelKind.EXPONENTIAL

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    def spec_string(self):
        return f"exp:{self.rate:g}"

    def support(self):
        return 0.0, math.inf

    def moment_class(self):
        return FULL_MOMENTS

    def _cdf(self, x):
        if x <= 0.0:
            return 0.0
        return -math.expm1(-self.rate * x)

    def _sf(self, x):
        if x <= 0.0:
            return 1.0
        return math.exp(-self.rate * x)

    def _quantile(self, u):
        return -np.log1p(-u) / self.rate

    def tail_quantile(self, q):
        return _as_output(-np.log(q) / self.rate)

    def _upper_integral(self, p):
        return (1.0 - p) * (1.0 - math.log1p(-p)) / self.rate

    def _lower_integral(self, p):
        return (p + (1.0 - p) * math.log1p(-p)) / self.rate

    def _mean(self):
        return 1.0 / self.rate

    def _expected_excess(self, y):
        if y <= 0.0:
            return self._mean() - y
        return math.exp(-self.rate * y) / self.rate

    def upper_partial_moments(self, p, tol=TAIL_TOL):
        q = 1.0 - check_probability(p)
        return q / self.rate, 2.0 * q / (self.rate * self.rate)


@dataclass(frozen=True)
class Uniform(QuantileModel):
    low: float
    high: float
    kind = ModelKind.UNIFORM

    def __post_init__(self):
        low, high = float(self.low), float(self.high)
        if not (math.isfinite(low) and math.isfinite(high)):
            raise ParameterError(f"uniform bounds must be finite, got ({low}, {high})")
        if not low < high:
            raise ParameterError(f"uniform requires a < b, got ({low}, {high})")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def spec_string(self):
        return f"uniform:{self.low:g},{self.high:g}"

    def support(self):
        return self.low, self.high

    def moment_class(self):
        return FULL_MOMENTS

    def _cdf(self, x):
        if x <= self.low:
            return 0.0
        if x >= self.high:
            return 1.0
        return (x - self.low) / (self.high - self.low)

    def _quantile(self, u):
        return self.low + (self.high - self.low) * u

    def tail_quantile(self, q):
        return _as_output(self.high - (self.high - self.low) * np.asarray(q, dtype=float))

    def _upper_integral(self, p):
        return self.low * (1.0 - p) + (self.high - self.low) * (1.0 - p * p) / 2.0

    def _lower_integral(self, p):
        return self.low * p + (self.high - self.low) * p * p / 2.0

    def _mean(self):
        return 0.5 * (self.low + self.high)

    def _expected_excess(self, y):
        if y <= self.low:
            return self._mean() - y
        if y >= self.high:
            return 0.0
        return (self.high - y) ** 2 / (2.0 * (self.high - self.low))

    def upper_partial_moments(self, p, tol=TAIL_TOL):
        q = 1.0 - check_probability(p)
        width = (self.high - self.low) * q
        return q * width / 2.0, q * width * width / 3.0


@dataclass(frozen=True)
class Normal(QuantileModel):
    """Normal(mu, sigma); tail integrals go through quadrature, not a closed form."""

    mu: float
    sigma: float
    kind = ModelKind.NORMAL

    def __post_init__(self):
        mu = float(self.mu)
        if not math.isfinite(mu):
            raise ParameterError(f"mu must be finite, got {mu}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def spec_string(self):
        return f"normal:{self.mu:g},{self.sigma:g}"

    def support(self):
        return -math.inf, math.inf

    def moment_class(self):
        return FULL_MOMENTS

    def _cdf(self, x):
        return float(ndtr((x - self.mu) / self.sigma))

    def _sf(self, x):
        return float(ndtr((self.mu - x) / self.sigma))

    def _quantile(self, u):
        return self.mu + self.sigma * ndtri(u)

    def tail_quantile(self, q):
        return _as_output(self.mu - self.sigma * ndtri(q))

    def _mean(self):
        return self.mu

    def _expected_excess(self, y):
        return integrate_to_infinity(
            lambda x: float(ndtr((self.mu - x) / self.sigma)), y, width=self.sigma
        )


_FAMILIES = {
    "lomax": (Lomax, ("alpha", "lambda")),
    "exp": (Exponential, ("rate",)),
    "uniform": (Uniform, ("a", "b")),
    "normal": (Normal, ("mu", "sigma")),
}


def parse_dist_spec(text):
    """Build a model from "name:p1,p2,..." (e.g. "lomax:10,1", "exp:2")."""
    name, sep, rest = str(text).strip().partition(":")
    name = name.strip().lower()
    if name not in _FAMILIES:
        raise ParseError(f"unknown distribution {name!r} in {text!r}; expected one of {sorted(_FAMILIES)}")
    if not sep:
        raise ParseError(f"missing ':' and parameters in distribution spec {text!r}")

    family, names = _FAMILIES[name]
    tokens = [t.strip() for t in rest.split(",")] if rest.strip() else []
    if len(tokens) != len(names):
        raise ParameterError(
            f"{name} takes {len(names)} parameter(s) ({', '.join(names)}), got {len(tokens)} in {text!r}"
        )

    values = []
    for position, (token, pname) in enumerate(zip(tokens, names), start=1):
        try:
            value = float(token)
        except ValueError:
            raise ParameterError(f"parameter {position} ({pname}) of {name}: {token!r} is not a number")
        if not math.isfinite(value):
            raise ParameterError(f"parameter {position} ({pname}) of {name} must be finite, got {token!r}")
        values.append(value)

    try:
        return family(*values)
    except ParameterError as exc:
        raise ParameterError(f"{text!r}: {exc}") from None
