"""Empirical cdf, quantile and exact integrated empirical quantiles.

The quantile index k = ceil(n*u) is taken on the decimal value of u (the
shortest repr of the float) with rational arithmetic, so levels such as
0.9 with n = 10 land on x_(9) and not on x_(10).
"""

import math
from fractions import Fraction

import numpy as np

from models.distributions import FULL_MOMENTS, ModelKind, QuantileModel
from utils.errors import DataError, DomainError, check_probability
from utils.metrics import stable_sum


def _decimal(u):
    return Fraction(repr(float(u)))


class EmpiricalDistribution(QuantileModel):
    """Sorted sample x_(1) <= ... <= x_(n) with step cdf F_n and quantile F_n^{-1}."""

    kind = ModelKind.EMPIRICAL

    def __init__(self, sorted_values):
        values = np.array(sorted_values, dtype=float)
        values.flags.writeable = False
        self.sorted_values = values
        self.n = len(values)

    def __repr__(self):
        return f"EmpiricalDistribution(n={self.n})"

    def spec_string(self):
        return f"empirical:n={self.n}"

    def support(self):
        return float(self.sorted_values[0]), float(self.sorted_values[-1])

    def moment_class(self):
        return FULL_MOMENTS

    def breakpoints(self):
        return tuple(np.unique(self.sorted_values).tolist())

    def is_continuous_at(self, x):
        # conservatively discontinuous at every sample point
        i = np.searchsorted(self.sorted_values, x, side="left")
        return not (i < self.n and self.sorted_values[i] == x)

    def _cdf(self, x):
        return int(np.searchsorted(self.sorted_values, x, side="right")) / self.n

    def cdf(self, x):
        counts = np.searchsorted(self.sorted_values, x, side="right")
        if np.ndim(x) == 0:
            return int(counts) / self.n
        return counts / self.n

    def index(self, u):
        """Smallest k with k >= n*u, computed exactly."""
        return max(1, math.ceil(_decimal(u) * self.n))

    def quantile(self, u):
        if np.ndim(u) == 0:
            u = check_probability(u, "u", closed_right=True)
            return float(self.sorted_values[self.index(u) - 1])
        arr = np.asarray(u, dtype=float)
        if not np.all((arr > 0.0) & (arr <= 1.0)):
            raise DomainError(f"quantile level must lie in (0,1], got {u}")
        return self._quantile(arr)

    def _quantile(self, u):
        idx = np.vectorize(self.index, otypes=[np.int64])(u)
        return self.sorted_values[idx - 1]

    def _upper_integral(self, p):
        k = self.index(p)
        weight = float(Fraction(k, self.n) - _decimal(p))
        tail = stable_sum(self.sorted_values[k:]) / self.n
        return float(self.sorted_values[k - 1]) * weight + tail

    def _lower_integral(self, p):
        k = self.index(p)
        weight = float(_decimal(p) - Fraction(k - 1, self.n))
        head = stable_sum(self.sorted_values[: k - 1]) / self.n
        return head + float(self.sorted_values[k - 1]) * weight

    def _mean(self):
        return stable_sum(self.sorted_values) / self.n

    def cdf_integral(self, a, b):
        """Oriented integral of F_n from a to b, as an exact finite sum."""
        if a > b:
            return -self.cdf_integral(b, a)
        overlap = np.clip(b - np.maximum(a, self.sorted_values), 0.0, None)
        return stable_sum(overlap) / self.n

    def cdf_deviation_integral(self, a, b, level):
        """Sum of (level - k/n) times step length over the steps of F_n in [a, b].

        A step where F_n equals level contributes exactly 0.
        """
        if a == b:
            return 0.0
        if a > b:
            return -self.cdf_deviation_integral(b, a, level)
        inside = self.sorted_values[(self.sorted_values > a) & (self.sorted_values < b)]
        edges = np.concatenate(([a], inside, [b]))
        counts = np.searchsorted(self.sorted_values, edges[:-1], side="right")
        return stable_sum((level - counts / self.n) * np.diff(edges))

    def quantile_gap_integral(self, x, p):
        return self.cdf_deviation_integral(float(x), self.quantile(p), p)

    def _expected_excess(self, y):
        return stable_sum(np.clip(self.sorted_values - y, 0.0, None)) / self.n

    def positive_parts(self, threshold, lower=False):
        """(X_i - threshold)_+, or (threshold - X_i)_+ when lower."""
        diff = threshold - self.sorted_values if lower else self.sorted_values - threshold
        return np.clip(diff, 0.0, None)


def build_empirical(sample):
    values = np.asarray(sample, dtype=float).ravel()
    if values.size == 0:
        raise DomainError("empirical distribution needs a nonempty sample")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise DataError(f"sample value at index {i} is not finite ({values[i]})")
    return EmpiricalDistribution(np.sort(values, kind="stable"))


def empirical_cdf(emp, x):
    return emp.cdf(x)


def empirical_quantile(emp, u):
    return emp.quantile(u)


def integrated_empirical_quantile(emp, p):
    """x_(k) (k/n - p) + (1/n) sum_{i>k} x_(i), with k = ceil(n p)."""
    return emp.integrated_upper_quantile(p)


def empirical_es(emp, p):
    p = check_probability(p)
    return emp.integrated_upper_quantile(p) / (1.0 - p)


def empirical_lower_integrated_quantile(emp, p):
    """(1/n) sum_{i<k} x_(i) + x_(k) (p - (k-1)/n), with k = ceil(n p)."""
    return emp.integrated_lower_quantile(p)
