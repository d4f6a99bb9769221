"""Asymptotic variance of the integrated empirical quantile.

sigma^2_{F,p} is the variance of Y_p = E[(X - x_p)_+] - (X - x_p)_+, i.e.
Var((X - x_p)_+). Two independent routes compute it for analytic models:

  - DOUBLE_INTEGRAL: the covariance-kernel form
        integral over [x_p, inf)^2 of F(min(x, y)) - F(x) F(y),
    integrated in x-space (no density) with scipy's dblquad;
  - TAIL_VARIANCE: E[(X - x_p)_+^2] - E[(X - x_p)_+]^2, each moment in
    closed form where the model has one, else by 1-D quadrature of the
    quantile over (p, 1).

The plug-in route replaces F by F_n in the tail-variance form.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate as scipy_integrate

from utils.errors import DomainError, MomentError, check_probability
from utils.metrics import stable_mean, stable_sum
from utils.quadrature import integrate_log_tail

DBLQUAD_TOL = 1e-11
MOMENT_TOL = 1e-12


class VarianceMethod(Enum):
    DOUBLE_INTEGRAL = "double_integral"
    TAIL_VARIANCE = "tail_variance"
    PLUG_IN = "plug_in"


@dataclass(frozen=True)
class VarianceReport:
    sigma2: float
    method: VarianceMethod
    p: float
    x_p: float
    tail: str = "upper"


def _require(model, upper=True):
    mc = model.moment_class()
    ok = mc.finite_upper_second if upper else mc.finite_lower_second
    if not ok:
        side = "upper" if upper else "lower"
        raise MomentError(f"{model} has no finite {side} second moment")


def sigma2_double_integral(F, p):
    p = check_probability(p)
    _require(F)
    xp = F.quantile(p)
    _, high = F.support()
    cdf = F.cdf

    if math.isfinite(high):
        # 2 * integral_{xp <= x <= y <= high} F(x) (1 - F(y))
        value, _ = scipy_integrate.dblquad(
            lambda y, x: 2.0 * cdf(x) * (1.0 - cdf(y)),
            xp, high,
            lambda x: x, lambda x: high,
            epsabs=DBLQUAD_TOL, epsrel=DBLQUAD_TOL,
        )
    else:
        # x = xp + s / (1 - s) maps [xp, inf) onto [0, 1)
        def mapped(t, s):
            if s >= 1.0 or t >= 1.0:
                return 0.0
            x = xp + s / (1.0 - s)
            y = xp + t / (1.0 - t)
            jacobian = 1.0 / ((1.0 - s) ** 2 * (1.0 - t) ** 2)
            return 2.0 * cdf(x) * (1.0 - cdf(y)) * jacobian

        value, _ = scipy_integrate.dblquad(
            mapped, 0.0, 1.0, lambda s: s, lambda s: 1.0,
            epsabs=DBLQUAD_TOL, epsrel=DBLQUAD_TOL,
        )

    return VarianceReport(max(value, 0.0), VarianceMethod.DOUBLE_INTEGRAL, p, xp)


def _variance_from_moments(m1, m2):
    return max(m2 - m1 * m1, 0.0)


def sigma2_tail_variance(F, p):
    p = check_probability(p)
    _require(F)
    xp = F.quantile(p)
    sigma2 = _variance_from_moments(*F.upper_partial_moments(p, MOMENT_TOL))
    return VarianceReport(sigma2, VarianceMethod.TAIL_VARIANCE, p, xp)


def sigma2_lower_tail(F, p):
    """Var((x_p - X)_+), the variance behind inference on integral_0^p F^{-1}."""
    p = check_probability(p)
    _require(F, upper=False)
    xp = F.quantile(p)

    def moment(k):
        return integrate_log_tail(lambda q: (xp - float(F.quantile(q))) ** k, p, MOMENT_TOL)

    sigma2 = _variance_from_moments(moment(1), moment(2))
    return VarianceReport(sigma2, VarianceMethod.TAIL_VARIANCE, p, xp, tail="lower")


def _sample_variance(values):
    values = np.asarray(values, dtype=float)
    mean = stable_mean(values)
    return stable_sum((values - mean) ** 2) / (len(values) - 1)


def _plugin(emp, p, lower):
    p = check_probability(p)
    if emp.n < 2:
        raise DomainError(f"plug-in variance needs n >= 2, got n={emp.n}")
    xp = emp.quantile(p)
    sigma2 = _sample_variance(emp.positive_parts(xp, lower=lower))
    return VarianceReport(sigma2, VarianceMethod.PLUG_IN, p, xp, tail="lower" if lower else "upper")


def sigma2_plugin(emp, p):
    """Sample variance (denominator n - 1) of (X_i - x̂_p)_+."""
    return _plugin(emp, p, lower=False)


def sigma2_lower_plugin(emp, p):
    return _plugin(emp, p, lower=True)
