"""CLT-based inference for integrated quantiles and the Monte Carlo harnesses that check it.

For an iid sample from F with a finite upper second moment,

    integral_p^1 F^{-1} - integral_p^1 F_n^{-1} = mean(Y_i) + Gamma_p(F, F_n),
    Y_i = E[(X - x_p)_+] - (X_i - x_p)_+,

and sqrt(n) Gamma_p(F, F_n) vanishes in probability, so the integrated
empirical quantile is asymptotically normal with variance Var((X - x_p)_+).
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from data.empirical import build_empirical, empirical_es
from functionals.gap import GapReport, gamma
from functionals.variance import (
    sigma2_lower_plugin,
    sigma2_lower_tail,
    sigma2_plugin,
    sigma2_tail_variance,
)
from models.distributions import ModelKind
from utils.errors import DomainError, MomentError, check_probability
from utils.metrics import calculate_coverage, median_abs, normal_critical_value, stable_mean
from utils.parallel import ordered_map
from utils.rng import stream

MIN_SAMPLE = 30
MIN_REPS = 100
SMALL_SAMPLE_WARNING = "small-sample: CLT approximation unreliable"
DEGENERATE_WARNING = "degenerate sample: zero estimated variance, zero-width interval"


@dataclass(frozen=True)
class InferenceResult:
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    level: float
    n: int
    warnings: tuple = ()
    # upper bound of the Gamma_p(F, F_n) remainder, on the estimate's scale
    remainder_bound: float | None = None

    @property
    def width(self):
        return self.ci_high - self.ci_low


@dataclass(frozen=True)
class ReplicationRow:
    rep: int
    estimate: float
    ci_low: float
    ci_high: float
    covered: bool


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    reps: int
    n: int
    p: float
    mean_width: float
    seed: int
    level: float = 0.95
    variance: str = "analytic"
    truth: float = float("nan")
    rows: tuple = ()


@dataclass(frozen=True)
class DecompositionTerms:
    """sqrt(n) (IQ - IQ_n), n^{-1/2} sum Y_i and sqrt(n) Gamma_p(F, F_n), each computed on its own."""

    lhs: float
    linear: float
    remainder: float

    @property
    def residual(self):
        return self.lhs - self.linear - self.remainder


def _as_empirical(sample):
    if getattr(sample, "kind", None) is ModelKind.EMPIRICAL:
        return sample
    return build_empirical(sample)


def _check_count(name, value, minimum):
    value = int(value)
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


def _check_n_list(n_list):
    values = [_check_count("sample size", n, 1) for n in n_list]
    if not values:
        raise DomainError("n list is empty")
    return values


def remainder_gamma(F, sample, p):
    """Gamma_p(F, F_n) with its sandwich bound 0 <= value <= (F^{-1}(p) - F_n^{-1}(p))(F_n(x_p) - F(x_p))."""
    return gamma(F, _as_empirical(sample), p)


def _interval(estimate, sigma2, n, scale, z_crit, level):
    warnings = []
    if n < MIN_SAMPLE:
        warnings.append(SMALL_SAMPLE_WARNING)
    if sigma2 == 0.0:
        warnings.append(DEGENERATE_WARNING)
    se = math.sqrt(sigma2 / n) / scale
    half = z_crit * se
    return InferenceResult(
        estimate=estimate,
        std_error=se,
        ci_low=estimate - half,
        ci_high=estimate + half,
        level=level,
        n=n,
        warnings=tuple(warnings),
    )


def es_confidence_interval(sample, p, level=0.95, variance_model=None):
    """ES_p estimate with a normal interval.

    variance_model=None uses the plug-in variance; passing F uses sigma^2_{F,p}
    and attaches the remainder bound for F.
    """
    emp = _as_empirical(sample)
    p = check_probability(p)
    z_crit = normal_critical_value(level)
    estimate = empirical_es(emp, p)

    if variance_model is None:
        sigma2 = sigma2_plugin(emp, p).sigma2 if emp.n >= 2 else 0.0
        return _interval(estimate, sigma2, emp.n, 1.0 - p, z_crit, float(level))

    sigma2 = sigma2_tail_variance(variance_model, p).sigma2
    result = _interval(estimate, sigma2, emp.n, 1.0 - p, z_crit, float(level))
    bound = remainder_gamma(variance_model, emp, p).upper_bound / (1.0 - p)
    return replace(result, remainder_bound=bound)


def lower_confidence_interval(sample, p, level=0.95, variance_model=None):
    """Interval for the lower-tail average (1/p) integral_0^p F^{-1}."""
    emp = _as_empirical(sample)
    p = check_probability(p)
    z_crit = normal_critical_value(level)
    estimate = emp.integrated_lower_quantile(p) / p

    if variance_model is None:
        sigma2 = sigma2_lower_plugin(emp, p).sigma2 if emp.n >= 2 else 0.0
    else:
        sigma2 = sigma2_lower_tail(variance_model, p).sigma2
    return _interval(estimate, sigma2, emp.n, p, z_crit, float(level))


def decomposition_terms(F, sample, p):
    emp = _as_empirical(sample)
    p = check_probability(p)
    root_n = math.sqrt(emp.n)
    xp = float(F.quantile(p))

    lhs = root_n * (F.integrated_upper_quantile(p) - emp.integrated_upper_quantile(p))
    y = F.expected_excess(xp) - emp.positive_parts(xp)
    linear = root_n * stable_mean(y)
    remainder = root_n * remainder_gamma(F, emp, p).value
    return DecompositionTerms(lhs, linear, remainder)


def _require_second_moment(model):
    if not model.moment_class().finite_upper_second:
        raise MomentError(f"{model} has no finite upper second moment; the CLT does not apply")


def mc_coverage_study(
    model,
    n,
    reps,
    p,
    level=0.95,
    seed=0,
    variance="analytic",
    threads=None,
    progress=False,
    keep_rows=False,
):
    """Share of replications whose ES interval covers the true ES_p.

    Replication r draws from stream(seed, n, r), so the report depends on
    seed alone and not on the thread count.
    """
    _require_second_moment(model)
    n = _check_count("sample size", n, 2)
    reps = _check_count("reps", reps, MIN_REPS)
    p = check_probability(p)
    z_crit = normal_critical_value(level)
    if variance not in ("analytic", "plugin"):
        raise DomainError(f"variance must be 'analytic' or 'plugin', got {variance!r}")

    truth = model.integrated_upper_quantile(p) / (1.0 - p)
    sigma2 = sigma2_tail_variance(model, p).sigma2 if variance == "analytic" else None

    def replicate(r):
        emp = build_empirical(model.sample_from(stream(seed, n, r), n))
        estimate = empirical_es(emp, p)
        s2 = sigma2 if sigma2 is not None else sigma2_plugin(emp, p).sigma2
        result = _interval(estimate, s2, n, 1.0 - p, z_crit, float(level))
        return result.estimate, result.ci_low, result.ci_high

    results = ordered_map(replicate, range(reps), threads=threads, progress=progress, desc=f"coverage n={n}")
    estimates, lows, highs = (np.array(col) for col in zip(*results))
    summary = calculate_coverage(lows, highs, truth)

    rows = ()
    if keep_rows:
        rows = tuple(
            ReplicationRow(r, float(e), float(lo), float(hi), bool(c))
            for r, (e, lo, hi, c) in enumerate(zip(estimates, lows, highs, summary["covered"]))
        )
    return CoverageReport(
        coverage=summary["coverage"],
        reps=reps,
        n=n,
        p=p,
        mean_width=summary["mean_width"],
        seed=int(seed),
        level=float(level),
        variance=variance,
        truth=truth,
        rows=rows,
    )


def _per_n_medians(model, n_list, reps, seed, statistic, threads, progress, desc):
    cells = [(n, r) for n in n_list for r in range(reps)]

    def cell(key):
        n, r = key
        emp = build_empirical(model.sample_from(stream(seed, n, r), n))
        return statistic(emp)

    values = ordered_map(cell, cells, threads=threads, progress=progress, desc=desc)
    table = []
    for i, n in enumerate(n_list):
        chunk = values[i * reps:(i + 1) * reps]
        table.append((n, median_abs(chunk)))
    return table


def mc_remainder_decay(model, n_list, reps, p, seed=0, threads=None, progress=False):
    """Per n, the median over replications of sqrt(n) Gamma_p(F, F_n)."""
    if not model.moment_class().finite_upper_first:
        raise MomentError(f"{model} has no finite upper first moment")
    n_list = _check_n_list(n_list)
    reps = _check_count("reps", reps, 1)
    p = check_probability(p)

    def statistic(emp):
        return math.sqrt(emp.n) * remainder_gamma(model, emp, p).value

    return _per_n_medians(model, n_list, reps, seed, statistic, threads, progress, "remainder")


def consistency_check(model, n_list, reps, p, seed=0, threads=None, progress=False):
    """Per n, the median absolute error of the integrated empirical quantile."""
    if not model.moment_class().finite_upper_first:
        raise MomentError(f"{model} has no finite upper first moment")
    n_list = _check_n_list(n_list)
    reps = _check_count("reps", reps, 1)
    p = check_probability(p)
    truth = model.integrated_upper_quantile(p)

    def statistic(emp):
        return emp.integrated_upper_quantile(p) - truth

    return _per_n_medians(model, n_list, reps, seed, statistic, threads, progress, "consistency")
