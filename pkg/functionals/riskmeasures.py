"""Distortion (spectral) risk measures built from Expected Shortfall.

A risk measure here is rho(F) = integral of ES_p(F) mu(dp) for a finite
signed measure mu on (0,1), made of atoms and piecewise-constant bands.
Swapping the order of integration gives the quantile-side form

    rho(F) = integral_0^1 F^{-1}(u) phi(u) du,
    phi(u) = integral_{[0,u]} mu(dp) / (1 - p),

which is what the plug-in estimator and its influence values use.

Built-in special cases:
    unit atom at p                  ES_p
    atoms (q, +1), (p, -1), q > p   inter-ES, ES_q - ES_p
    rvar(p, q)                      average quantile over (p, q)

Gini Shortfall recipe: a tail-Gini loading adds to ES_p a weight that grows
linearly in u on (p, 1). Its measure is an atom at p plus a density
proportional to (1 - s) on (p, 1); approximate that density by bands ending
at 1 - eps (the finiteness guard rejects bands touching 1) and pass the
resulting SignedMeasure to distortion_risk or distortion_estimate.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from data.empirical import build_empirical, empirical_es
from functionals.inference import InferenceResult
from models.distributions import ModelKind
from utils.errors import (
    ConvergenceError,
    DomainError,
    FinitenessError,
    MomentError,
    ParameterError,
    ParseError,
    check_probability,
)
from utils.metrics import normal_critical_value, stable_mean, stable_sum
from utils.quadrature import FINITE_TOL, integrate

MIN_SAMPLE = 30
RU_TOL = 1e-11
RU_EXPANSIONS = 8


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class SignedMeasure:
    """Atoms (p, w) plus bands (a, b, h) of constant density h on [a, b]."""

    atoms: tuple = ()
    bands: tuple = ()

    def __post_init__(self):
        atoms = tuple(sorted((_finite("atom location", p), _finite("atom weight", w)) for p, w in self.atoms))
        bands = tuple(
            sorted(
                (_finite("band start", a), _finite("band end", b), _finite("band height", h))
                for a, b, h in self.bands
            )
        )
        for p, _ in atoms:
            if not 0.0 < p < 1.0:
                raise DomainError(f"atom location must lie in (0,1), got {p}")
        for left, right in zip(atoms[:-1], atoms[1:]):
            if left[0] == right[0]:
                raise ParameterError(f"duplicate atom at p={left[0]}")
        for a, b, _ in bands:
            if not 0.0 < a < b <= 1.0:
                raise DomainError(f"band must satisfy 0 < a < b <= 1, got [{a}, {b}]")
        for left, right in zip(bands[:-1], bands[1:]):
            if right[0] < left[1]:
                raise ParameterError(f"bands [{left[0]}, {left[1]}] and [{right[0]}, {right[1]}] overlap")
        object.__setattr__(self, "atoms", tuple((p, w) for p, w in atoms if w != 0.0))
        object.__setattr__(self, "bands", tuple((a, b, h) for a, b, h in bands if h != 0.0))

    @property
    def total_variation(self):
        return stable_sum([abs(w) for _, w in self.atoms] + [abs(h) * (b - a) for a, b, h in self.bands])

    @property
    def is_zero(self):
        return not self.atoms and not self.bands

    def support_bounds(self):
        """(smallest, largest) point carrying mass, or None for the zero measure."""
        points = [p for p, _ in self.atoms]
        for a, b, _ in self.bands:
            points += [a, b]
        if not points:
            return None
        return min(points), max(points)

    def without_atoms(self):
        return SignedMeasure(bands=self.bands)


def unit_atom(p):
    return SignedMeasure(atoms=((check_probability(p), 1.0),))


def inter_es_measure(p, q):
    p, q = check_probability(p), check_probability(q, "q")
    if not p < q:
        raise DomainError(f"inter-ES needs p < q, got p={p}, q={q}")
    return SignedMeasure(atoms=((q, 1.0), (p, -1.0)))


def rvar_measure(p, q):
    """Atoms whose ES mixture is the average quantile over (p, q)."""
    p, q = check_probability(p), check_probability(q, "q")
    if not p < q:
        raise DomainError(f"rvar needs p < q, got p={p}, q={q}")
    return SignedMeasure(atoms=((p, (1.0 - p) / (q - p)), (q, -(1.0 - q) / (q - p))))


_TERM_ARITY = {"atom": ("p", "w"), "band": ("a", "b", "h")}


def parse_measure_spec(text):
    """Parse "atom:p,w;band:a,b,h;..." into a SignedMeasure; "" or "zero" is the zero measure."""
    text = str(text).strip()
    if text.lower() in ("", "zero", "0"):
        return SignedMeasure()

    atoms, bands = [], []
    for position, term in enumerate(text.split(";"), start=1):
        name, sep, rest = term.strip().partition(":")
        name = name.strip().lower()
        if name not in _TERM_ARITY or not sep:
            raise ParseError(f"term {position} {term.strip()!r}: expected 'atom:p,w' or 'band:a,b,h'")
        names = _TERM_ARITY[name]
        tokens = [t.strip() for t in rest.split(",")]
        if len(tokens) != len(names):
            raise ParameterError(
                f"term {position} ({name}) takes {len(names)} values ({','.join(names)}), got {len(tokens)}"
            )
        try:
            values = tuple(float(t) for t in tokens)
        except ValueError:
            raise ParameterError(f"term {position} ({name}): non-numeric value in {rest!r}")
        (atoms if name == "atom" else bands).append(values)

    try:
        return SignedMeasure(atoms=tuple(atoms), bands=tuple(bands))
    except ParameterError as exc:
        raise ParameterError(f"{text!r}: {exc}") from None


def _antiderivative_log(s):
    # integral of ln(1 - s) ds, continuous up to s = 1
    t = 1.0 - s
    return t - xlogy(t, t)


@dataclass(frozen=True)
class SpectralWeight:
    """phi(u) = integral_{[0,u]} mu(dp) / (1 - p), piecewise in u."""

    measure: SignedMeasure

    @property
    def breakpoints(self):
        points = {p for p, _ in self.measure.atoms}
        for a, b, _ in self.measure.bands:
            points.update((a, b))
        return tuple(sorted(points))

    def value(self, u):
        total = [w / (1.0 - p) for p, w in self.measure.atoms if u >= p]
        for a, b, h in self.measure.bands:
            if u >= a:
                c = min(u, b)
                total.append(h * (math.log1p(-a) - math.log1p(-c)))
        return math.fsum(total)

    def cumulative(self, u):
        """Phi(u) = integral_0^u phi, in closed form."""
        total = [w * (u - p) / (1.0 - p) for p, w in self.measure.atoms if u > p]
        for a, b, h in self.measure.bands:
            if u <= a:
                continue
            c = min(u, b)
            inside = (c - a) * math.log1p(-a) - (_antiderivative_log(c) - _antiderivative_log(a))
            beyond = (u - b) * (math.log1p(-a) - math.log1p(-b)) if u > b else 0.0
            total.append(h * (inside + beyond))
        return math.fsum(total)

    def grid_values(self, n, emp):
        """phi(j/n) for j = 1..n-1, with atom steps placed by the exact empirical index."""
        j = np.arange(1, n, dtype=float)
        out = np.zeros(n - 1)
        for p, w in self.measure.atoms:
            k = emp.index(p)
            out[k - 1:] += w / (1.0 - p)
        for a, b, h in self.measure.bands:
            u = j / n
            c = np.minimum(u, b)
            out += np.where(u >= a, h * (math.log1p(-a) - np.log1p(-c)), 0.0)
        return out

    def integrate_quantile(self, model):
        """integral_0^1 F^{-1}(u) phi(u) du for the given model."""
        _require_finite_support(self.measure)
        if self.measure.is_zero:
            return 0.0
        if model.kind is ModelKind.EMPIRICAL:
            return self._integrate_empirical(model)

        points = self.breakpoints
        pieces = []
        for lo, hi in zip(points[:-1], points[1:]):
            mid = self.value(0.5 * (lo + hi))
            if mid == 0.0 and self.value(lo) == 0.0:
                continue
            pieces.append(integrate(lambda u: float(model.quantile(u)) * self.value(u), lo, hi, FINITE_TOL))
        last = points[-1]
        tail_weight = self.value(last)
        if tail_weight != 0.0:
            pieces.append(tail_weight * model.integrated_upper_quantile(last))
        return math.fsum(pieces)

    def _integrate_empirical(self, emp):
        n = emp.n
        phi_cum = np.array([self.cumulative(i / n) for i in range(n + 1)])
        return stable_sum(emp.sorted_values * np.diff(phi_cum))


def spectral_weight_from_measure(mu):
    return SpectralWeight(mu)


def _require_finite_support(mu):
    for a, b, h in mu.bands:
        if b >= 1.0:
            raise FinitenessError(f"band [{a}, {b}] touches p = 1; ES weights blow up there")


def es(model, p):
    p = check_probability(p)
    if model.kind is ModelKind.EMPIRICAL:
        return empirical_es(model, p)
    return model.integrated_upper_quantile(p) / (1.0 - p)


def distortion_risk(model, mu):
    """Sum of w ES_p over atoms plus h times the integral of ES_p over each band."""
    _require_finite_support(mu)
    if not model.moment_class().finite_upper_first and not mu.is_zero:
        raise MomentError(f"{model} has no finite upper first moment")

    terms = [w * es(model, p) for p, w in mu.atoms]
    if model.kind is ModelKind.EMPIRICAL:
        if mu.bands:
            terms.append(SpectralWeight(mu.without_atoms()).integrate_quantile(model))
    else:
        for a, b, h in mu.bands:
            terms.append(h * integrate(lambda s: es(model, s), a, b, FINITE_TOL))
    return math.fsum(terms)


def _check_intervals(intervals):
    cleaned = []
    for a, b in intervals:
        a, b = float(a), float(b)
        if not 0.0 <= a < b <= 1.0:
            raise DomainError(f"interval must satisfy 0 <= a < b <= 1, got ({a}, {b})")
        cleaned.append((a, b))
    cleaned.sort()
    for left, right in zip(cleaned[:-1], cleaned[1:]):
        if right[0] < left[1]:
            raise DomainError(f"intervals {left} and {right} overlap")
    return cleaned


def _window_integral(model, a, b):
    mc = model.moment_class()
    if a == 0.0 and b == 1.0:
        return model.mean()
    if a == 0.0:
        return model.integrated_lower_quantile(b)
    if b == 1.0:
        return model.integrated_upper_quantile(a)
    if mc.finite_lower_first:
        return model.integrated_lower_quantile(b) - model.integrated_lower_quantile(a)
    return model.integrated_upper_quantile(a) - model.integrated_upper_quantile(b)


def interval_integrated_quantile(model, intervals):
    """Integral of F^{-1} over a union of disjoint subintervals of (0,1)."""
    return math.fsum(_window_integral(model, a, b) for a, b in _check_intervals(intervals))


def rvar(model, p, q):
    """Range-VaR: (1/(q - p)) integral_p^q F^{-1}(u) du."""
    p, q = check_probability(p), check_probability(q, "q")
    if not p < q:
        raise DomainError(f"rvar needs p < q, got p={p}, q={q}")
    return interval_integrated_quantile(model, [(p, q)]) / (q - p)


def lower_integrated_quantile(model, p):
    return model.integrated_lower_quantile(p)


def _ru_objective(model, p):
    return lambda y: (1.0 - p) * y + model.expected_excess(y)


def ru_es_crosscheck(model, p):
    """Minimize (1 - p) y + E[(X - y)_+] by golden-section search; returns (argmin, min)."""
    p = check_probability(p)
    if not model.moment_class().finite_upper_first:
        raise MomentError(f"{model} has no finite upper first moment")

    objective = _ru_objective(model, p)
    lo = float(model.quantile(max(p - 0.2, 0.5 * p)))
    hi = float(model.quantile(min(p + 0.2, 0.5 * (1.0 + p))))
    width = max(hi - lo, 1e-3 * max(1.0, abs(lo)))
    hi = lo + width

    for _ in range(RU_EXPANSIONS):
        try:
            result = minimize_scalar(objective, bracket=(lo, hi), method="golden", tol=RU_TOL)
        except (RuntimeError, ValueError):
            result = None
        if result is not None and result.success:
            return float(result.x), float(result.fun)
        width *= 2.0
        lo, hi = lo - width, hi + width
    raise ConvergenceError(f"golden-section search for {model} at p={p} found no bracket")


def influence_values(emp, mu):
    """Plug-in influence Z_r of each order statistic x_(r) on the spectral functional.

    Z_r = sum_{j >= r} w_j - sum_j w_j j / n with w_j = (x_(j+1) - x_(j)) phi(j/n).
    """
    n = emp.n
    if n < 2:
        return np.zeros(n)
    weights = np.diff(emp.sorted_values) * SpectralWeight(mu).grid_values(n, emp)
    centre = stable_sum(weights * np.arange(1, n) / n)
    upper_sums = np.append(np.cumsum(weights[::-1])[::-1], 0.0)
    return upper_sums - centre


def distortion_estimate(sample, mu, level=0.95):
    """Plug-in estimate of rho with a normal confidence interval.

    For a unit atom at p this reduces to the ES interval of es_confidence_interval.
    """
    emp = sample if getattr(sample, "kind", None) is ModelKind.EMPIRICAL else build_empirical(sample)
    z_crit = normal_critical_value(level)
    _require_finite_support(mu)

    warnings = []
    if emp.n < MIN_SAMPLE:
        warnings.append("small-sample: CLT approximation unreliable")
    bounds = mu.support_bounds()
    if bounds is not None and (bounds[0] < 1.0 / emp.n or bounds[1] > 1.0 - 1.0 / emp.n):
        warnings.append("measure support within 1/n of 0 or 1: plug-in remainder may not vanish")

    estimate = distortion_risk(emp, mu)
    z = influence_values(emp, mu)
    if emp.n >= 2:
        centred = z - stable_mean(z)
        variance = stable_sum(centred ** 2) / (emp.n - 1)
    else:
        variance = 0.0
    if variance == 0.0 and not mu.is_zero:
        warnings.append("degenerate sample: zero estimated variance, zero-width interval")

    se = math.sqrt(variance / emp.n)
    half = z_crit * se
    return InferenceResult(
        estimate=estimate,
        std_error=se,
        ci_low=estimate - half,
        ci_high=estimate + half,
        level=float(level),
        n=emp.n,
        warnings=tuple(warnings),
    )


def _remainder_term(F, emp, p):
    xp = float(F.quantile(p))
    return (xp - emp.quantile(p)) * (emp.cdf(xp) - F.cdf(xp)) / (1.0 - p)


def distortion_remainder_bound(F, sample, mu):
    """integral (F^{-1}(p) - F_n^{-1}(p)) (F_n(x_p) - F(x_p)) / (1 - p) |mu|(dp)."""
    emp = sample if getattr(sample, "kind", None) is ModelKind.EMPIRICAL else build_empirical(sample)
    _require_finite_support(mu)
    terms = [abs(w) * _remainder_term(F, emp, p) for p, w in mu.atoms]
    for a, b, h in mu.bands:
        steps = [j / emp.n for j in range(math.ceil(a * emp.n), math.floor(b * emp.n) + 1)]
        terms.append(abs(h) * integrate(lambda p: _remainder_term(F, emp, p), a, b, FINITE_TOL, points=steps))
    return math.fsum(terms)
