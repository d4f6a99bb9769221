import math
import time

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from data.empirical import build_empirical
from functionals.gap import (
    curve_peak,
    delta,
    delta_surface,
    gamma,
    gamma_curve,
    gamma_star,
    lomax_delta_closed_form,
    lomax_gamma_closed_form,
    quantile_diagonal,
)
from models import Exponential, Lomax, Uniform
from utils.errors import ConvergenceError, DomainError, MomentError, SingularityError

P_GRID = [round(0.01 * k, 2) for k in range(1, 100)]


def test_delta_of_identical_models_is_zero():
    for model in (Lomax(3, 1), Exponential(2), Uniform(0, 1)):
        report = delta(model, model, 0.7, 1.2)
        assert report.value == pytest.approx(0.0, abs=1e-12)
        assert report.lower_bound <= 0.0 <= report.upper_bound


def test_delta_matches_lomax_closed_form():
    report = delta(Lomax(10, 1), Lomax(8, 1), 0.9, 0.5)
    assert report.value == pytest.approx(lomax_delta_closed_form(10, 8, 0.9, 0.5), abs=1e-8)
    assert report.satisfied


def test_delta_matches_truncated_direct_quadrature():
    F, G, p, z = Lomax(4, 1), Exponential(1.5), 0.6, 0.8
    quantile_part, _ = scipy_integrate.quad(lambda u: float(F.quantile(u)) - float(G.quantile(u)), p, 1,
                                            epsabs=1e-13, limit=200)
    cdf_part, _ = scipy_integrate.quad(lambda x: G.cdf(x) - F.cdf(x), z, np.inf, epsabs=1e-13, limit=200)
    assert delta(F, G, p, z).value == pytest.approx(quantile_part - cdf_part, abs=1e-8)


def test_delta_is_antisymmetric():
    F, G = Lomax(10, 1), Lomax(8, 1)
    for p, z in ((0.3, 0.1), (0.9, 0.5), (0.5, 2.0)):
        assert delta(F, G, p, z).value + delta(G, F, p, z).value == pytest.approx(0.0, abs=2e-10)


def test_delta_requires_finite_means():
    with pytest.raises(MomentError):
        delta(Lomax(0.5, 1), Lomax(3, 1), 0.5, 1.0)
    with pytest.raises(DomainError):
        delta(Lomax(2, 1), Lomax(3, 1), 1.0, 1.0)
    with pytest.raises(DomainError):
        delta(Lomax(2, 1), Lomax(3, 1), 0.5, math.inf)


def test_gamma_examples():
    assert gamma(Lomax(3, 1), Lomax(3, 1), 0.4).value == 0.0
    report = gamma(Lomax(10, 1), Lomax(8, 1), 0.5)
    assert report.value == pytest.approx(lomax_gamma_closed_form(10, 8, 0.5), abs=1e-8)
    assert report.lower_bound == 0.0
    assert report.bounds_applicable and report.satisfied


def test_gamma_zero_when_quantiles_coincide():
    # both medians equal 1
    F, G = Uniform(0, 2), Exponential(math.log(2))
    assert gamma(F, G, 0.5).value == pytest.approx(0.0, abs=1e-14)


def test_gamma_requires_finite_means():
    with pytest.raises(MomentError):
        gamma(Lomax(0.5, 1), Lomax(0.3, 1), 0.5)


def test_gamma_star_infinite_mean_closed_form():
    report = gamma_star(Lomax(0.5, 1), Lomax(0.3, 1), 0.5)
    assert report.value == pytest.approx(lomax_gamma_closed_form(0.5, 0.3, 0.5), rel=1e-9, abs=1e-8)


def test_gamma_star_equals_gamma_for_finite_means():
    F, G = Lomax(10, 1), Lomax(8, 1)
    for p in (0.1, 0.5, 0.9):
        assert gamma_star(F, G, p).value == pytest.approx(gamma(F, G, p).value, abs=1e-8)


def test_gamma_equals_delta_on_the_quantile_line():
    F, G = Lomax(6, 1), Exponential(3)
    for p in (0.2, 0.5, 0.8):
        z = float(F.quantile(p))
        assert gamma(F, G, p).value == pytest.approx(delta(F, G, p, z).value, abs=1e-9)


INFINITE_SHAPES = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


@pytest.mark.parametrize("a1", INFINITE_SHAPES)
@pytest.mark.parametrize("a2", INFINITE_SHAPES)
def test_gamma_star_non_negative_for_infinite_means(a1, a2):
    for p in (0.01, 0.1, 0.5, 0.9, 0.99):
        assert gamma_star(Lomax(a1, 1), Lomax(a2, 1), p).value >= -1e-12


SHAPES = [0.3, 0.6, 0.9, 1.2, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0]
FINITE_SHAPES = [1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0]
ORACLE_P = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
ORACLE_Z = [0.0, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0]


@pytest.mark.parametrize("a1", SHAPES)
def test_gamma_closed_form_matches_quadrature(a1):
    for a2 in SHAPES:
        for p in ORACLE_P:
            value = gamma_star(Lomax(a1, 1), Lomax(a2, 1), p).value
            assert value == pytest.approx(lomax_gamma_closed_form(a1, a2, p), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("a1", FINITE_SHAPES)
def test_delta_closed_form_matches_quadrature(a1):
    # each p is paired with one z, so the grid is 20 x 20 x 9 cells
    F = Lomax(a1, 1)
    for a2 in FINITE_SHAPES:
        G = Lomax(a2, 1)
        for p, z in zip(ORACLE_P, ORACLE_Z):
            value = delta(F, G, p, z).value
            assert value == pytest.approx(lomax_delta_closed_form(a1, a2, p, z), rel=1e-8, abs=1e-8)


def test_closed_forms_cancel_for_equal_shapes():
    assert lomax_gamma_closed_form(3.0, 3.0, 0.4) == pytest.approx(0.0, abs=1e-15)
    assert lomax_delta_closed_form(3.0, 3.0, 0.4, 2.0) == pytest.approx(0.0, abs=1e-15)


def test_closed_form_errors():
    with pytest.raises(SingularityError):
        lomax_gamma_closed_form(2.0, 1.0, 0.5)
    with pytest.raises(MomentError):
        lomax_delta_closed_form(0.9, 2.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        lomax_delta_closed_form(2.0, 3.0, 0.5, -1.0)


def test_delta_non_negative_on_the_f_quantile_line():
    p = 0.5
    z = float(Lomax(10, 1).quantile(p))
    assert lomax_delta_closed_form(10, 12, p, z) >= 0.0


def _random_model(rng):
    kind = rng.integers(3)
    if kind == 0:
        return Lomax(rng.uniform(1.5, 12.0), rng.uniform(0.5, 2.0))
    if kind == 1:
        return Exponential(rng.uniform(0.3, 3.0))
    low = rng.uniform(-1.0, 1.0)
    return Uniform(low, low + rng.uniform(0.5, 3.0))


def test_difference_bounds_on_random_tuples():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        F, G = _random_model(rng), _random_model(rng)
        p = rng.uniform(0.05, 0.95)
        anchor = F if rng.integers(2) else G
        z = float(anchor.quantile(rng.uniform(0.01, 0.99)))
        report = delta(F, G, p, z)
        assert report.lower_bound <= 0.0 <= report.upper_bound
        assert report.lower_bound - 1e-8 <= report.value <= report.upper_bound + 1e-8


def test_gap_bound_applicability_with_empirical_f():
    emp = build_empirical([1.0, 2.0, 3.0, 4.0])
    report = gamma_star(emp, Exponential(1), 0.5)
    assert not report.bounds_applicable
    assert report.satisfied


def test_gamma_curve_identical_models_is_zero():
    rows = gamma_curve(Lomax(4, 1), Lomax(4, 1), P_GRID)
    assert [p for p, _ in rows] == P_GRID
    assert all(r.value == 0.0 for _, r in rows)


def test_gamma_curve_shape_finite_means():
    rows = gamma_curve(Lomax(10, 1), Lomax(6, 1), P_GRID)
    values = [r.value for _, r in rows]
    assert min(values) >= 0.0
    peak = curve_peak(rows)
    assert values[0] < peak / 10
    # vanishes as p -> 1, slowly: like (1 - p)^{1/2} for these shapes
    assert gamma_star(Lomax(10, 1), Lomax(6, 1), 1 - 1e-8).value < peak / 10


def test_gamma_curves_infinite_means_match_closed_form():
    started = time.perf_counter()
    F = Lomax(0.5, 1)
    for a2 in INFINITE_SHAPES:
        rows = gamma_curve(F, Lomax(a2, 1), P_GRID)
        for p, r in rows:
            assert r.status == "ok"
            assert r.value >= 0.0
            assert r.value == pytest.approx(lomax_gamma_closed_form(0.5, a2, p), rel=1e-8, abs=1e-9)
    assert time.perf_counter() - started < 30.0


def test_gamma_curve_rejects_bad_grids():
    with pytest.raises(DomainError):
        gamma_curve(Lomax(2, 1), Lomax(3, 1), [0.5, 0.4])
    with pytest.raises(DomainError):
        gamma_curve(Lomax(2, 1), Lomax(3, 1), [0.0, 0.5])
    with pytest.raises(DomainError):
        gamma_curve(Lomax(2, 1), Lomax(3, 1), [])


class _Unsettled(Uniform):
    def quantile_gap_integral(self, x, p):
        if p > 0.5:
            raise ConvergenceError("did not settle")
        return super().quantile_gap_integral(x, p)


def test_gamma_curve_flags_failed_points():
    rows = gamma_curve(Uniform(0, 1), _Unsettled(0, 2), [0.25, 0.75])
    assert rows[0][1].status == "ok"
    assert rows[1][1].status.startswith("error:")
    assert math.isnan(rows[1][1].value)


def test_delta_surface_order_and_zero_grid():
    rows = delta_surface(Lomax(3, 1), Lomax(3, 1), [0.2, 0.5, 0.8], [0.0, 1.0, 2.0])
    assert [(p, z) for p, z, _ in rows] == [(p, z) for p in (0.2, 0.5, 0.8) for z in (0.0, 1.0, 2.0)]
    assert all(r.value == 0.0 for _, _, r in rows)


def test_delta_surface_requires_finite_means():
    with pytest.raises(MomentError):
        delta_surface(Lomax(0.9, 1), Lomax(3, 1), [0.5], [1.0])


@pytest.mark.parametrize("a2", [8, 12])
def test_delta_sign_along_quantile_lines(a2):
    F, G = Lomax(10, 1), Lomax(a2, 1)
    grid = [round(0.05 * k, 2) for k in range(1, 20)]
    assert all(r.value >= -1e-12 for _, r in quantile_diagonal(F, G, grid, along="F"))
    assert all(r.value <= 1e-12 for _, r in quantile_diagonal(F, G, grid, along="G"))


def test_surface_is_thread_count_independent():
    F, G = Lomax(10, 1), Lomax(12, 1)
    grid_p, grid_z = [0.1, 0.5, 0.9], [0.0, 0.25, 0.5]
    one = delta_surface(F, G, grid_p, grid_z, threads=1)
    many = delta_surface(F, G, grid_p, grid_z, threads=4)
    assert one == many
