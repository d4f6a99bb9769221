import math

import numpy as np
import pytest

from data.empirical import build_empirical, empirical_es
from functionals.inference import (
    DEGENERATE_WARNING,
    SMALL_SAMPLE_WARNING,
    consistency_check,
    decomposition_terms,
    es_confidence_interval,
    lower_confidence_interval,
    mc_coverage_study,
    mc_remainder_decay,
    remainder_gamma,
)
from functionals.variance import sigma2_tail_variance
from models import Exponential, Lomax, Uniform
from utils.errors import DomainError, MomentError
from utils.rng import stream


def stratified(model, n):
    return model.quantile((np.arange(1, n + 1) - 0.5) / n)


@pytest.mark.parametrize("model", [Lomax(10, 1), Exponential(1), Uniform(0, 1)], ids=str)
@pytest.mark.parametrize("p", [0.5, 0.9])
def test_remainder_sandwich(model, p):
    for r in range(200):
        report = remainder_gamma(model, model.sample_from(stream(31, 500, r), 500), p)
        assert report.bounds_applicable
        assert 0.0 <= report.value <= report.upper_bound + 1e-12


def test_remainder_small_for_stratified_sample():
    for n in (100, 1000):
        report = remainder_gamma(Exponential(1), stratified(Exponential(1), n), 0.8)
        assert 0.0 <= report.value < 10 / n


def test_decomposition_is_exact():
    model = Lomax(3, 1)
    for r in range(100):
        sample = model.sample_from(stream(11, 1000, r), 1000)
        terms = decomposition_terms(model, sample, 0.9)
        assert abs(terms.residual) < 1e-9


def test_es_interval_centre_and_scale():
    sample = Exponential(1).sample(3, 5000)
    p = 0.9
    result = es_confidence_interval(sample, p, level=0.95)
    assert result.estimate == empirical_es(build_empirical(sample), p)
    assert result.ci_low < result.estimate < result.ci_high
    assert (result.ci_high - result.estimate) == pytest.approx(1.959963984540054 * result.std_error, rel=1e-12)
    assert result.warnings == ()
    assert result.remainder_bound is None


def test_es_interval_analytic_variance():
    model = Exponential(1)
    p = 0.9
    sample = model.sample(4, 4000)
    result = es_confidence_interval(sample, p, variance_model=model)
    sigma2 = sigma2_tail_variance(model, p).sigma2
    assert result.std_error == pytest.approx(math.sqrt(sigma2 / 4000) / (1 - p), rel=1e-12)
    assert result.remainder_bound >= 0.0
    # ES of Exp(1) above 0.9 is 1 + ln 10
    assert abs(result.estimate - (1 + math.log(10))) < 4 * result.std_error


def test_constant_sample_gives_zero_width():
    result = es_confidence_interval([2.0] * 50, 0.5)
    assert result.estimate == pytest.approx(2.0, abs=1e-14)
    assert result.width == 0.0
    assert DEGENERATE_WARNING in result.warnings


def test_small_sample_warning():
    result = es_confidence_interval([1.0, 5.0, 2.0, 8.0, 3.0], 0.5)
    assert SMALL_SAMPLE_WARNING in result.warnings
    single = es_confidence_interval([4.0], 0.5)
    assert single.width == 0.0
    assert set(single.warnings) == {SMALL_SAMPLE_WARNING, DEGENERATE_WARNING}


def test_es_interval_domain():
    with pytest.raises(DomainError):
        es_confidence_interval([1.0, 2.0], 1.0)
    with pytest.raises(DomainError):
        es_confidence_interval([1.0, 2.0], 0.5, level=1.0)
    with pytest.raises(MomentError):
        es_confidence_interval([1.0, 2.0, 3.0], 0.5, variance_model=Lomax(2, 1))


def test_lower_interval_uniform():
    sample = Uniform(0, 1).sample(6, 20_000)
    result = lower_confidence_interval(sample, 0.5, variance_model=Uniform(0, 1))
    assert abs(result.estimate - 0.25) < 4 * result.std_error
    plug = lower_confidence_interval(sample, 0.5)
    assert plug.estimate == result.estimate
    assert plug.std_error == pytest.approx(result.std_error, rel=0.05)


def test_coverage_is_thread_count_independent():
    kwargs = dict(model=Exponential(1), n=200, reps=100, p=0.9, seed=3, keep_rows=True)
    one = mc_coverage_study(threads=1, **kwargs)
    many = mc_coverage_study(threads=8, **kwargs)
    assert one == many
    assert len(one.rows) == 100
    assert one.coverage == sum(row.covered for row in one.rows) / 100


def test_analytic_width_halves_when_n_quadruples():
    small = mc_coverage_study(Lomax(3, 1), 1000, 100, 0.9, seed=1)
    large = mc_coverage_study(Lomax(3, 1), 4000, 100, 0.9, seed=1)
    assert large.mean_width / small.mean_width == pytest.approx(0.5, rel=1e-12)


def test_coverage_study_errors():
    with pytest.raises(MomentError):
        mc_coverage_study(Lomax(2, 1), 100, 100, 0.9)
    with pytest.raises(DomainError):
        mc_coverage_study(Exponential(1), 100, 99, 0.9)
    with pytest.raises(DomainError):
        mc_coverage_study(Exponential(1), 100, 100, 0.9, variance="bootstrap")


@pytest.mark.slow
def test_coverage_lomax_analytic():
    report = mc_coverage_study(Lomax(3, 1), 2000, 2000, 0.9, level=0.95, seed=7)
    assert 0.93 <= report.coverage <= 0.97
    assert report.truth == pytest.approx(1.5 * 0.1 ** (-1 / 3) - 1, rel=1e-12)


@pytest.mark.slow
def test_coverage_lomax_half_level():
    report = mc_coverage_study(Lomax(3, 1), 2000, 2000, 0.9, level=0.5, seed=7)
    assert 0.47 <= report.coverage <= 0.53


@pytest.mark.slow
def test_plugin_coverage_close_to_analytic():
    analytic = mc_coverage_study(Exponential(1), 2000, 2000, 0.9, seed=7)
    plugin = mc_coverage_study(Exponential(1), 2000, 2000, 0.9, seed=7, variance="plugin")
    assert abs(plugin.coverage - analytic.coverage) <= 0.025


def test_remainder_decay_is_decreasing():
    table = mc_remainder_decay(Lomax(10, 1), [250, 1000, 4000], reps=500, p=0.9, seed=5)
    assert [n for n, _ in table] == [250, 1000, 4000]
    medians = [m for _, m in table]
    assert medians[0] > medians[1] > medians[2] >= 0.0


def test_remainder_decay_uniform_halves():
    table = mc_remainder_decay(Uniform(0, 1), [250, 1000, 4000], reps=500, p=0.9, seed=5)
    medians = [m for _, m in table]
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] < medians[0] / 2


def test_remainder_decay_is_seed_deterministic():
    first = mc_remainder_decay(Exponential(1), [50, 200], reps=100, p=0.5, seed=12, threads=1)
    again = mc_remainder_decay(Exponential(1), [50, 200], reps=100, p=0.5, seed=12, threads=4)
    assert first == again


def test_consistency_errors_shrink():
    table = consistency_check(Exponential(1), [100, 1000, 10_000], reps=200, p=0.5, seed=9)
    medians = [m for _, m in table]
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] < 0.02


def test_consistency_with_infinite_variance():
    # Lomax(2,1): finite mean, infinite variance; truth integral_0.75^1 = 0.75
    table = consistency_check(Lomax(2, 1), [100, 1000, 10_000], reps=200, p=0.75, seed=9)
    assert [n for n, _ in table] == [100, 1000, 10_000]
    medians = [m for _, m in table]
    assert medians[0] > medians[1] > medians[2]


def test_consistency_exponential_upper_tail():
    table = consistency_check(Exponential(1), [100, 1000, 10_000], reps=200, p=0.9, seed=10)
    medians = [m for _, m in table]
    assert medians[0] > medians[1] > medians[2]


def test_consistency_single_cell():
    table = consistency_check(Exponential(1), [20], reps=1, p=0.5, seed=1)
    assert len(table) == 1 and table[0][0] == 20


def test_harness_errors():
    with pytest.raises(MomentError):
        mc_remainder_decay(Lomax(0.8, 1), [100], reps=10, p=0.5)
    with pytest.raises(DomainError):
        consistency_check(Exponential(1), [], reps=10, p=0.5)
    with pytest.raises(DomainError):
        consistency_check(Exponential(1), [0, 10], reps=10, p=0.5)
