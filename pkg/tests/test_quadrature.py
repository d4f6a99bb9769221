import math

import pytest

from utils.errors import ConvergenceError
from utils.quadrature import adaptive_simpson, integrate, integrate_log_tail, integrate_to_infinity


def test_adaptive_simpson_sine():
    value, error = adaptive_simpson(math.sin, 0.0, math.pi, 1e-12)
    assert value == pytest.approx(2.0, abs=1e-11)
    assert error < 1e-10


def test_reversed_limits_flip_sign():
    forward = integrate(lambda x: x * x, 0.0, 2.0)
    backward = integrate(lambda x: x * x, 2.0, 0.0)
    assert forward == pytest.approx(8.0 / 3.0, abs=1e-12)
    assert backward == -forward


def test_empty_interval_is_zero():
    assert integrate(math.exp, 1.5, 1.5) == 0.0


def test_breakpoints_handle_kinks():
    value = integrate(lambda x: abs(x - 0.3), 0.0, 1.0, points=[0.3])
    assert value == pytest.approx(0.045 + 0.245, abs=1e-13)


def test_step_integrand_exact_with_breakpoint():
    value = integrate(lambda x: 1.0 if x >= 0.25 else 0.0, 0.0, 1.0, points=[0.25])
    assert value == pytest.approx(0.75, abs=1e-12)


def test_half_line():
    assert integrate_to_infinity(lambda x: math.exp(-x), 0.0) == pytest.approx(1.0, abs=1e-10)
    assert integrate_to_infinity(lambda x: 1.0 / (1.0 + x) ** 3, 0.0) == pytest.approx(0.5, abs=1e-10)


def test_divergent_half_line_raises():
    with pytest.raises(ConvergenceError):
        integrate_to_infinity(lambda x: 1.0 / (1.0 + x), 0.0)


@pytest.mark.parametrize("mass", [1.0, 0.5, 0.01])
def test_log_tail_constant(mass):
    assert integrate_log_tail(lambda q: 1.0, mass) == pytest.approx(mass, abs=1e-10)


def test_log_tail_integrable_singularity():
    # integral_0^1 q^{-1/2} dq = 2
    assert integrate_log_tail(lambda q: q ** -0.5, 1.0, 1e-11) == pytest.approx(2.0, abs=1e-9)


def test_log_tail_zero_mass():
    assert integrate_log_tail(lambda q: 1.0 / q, 0.0) == 0.0


def test_log_tail_slow_decay_raises_instead_of_truncating():
    # q^{-0.99} q = exp(-0.01 t) still contributes where exp(-t) underflows
    with pytest.raises(ConvergenceError):
        integrate_log_tail(lambda q: q ** -0.99, 1.0)


def test_log_tail_overflow_raises_convergence_error():
    with pytest.raises(ConvergenceError):
        integrate_log_tail(lambda q: (1.0 / q) ** 2, 0.5)
