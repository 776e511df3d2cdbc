from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from codedit.errors import ConfigurationError
from codedit.schedule import forward_marginal_sample, make_linear_schedule


def test_two_step_half_betas():
    s = make_linear_schedule(2, 0.5, 0.5)
    np.testing.assert_array_equal(s.alpha_bars, [0.5, 0.25])


def test_default_first_alpha_bar(schedule):
    assert schedule.alpha_bars[0] == pytest.approx(0.9999, abs=1e-15)


def test_last_alpha_bar_matches_exact_product(schedule):
    # betas from linspace are binary floats; multiply their exact rational values
    prod = Fraction(1)
    for b in schedule.betas:
        prod *= 1 - Fraction(float(b))
    assert schedule.alpha_bars[-1] == pytest.approx(float(prod), rel=1e-12)


def test_monotone_and_ranges(schedule):
    ab = schedule.alpha_bars
    assert np.all(np.diff(ab) < 0)
    assert np.all((ab > 0) & (ab <= 1))
    assert np.all((schedule.betas > 0) & (schedule.betas < 1))


def test_sigma_definition(schedule):
    for t in (0, 10, 500, 999):
        assert schedule.sigma(t) == np.sqrt(1.0 - schedule.alpha_bars[t])


@pytest.mark.parametrize("T,bs,be", [(1, 1e-4, 0.02), (10, 0.0, 0.02), (10, 0.03, 0.02), (10, 1e-4, 1.0)])
def test_invalid_schedules(T, bs, be):
    with pytest.raises(ConfigurationError):
        make_linear_schedule(T, bs, be)


def test_arrays_are_read_only(schedule):
    with pytest.raises(ValueError):
        schedule.betas[0] = 0.5


@pytest.mark.parametrize("t", [-1, 1000, 2.5])
def test_timestep_out_of_range(schedule, t):
    with pytest.raises(ConfigurationError):
        forward_marginal_sample(schedule, np.zeros(3), t, 0)


def test_forward_marginal_seed_determinism(schedule):
    a = forward_marginal_sample(schedule, np.ones(5), 300, 7)
    b = forward_marginal_sample(schedule, np.ones(5), 300, 7)
    np.testing.assert_array_equal(a, b)


def test_marginal_zero_input_moments(schedule):
    t = 400
    x = forward_marginal_sample(schedule, np.zeros((20000, 2)), t, 1)
    var = 1 - schedule.alpha_bars[t]
    n = x.size
    assert abs(x.mean()) < 4 * np.sqrt(var / n)
    assert abs(x.var() - var) < 4 * var * np.sqrt(2 / n)


def test_marginal_mean_at_quarter_signal():
    # a schedule whose alpha_bar hits 0.25 exactly at t=1
    s = make_linear_schedule(2, 0.5, 0.5)
    x = forward_marginal_sample(s, np.ones((100000, 1)), 1, 3)
    se = np.sqrt(0.75 / x.size)
    assert abs(x.mean() - 0.5) < 3 * se


@given(st.integers(0, 999), st.integers(0, 2**31 - 1))
def test_marginal_consistency_property(t, seed):
    s = make_linear_schedule()
    x0 = np.linspace(-1, 1, 7)
    draws = forward_marginal_sample(s, np.broadcast_to(x0, (10000, 7)), t, seed)
    ab = s.alpha_bars[t]
    se_mean = np.sqrt((1 - ab) / 10000)
    assert np.all(np.abs(draws.mean(0) - np.sqrt(ab) * x0) < 4.5 * se_mean)
