from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ndtr

from codedit.cbc import CbcConfig, cbc_interval, clip_to_interval, encode_with_cbc, normal_coverage
from codedit.errors import ConfigurationError
from codedit.metrics import loglik_realism
from codedit.ode import decode, encode


def test_interval_endpoints():
    assert cbc_interval(1.0, 3.0) == (-1.0, 1.0)
    assert cbc_interval(0.0, 2.0) == (-2.0, 2.0)


def test_interval_mid_value_high_precision():
    getcontext().prec = 40
    half = Decimal("0.5").sqrt()
    expected = float(half + Decimal("1.7") * half)
    lo, hi = cbc_interval(0.5, 1.7)
    assert hi == pytest.approx(expected, abs=1e-15) and lo == -hi
    assert round(hi, 5) == 1.90919


@given(st.floats(0, 1), st.floats(0, 10), st.floats(1e-6, 5))
def test_interval_symmetric_and_monotone_in_eta(ab, eta, d):
    lo, hi = cbc_interval(ab, eta)
    assert lo == -hi
    if ab < 1:
        assert cbc_interval(ab, eta + d)[1] > hi


def test_interval_preconditions():
    with pytest.raises(ConfigurationError):
        cbc_interval(1.2, 1.0)
    with pytest.raises(ConfigurationError):
        cbc_interval(0.5, -1.0)
    with pytest.raises(ConfigurationError):
        CbcConfig(eta=-0.1)


def test_normal_coverage_values():
    assert normal_coverage(0) == 0
    assert normal_coverage(2) >= 0.95
    assert normal_coverage(2) == pytest.approx(0.9544997361036416, abs=1e-12)
    assert normal_coverage(3) >= 0.99
    for eta in (0.3, 1.0, 1.7, 4.0):
        assert normal_coverage(eta) == pytest.approx(ndtr(eta) - ndtr(-eta), abs=1e-12)


def test_clip():
    x = np.array([0.2, -0.5])
    np.testing.assert_array_equal(clip_to_interval(x, -1, 1), x)
    np.testing.assert_array_equal(clip_to_interval(np.array([3.0, -3.0]), -1, 1), [1.0, -1.0])
    with pytest.raises(ConfigurationError):
        clip_to_interval(x, 1, -1)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=10), st.floats(0, 5))
def test_clip_idempotent(vals, hi):
    once = clip_to_interval(np.array(vals), -hi, hi)
    np.testing.assert_array_equal(clip_to_interval(once, -hi, hi), once)


def test_disabled_is_plain_encode(image_model, image_prior, grid):
    x = image_prior.sample(4, 0) * 1.5
    a = encode_with_cbc(image_model, x, grid, 50, CbcConfig(1.7, enabled=False))
    b = encode(image_model, x, grid, 50)
    np.testing.assert_array_equal(a.value, b.value)
    assert a.t == b.t


def test_huge_eta_matches_encode_in_range(image_model, image_prior, grid):
    x = np.clip(image_prior.sample(4, 1), -0.999, 0.999)
    a = encode_with_cbc(image_model, x, grid, 50, CbcConfig(100.0))
    b = encode(image_model, x, grid, 50)
    np.testing.assert_array_equal(a.value, b.value)


def test_every_encoded_state_inside_its_interval(image_model, image_prior, grid, schedule):
    x = image_prior.sample(3, 2) + 2.0 * np.random.default_rng(0).normal(size=(3, 256))
    traj = []
    encode_with_cbc(image_model, x, grid, 80, CbcConfig(1.7), trajectory=traj)
    for state in traj:
        lo, hi = cbc_interval(schedule.alpha_bar(state.t), 1.7)
        assert state.value.min() >= lo and state.value.max() <= hi


def test_clipping_helps_with_impulse_patches(image_model, image_prior, grid):
    rng = np.random.default_rng(4)
    x = image_prior.sample(60, 1).reshape(-1, 16, 16)
    for img in x:
        i, j = rng.integers(0, 12, 2)
        img[i:i + 4, j:j + 4] = rng.choice([-1.0, 1.0])
    x = x.reshape(60, -1)
    clipped = decode(image_model, encode_with_cbc(image_model, x, grid, 40, CbcConfig(1.7)), grid)
    plain = decode(image_model, encode(image_model, x, grid, 40), grid)
    wins = loglik_realism(image_prior, clipped) > loglik_realism(image_prior, plain)
    assert wins.mean() >= 0.8
