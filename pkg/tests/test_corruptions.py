import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from codedit.corruptions import KINDS, CorruptionSpec, corrupt, gaussian_blur_kernel, total_variation
from codedit.errors import ConfigurationError

SHAPE = (16, 16)


def _img(seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, 256)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_severity_is_identity(kind):
    x = _img()
    np.testing.assert_array_equal(corrupt(x, CorruptionSpec(kind, 0.0, 4), SHAPE), x)


@pytest.mark.parametrize("kind", KINDS)
def test_seed_determinism(kind):
    sev = 0.4 if kind != "gaussian_blur" else 1.2
    x = np.stack([_img(1), _img(2)])
    a = corrupt(x, CorruptionSpec(kind, sev, 9), SHAPE)
    np.testing.assert_array_equal(a, corrupt(x, CorruptionSpec(kind, sev, 9), SHAPE))
    if kind in ("gaussian_noise", "mask_random_pixels", "mask_vlines"):
        assert not np.array_equal(a, corrupt(x, CorruptionSpec(kind, sev, 10), SHAPE))


def test_contrast_scales_toward_zero():
    out = corrupt(np.ones(256), CorruptionSpec("contrast", 0.7), SHAPE)
    np.testing.assert_allclose(out, 0.3)


def test_fog_blends_to_white():
    x = _img()
    np.testing.assert_allclose(corrupt(x, CorruptionSpec("fog_like_additive", 0.25), SHAPE), 0.75 * x + 0.25)
    np.testing.assert_array_equal(corrupt(x, CorruptionSpec("fog_like_additive", 1.0), SHAPE), 1.0)


def test_noise_is_not_clamped():
    out = corrupt(np.ones(256), CorruptionSpec("gaussian_noise", 1.0, 0), SHAPE)
    assert out.max() > 1.0


@pytest.mark.parametrize("kind", ["contrast", "mask_random_pixels", "mask_vlines", "gaussian_blur", "fog_like_additive"])
def test_range_preserving_kinds_stay_in_range(kind):
    out = corrupt(_img(), CorruptionSpec(kind, 0.9, 1), SHAPE)
    assert out.min() >= -1 and out.max() <= 1


def test_random_pixel_mask_count_and_replay():
    x = np.full(256, 5.0)  # out-of-range marker survives only where untouched
    spec = CorruptionSpec("mask_random_pixels", 0.5, 3)
    out = corrupt(x[None], spec, SHAPE)[0]
    changed = np.flatnonzero(out != 1.0)  # untouched 5.0 is clamped to 1.0
    assert changed.size == math.floor(0.5 * 256)
    rng = np.random.default_rng(3)
    idx = rng.choice(256, size=128, replace=False)
    vals = rng.uniform(-1, 1, size=128)
    np.testing.assert_array_equal(np.sort(changed), np.sort(idx))
    np.testing.assert_array_equal(out[idx], vals)


def test_vline_mask_replaces_whole_columns():
    x = _img().reshape(1, -1)
    out = corrupt(x, CorruptionSpec("mask_vlines", 0.25, 2), SHAPE).reshape(16, 16)
    diff_cols = np.flatnonzero(np.any(out != x.reshape(16, 16), axis=0))
    assert diff_cols.size == 4
    for c in diff_cols:
        assert np.all(out[:, c] == out[0, c])


def test_blur_kernel():
    k = gaussian_blur_kernel(1.3)
    assert abs(k.sum() - 1) < 1e-12
    assert k.shape == (2 * math.ceil(3 * 1.3) + 1,) * 2
    np.testing.assert_allclose(k, k.T)
    with pytest.raises(ConfigurationError):
        gaussian_blur_kernel(0.0)


def test_blur_preserves_constants_and_reduces_tv():
    const = np.full(256, 0.37)
    np.testing.assert_allclose(corrupt(const, CorruptionSpec("gaussian_blur", 1.5), SHAPE), const, atol=1e-14)
    i, j = np.mgrid[0:16, 0:16]
    checker = np.where((i + j) % 2 == 0, 0.8, -0.8)
    blurred = corrupt(checker.ravel(), CorruptionSpec("gaussian_blur", 1.0), SHAPE).reshape(SHAPE)
    tv_direct = sum(abs(checker[a, b] - checker[a + 1, b]) for a in range(15) for b in range(16))
    tv_direct += sum(abs(checker[a, b] - checker[a, b + 1]) for a in range(16) for b in range(15))
    assert total_variation(checker) == pytest.approx(tv_direct)
    assert total_variation(blurred) < total_variation(checker)


def test_spec_validation_and_parsing():
    with pytest.raises(ConfigurationError):
        CorruptionSpec("sharpen", 0.1)
    with pytest.raises(ConfigurationError):
        CorruptionSpec("contrast", 1.5)
    with pytest.raises(ConfigurationError):
        CorruptionSpec("gaussian_noise", -0.1)
    with pytest.raises(ConfigurationError):
        CorruptionSpec.parse("contrast")
    with pytest.raises(ConfigurationError):
        CorruptionSpec.parse("contrast:high:1")
    spec = CorruptionSpec.parse("gaussian_blur:1.5:7")
    assert spec == CorruptionSpec("gaussian_blur", 1.5, 7)
    assert CorruptionSpec.parse(str(spec)) == spec
    with pytest.raises(ConfigurationError):
        corrupt(np.zeros(256), CorruptionSpec("gaussian_blur", 1.0))


@given(st.sampled_from(KINDS), st.floats(0, 1), st.integers(0, 1000))
def test_corruption_is_pure(kind, sev, seed):
    x = _img(seed)
    before = x.copy()
    spec = CorruptionSpec(kind, sev, seed)
    a = corrupt(x, spec, SHAPE)
    np.testing.assert_array_equal(x, before)
    np.testing.assert_array_equal(a, corrupt(x, spec, SHAPE))
    assert a.shape == x.shape
