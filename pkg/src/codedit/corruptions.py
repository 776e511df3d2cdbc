"""Seedable corruption operators.

Every kind is the identity at severity 0.  Images are flat vectors plus an
``image_shape``; leading batch axes are allowed and each batch element gets its
own draws from the single seeded stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError

KINDS = (
    "gaussian_noise",
    "contrast",
    "mask_random_pixels",
    "mask_vlines",
    "gaussian_blur",
    "fog_like_additive",
)
_UNIT_SEVERITY = {"contrast", "mask_random_pixels", "mask_vlines", "fog_like_additive"}
_NEEDS_IMAGE = {"mask_vlines", "gaussian_blur"}


@dataclass(frozen=True)
class CorruptionSpec:
    """``severity`` means, per kind:

    gaussian_noise     noise standard deviation (>= 0)
    contrast           contrast loss in [0, 1]: x -> (1 - severity) x
    mask_random_pixels fraction of coordinates replaced by uniform [-1, 1] values
    mask_vlines        fraction of image columns replaced by a random gray level
    gaussian_blur      blur radius (kernel standard deviation, pixels)
    fog_like_additive  blend weight toward white: x -> (1 - s) x + s
    """

    kind: str
    severity: float
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown corruption kind {self.kind!r}")
        if not (self.severity >= 0 and math.isfinite(self.severity)):
            raise ConfigurationError(f"severity must be finite and >= 0, got {self.severity!r}")
        if self.kind in _UNIT_SEVERITY and self.severity > 1:
            raise ConfigurationError(f"{self.kind} severity must lie in [0, 1]")

    @classmethod
    def parse(cls, text: str) -> "CorruptionSpec":
        """Parse ``kind:severity[:seed]``."""
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigurationError(f"corruption spec {text!r} is not kind:severity:seed")
        try:
            severity = float(parts[1])
            seed = int(parts[2]) if len(parts) == 3 else 0
        except ValueError:
            raise ConfigurationError(f"corruption spec {text!r} has non-numeric fields") from None
        return cls(parts[0], severity, seed)

    def __str__(self):
        return f"{self.kind}:{self.severity!r}:{self.rng_seed}"


def gaussian_blur_kernel(radius: float) -> np.ndarray:
    """Normalized 2D Gaussian truncated at three radii."""
    if not radius > 0:
        raise ConfigurationError(f"blur radius must be positive, got {radius!r}")
    half = max(1, int(math.ceil(3 * radius)))
    r = np.arange(-half, half + 1, dtype=np.float64)
    with np.errstate(over="ignore"):  # tiny radii collapse to a delta
        g = np.exp(-0.5 * (r / radius) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def _as_images(x: np.ndarray, image_shape):
    if image_shape is None:
        raise ConfigurationError("this corruption needs an image_shape")
    h, w = image_shape
    if x.shape[-1] != h * w:
        raise ConfigurationError(f"dim {x.shape[-1]} does not match image shape {image_shape}")
    return x.reshape(-1, h, w)


def corrupt(x, spec: CorruptionSpec, image_shape=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    s = spec.severity
    if s == 0:
        return x.copy()
    rng = np.random.default_rng(spec.rng_seed)
    kind = spec.kind
    if kind in _NEEDS_IMAGE:
        imgs = _as_images(x, image_shape)
    if kind == "gaussian_noise":
        return x + s * rng.standard_normal(x.shape)
    if kind == "contrast":
        out = (1.0 - s) * x
    elif kind == "fog_like_additive":
        out = (1.0 - s) * x + s
    elif kind == "mask_random_pixels":
        flat = x.reshape(-1, x.shape[-1]).copy()
        n = flat.shape[1]
        m = int(math.floor(s * n))
        for row in flat:
            idx = rng.choice(n, size=m, replace=False)
            row[idx] = rng.uniform(-1.0, 1.0, size=m)
        out = flat.reshape(x.shape)
    elif kind == "mask_vlines":
        imgs = imgs.copy()
        w = imgs.shape[2]
        m = int(math.floor(s * w))
        for img in imgs:
            cols = rng.choice(w, size=m, replace=False)
            img[:, cols] = rng.uniform(-1.0, 1.0, size=m)
        out = imgs.reshape(x.shape)
    else:  # gaussian_blur
        k = gaussian_blur_kernel(s)
        out = np.stack([ndimage.convolve(img, k, mode="reflect") for img in imgs]).reshape(x.shape)
    return np.clip(out, -1.0, 1.0)


def total_variation(img) -> float:
    img = np.asarray(img, dtype=np.float64)
    return float(np.abs(np.diff(img, axis=0)).sum() + np.abs(np.diff(img, axis=1)).sum())
