"""Plain-text sample I/O: ASCII PGM images and whitespace-separated vectors."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigurationError

MAXVAL = 255


def to_pixels(x) -> np.ndarray:
    """Affine map [-1, 1] -> {0..255}; values outside the range are clipped first."""
    x = np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)
    return np.rint((x + 1.0) * (MAXVAL / 2.0)).astype(np.int64)


def from_pixels(p) -> np.ndarray:
    return np.asarray(p, dtype=np.float64) / MAXVAL * 2.0 - 1.0


def format_pgm(img) -> str:
    """Canonical P2 text: header lines, then one image row per line."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ConfigurationError(f"PGM needs a 2D image, got shape {img.shape}")
    px = to_pixels(img)
    h, w = px.shape
    rows = [" ".join(str(v) for v in row) for row in px]
    return f"P2\n{w} {h}\n{MAXVAL}\n" + "\n".join(rows) + "\n"


def parse_pgm(text: str) -> np.ndarray:
    tokens = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if len(tokens) < 4 or tokens[0] != "P2":
        raise ConfigurationError("not a plain P2 PGM file")
    try:
        w, h, maxval = (int(v) for v in tokens[1:4])
        pixels = np.array([int(v) for v in tokens[4:]], dtype=np.int64)
    except ValueError:
        raise ConfigurationError("PGM contains non-integer fields") from None
    if w < 1 or h < 1 or maxval != MAXVAL:
        raise ConfigurationError(f"unsupported PGM header {w}x{h} maxval {maxval}")
    if pixels.size != w * h:
        raise ConfigurationError(f"PGM declares {w * h} pixels, found {pixels.size}")
    if pixels.min() < 0 or pixels.max() > MAXVAL:
        raise ConfigurationError("PGM pixel outside [0, 255]")
    return from_pixels(pixels.reshape(h, w))


def save_image_pgm(x, path) -> None:
    Path(path).write_text(format_pgm(x))


def load_image_pgm(path) -> np.ndarray:
    return parse_pgm(Path(path).read_text())


def save_vectors(x, path) -> None:
    """One sample per line, values written with full precision."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Path(path).write_text("".join(" ".join(repr(float(v)) for v in row) + "\n" for row in x))


def load_vectors(path) -> np.ndarray:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise ConfigurationError(f"{path}: no samples")
    if len({len(r) for r in rows}) != 1:
        raise ConfigurationError(f"{path}: rows have different lengths")
    try:
        return np.array([[float(v) for v in r] for r in rows])
    except ValueError:
        raise ConfigurationError(f"{path}: non-numeric value") from None
