"""Fidelity and realism measurements, best-of-k selection and trade-off records."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.signal import correlate2d

from .errors import ConfigurationError
from .score import GmmPrior, gmm_log_density

PSNR_CAP = 99.0
DATA_RANGE = 2.0


def psnr(a, b, data_range: float = DATA_RANGE):
    """Peak signal-to-noise ratio over the last axis, in dB.

    Exact matches have infinite PSNR; they are reported as ``PSNR_CAP``
    (see :func:`psnr_exact` for the flag).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"shape mismatch {a.shape} vs {b.shape}")
    if not data_range > 0:
        raise ConfigurationError("data_range must be positive")
    mse = np.mean((a - b) ** 2, axis=-1)
    with np.errstate(divide="ignore"):
        val = 10.0 * np.log10(data_range**2 / mse)
    val = np.where(mse == 0, PSNR_CAP, val)
    return float(val) if val.ndim == 0 else val


def psnr_exact(a, b):
    """True where ``a`` and ``b`` agree exactly (PSNR capped)."""
    res = np.all(np.asarray(a) == np.asarray(b), axis=-1)
    return bool(res) if np.ndim(res) == 0 else res


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, data_range: float = DATA_RANGE, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over valid positions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ConfigurationError("ssim needs two images of equal 2D shape")
    if min(a.shape) < 11:
        raise ConfigurationError(f"image {a.shape} smaller than the 11x11 window")
    w = _gaussian_window()

    def filt(img):
        return correlate2d(img, w, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    c1, c2 = (k1 * data_range) ** 2, (k2 * data_range) ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def loglik_realism(prior: GmmPrior, x) -> np.ndarray:
    """Exact log p_0(x) under the data prior; the realism proxy."""
    return gmm_log_density(prior, x)


def l2(a, b) -> np.ndarray:
    return np.linalg.norm(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64), axis=-1)


def best_of_k(candidates, reference, k: int) -> list:
    """Top ``k`` candidates by PSNR to ``reference``; ties keep the lower index first."""
    if len(candidates) == 0:
        raise ConfigurationError("no candidates")
    if not 1 <= k <= len(candidates):
        raise ConfigurationError(f"k={k} outside [1, {len(candidates)}]")
    order = best_of_k_indices(candidates, reference, k)
    return [candidates[i] for i in order]


def best_of_k_indices(candidates, reference, k: int) -> list[int]:
    scores = [psnr(np.ravel(c), np.ravel(reference)) for c in candidates]
    order = sorted(range(len(candidates)), key=lambda i: (-scores[i], i))
    return order[:k]


METHODS = ("code", "code_no_cbc", "ode_edit", "sdedit", "ddim_roundtrip", "ddim_cbc")


@dataclass
class TradeoffRecord:
    input_id: int
    corruption: str
    method: str
    hyperparams: str
    sample: int
    kept: int
    psnr_to_input: float
    psnr_exact: int
    ssim_to_input: float
    l2_to_input: float
    loglik: float
    l2_to_source: float

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")


RECORD_HEADER = [f.name for f in fields(TradeoffRecord)]


def make_records(prior: GmmPrior, outputs, inputs, sources, *, corruption: str, method: str,
                 hyperparams: str, sample: int, input_ids=None) -> list[TradeoffRecord]:
    """Evaluate a batch of outputs against their (corrupted) inputs and clean sources.

    SSIM is NaN for non-image priors.
    """
    outputs = np.atleast_2d(outputs)
    inputs = np.atleast_2d(inputs)
    sources = np.atleast_2d(sources)
    ids = range(len(outputs)) if input_ids is None else input_ids
    p = np.atleast_1d(psnr(outputs, inputs))
    exact = np.atleast_1d(psnr_exact(outputs, inputs))
    d_in = l2(outputs, inputs)
    d_src = l2(outputs, sources)
    ll = loglik_realism(prior, outputs)
    shape = prior.image_shape
    records = []
    for i, iid in enumerate(ids):
        if shape is not None and min(shape) >= 11:
            s = ssim(outputs[i].reshape(shape), inputs[i].reshape(shape))
        else:
            s = math.nan
        records.append(TradeoffRecord(
            input_id=int(iid), corruption=corruption, method=method, hyperparams=hyperparams,
            sample=int(sample), kept=1, psnr_to_input=float(p[i]), psnr_exact=int(exact[i]),
            ssim_to_input=s, l2_to_input=float(d_in[i]), loglik=float(ll[i]),
            l2_to_source=float(d_src[i]),
        ))
    return records


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for r in records:
            d = asdict(r)
            writer.writerow([_fmt(d[name]) for name in RECORD_HEADER])


def read_records_csv(path) -> list[TradeoffRecord]:
    types = {f.name: f.type for f in fields(TradeoffRecord)}
    casts = {"int": int, "float": float, "str": str}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TradeoffRecord(**{k: casts[types[k]](v) for k, v in row.items()}))
    return out
