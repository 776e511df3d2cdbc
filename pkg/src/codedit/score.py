"""Score models: the DDPM noise/score correspondence and exact Gaussian-mixture scores.

A Gaussian mixture with diagonal covariances stays a Gaussian mixture under the
VP forward process, so its time-t score is available in closed form.  This is
what lets every other module be checked against an exact generative prior.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import ConfigurationError, DomainError
from .schedule import Schedule

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GmmPrior:
    """Weighted mixture of diagonal Gaussians over flat vectors.

    ``image_shape`` is only a descriptor: samples are always handled as flat
    vectors of length ``dim``; image-aware code reshapes with it.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    image_shape: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        var = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        if w.ndim != 1 or mu.shape[0] != w.size or var.shape != mu.shape:
            raise ConfigurationError("weights (K,), means (K, d) and variances (K, d) disagree")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError("mixture weights must be positive and sum to 1")
        if np.any(var <= 0) or not np.all(np.isfinite(var)):
            raise ConfigurationError("covariance diagonals must be strictly positive")
        if self.image_shape is not None:
            shape = tuple(int(s) for s in self.image_shape)
            if len(shape) != 2 or shape[0] * shape[1] != mu.shape[1]:
                raise ConfigurationError(f"image_shape {shape} does not match dim {mu.shape[1]}")
            object.__setattr__(self, "image_shape", shape)
        for arr in (w, mu, var):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.size

    def sample(self, n: int, rng) -> np.ndarray:
        """Draw ``n`` exact samples, shape ``(n, dim)``."""
        rng = np.random.default_rng(rng)
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.sqrt(self.variances[comp]) * z


def _check_dim(prior: GmmPrior, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (prior.dim,):
        raise ConfigurationError(f"sample dim {x.shape[-1:]} does not match prior dim {prior.dim}")
    return x


def _component_terms(prior: GmmPrior, alpha_bar: float, x: np.ndarray):
    """Per-component log-densities and scaled residuals of the time-marginal."""
    mean = np.sqrt(alpha_bar) * prior.means
    var = alpha_bar * prior.variances + (1.0 - alpha_bar)
    diff = x[..., None, :] - mean  # (..., K, d)
    logn = -0.5 * (
        np.sum(diff * diff / var, axis=-1) + np.sum(np.log(var), axis=-1) + prior.dim * LOG_2PI
    )
    return logn + np.log(prior.weights), diff / var


def gmm_log_density(prior: GmmPrior, x, alpha_bar: float = 1.0) -> np.ndarray:
    """log p(x) of the mixture pushed through the VP marginal with signal level ``alpha_bar``."""
    x = _check_dim(prior, x)
    logw, _ = _component_terms(prior, alpha_bar, x)
    return logsumexp(logw, axis=-1)


def gmm_score(prior: GmmPrior, x, alpha_bar: float = 1.0) -> np.ndarray:
    x = _check_dim(prior, x)
    logw, scaled = _component_terms(prior, alpha_bar, x)
    resp = softmax(logw, axis=-1)
    return -np.einsum("...k,...kd->...d", resp, scaled)


def gmm_log_density_at_time(prior: GmmPrior, schedule: Schedule, x, t: int) -> np.ndarray:
    return gmm_log_density(prior, x, schedule.alpha_bar(t))


def gmm_score_at_time(prior: GmmPrior, schedule: Schedule, x, t: int) -> np.ndarray:
    """Exact grad_x log p_t(x) for the mixture prior at timestep ``t``."""
    return gmm_score(prior, x, schedule.alpha_bar(t))


def score_to_eps(score_value, sigma_t: float) -> np.ndarray:
    if not sigma_t > 0:
        raise DomainError(f"noise level must be positive, got {sigma_t!r}")
    return -sigma_t * np.asarray(score_value, dtype=np.float64)


def eps_to_score(eps_value, sigma_t: float) -> np.ndarray:
    if not sigma_t > 0:
        raise DomainError(f"noise level must be positive, got {sigma_t!r}")
    return -np.asarray(eps_value, dtype=np.float64) / sigma_t


class ScoreModel(ABC):
    """Anything that predicts the time-t score; noise prediction is derived from it.

    Subclasses implement ``score``; ``eps`` follows from ``eps = -sigma_t * score``.
    """

    def __init__(self, schedule: Schedule):
        self.schedule = schedule

    @abstractmethod
    def score(self, x, t: int) -> np.ndarray: ...

    def eps(self, x, t: int) -> np.ndarray:
        return score_to_eps(self.score(x, t), self.schedule.sigma(t))


class GmmScoreModel(ScoreModel):
    """Exact score of a :class:`GmmPrior` under the schedule's forward process."""

    def __init__(self, prior: GmmPrior, schedule: Schedule):
        super().__init__(schedule)
        self.prior = prior

    def score(self, x, t):
        return gmm_score_at_time(self.prior, self.schedule, x, t)

    def log_density(self, x, t):
        return gmm_log_density_at_time(self.prior, self.schedule, x, t)


class CountingModel(ScoreModel):
    """Wraps a model and counts score evaluations (one per call, batches count once)."""

    def __init__(self, model: ScoreModel):
        super().__init__(model.schedule)
        self.model = model
        self.calls = 0

    def score(self, x, t):
        self.calls += 1
        return self.model.score(x, t)


def template_image_prior(templates, jitter_std: float) -> GmmPrior:
    """Equal-weight mixture centred on template images with isotropic jitter."""
    if len(templates) == 0:
        raise ConfigurationError("need at least one template")
    if not jitter_std > 0:
        raise ConfigurationError("jitter_std must be positive")
    arrays = [np.asarray(t, dtype=np.float64) for t in templates]
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise ConfigurationError("templates must share one shape")
    means = np.stack([a.reshape(-1) for a in arrays])
    if np.any(np.abs(means) > 1):
        raise ConfigurationError("template values must lie in [-1, 1]")
    k = len(arrays)
    return GmmPrior(
        weights=np.full(k, 1.0 / k),
        means=means,
        variances=np.full(means.shape, jitter_std**2),
        image_shape=shape if len(shape) == 2 else None,
    )


def pattern_templates(size: int = 16, level: float = 0.8) -> list[np.ndarray]:
    """Four coarse two-level patterns: left half, top half, quadrant checker, centred disk."""
    i, j = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2
    masks = [
        j < size // 2,
        i < size // 2,
        (i < size // 2) == (j < size // 2),
        (i - c) ** 2 + (j - c) ** 2 <= (size / 3) ** 2,
    ]
    return [np.where(m, level, -level) for m in masks]


TEMPLATE_SETS = {"patterns16": pattern_templates}


def named_template_prior(name: str, jitter_std: float = 0.1) -> GmmPrior:
    try:
        factory = TEMPLATE_SETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown template set {name!r}") from None
    return template_image_prior(factory(), jitter_std)


def random_gmm(rng, dim: int = 2, n_components: int = 3, spread: float = 1.0) -> GmmPrior:
    """Random diagonal mixture, used for property tests and the 2D toy prior."""
    rng = np.random.default_rng(rng)
    weights = rng.dirichlet(np.full(n_components, 2.0))
    weights /= weights.sum()
    means = rng.uniform(-spread, spread, size=(n_components, dim))
    variances = rng.uniform(0.02, 0.3, size=(n_components, dim))
    return GmmPrior(weights, means, variances)


def toy_gmm_2d() -> GmmPrior:
    """Fixed three-component 2D mixture inside the unit square."""
    return GmmPrior(
        weights=np.array([0.4, 0.35, 0.25]),
        means=np.array([[-0.6, -0.5], [0.7, -0.4], [0.0, 0.75]]),
        variances=np.array([[0.0036, 0.0049], [0.0049, 0.0025], [0.0036, 0.0036]]),
    )


def format_prior(prior: GmmPrior) -> str:
    """Plain-text form: ``gmm dim K`` then ``weight | mean... | var...`` per component."""
    lines = [f"gmm {prior.dim} {prior.n_components}"]
    for w, mu, var in zip(prior.weights, prior.means, prior.variances):
        lines.append(
            " | ".join(
                [repr(float(w)), " ".join(map(repr, mu.tolist())), " ".join(map(repr, var.tolist()))]
            )
        )
    return "\n".join(lines) + "\n"


def parse_prior(text: str, image_shape=None) -> GmmPrior:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigurationError("empty prior file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "gmm":
        raise ConfigurationError(f"bad prior header {lines[0]!r}")
    dim, k = int(head[1]), int(head[2])
    if len(lines) != k + 1:
        raise ConfigurationError(f"expected {k} component lines, found {len(lines) - 1}")
    weights, means, variances = [], [], []
    for ln in lines[1:]:
        parts = ln.split("|")
        if len(parts) != 3:
            raise ConfigurationError(f"bad component line {ln!r}")
        weights.append(float(parts[0]))
        means.append([float(v) for v in parts[1].split()])
        variances.append([float(v) for v in parts[2].split()])
    if any(len(m) != dim for m in means) or any(len(v) != dim for v in variances):
        raise ConfigurationError("component length does not match header dim")
    if image_shape is None:
        side = int(round(np.sqrt(dim)))
        if side * side == dim and side >= 4:
            image_shape = (side, side)
    return GmmPrior(np.array(weights), np.array(means), np.array(variances), image_shape)


def save_prior(prior: GmmPrior, path) -> None:
    Path(path).write_text(format_prior(prior))


def load_prior(path, image_shape=None) -> GmmPrior:
    return parse_prior(Path(path).read_text(), image_shape)
