"""Annealed Langevin dynamics in a fixed latent space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .ode import LatentState
from .score import ScoreModel


@dataclass(frozen=True)
class LangevinConfig:
    """Hyperparameters of one annealed run.

    ``score_sign=+1`` ascends log-density (the Langevin sampler); ``-1`` reproduces
    the descent form ``x - eps * s`` and is kept only for ablations.
    """

    n_steps: int = 200
    step_size: float = 1e-3
    anneal_steps: int = 4
    anneal_coef: float = 0.8
    rng_seed: int = 0
    score_sign: int = 1

    def __post_init__(self):
        problems = []
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            problems.append(f"n_steps={self.n_steps!r}")
        if not self.step_size >= 0:
            problems.append(f"step_size={self.step_size!r}")
        if int(self.anneal_steps) != self.anneal_steps or self.anneal_steps < 1:
            problems.append(f"anneal_steps={self.anneal_steps!r}")
        if not 0 < self.anneal_coef <= 1:
            problems.append(f"anneal_coef={self.anneal_coef!r}")
        if self.score_sign not in (1, -1):
            problems.append(f"score_sign={self.score_sign!r}")
        if problems:
            raise ConfigurationError("invalid Langevin config: " + ", ".join(problems))


def anneal_schedule(step_size: float, anneal_coef: float, K: int) -> list[float]:
    if K < 1:
        raise ConfigurationError("K must be >= 1")
    steps = [float(step_size)]
    for _ in range(K - 1):
        steps.append(steps[-1] * anneal_coef)
    return steps


def langevin_step(model: ScoreModel, state: LatentState, step_size: float, noise,
                  score_sign: int = 1) -> LatentState:
    x = state.value
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != x.shape:
        raise ConfigurationError(f"noise shape {noise.shape} != state shape {x.shape}")
    if step_size < 0:
        raise ConfigurationError("step_size must be non-negative")
    s = model.score(x, state.t)
    return LatentState(state.t, x + score_sign * step_size * s + np.sqrt(2.0 * step_size) * noise)


def langevin_run(model: ScoreModel, state: LatentState, cfg: LangevinConfig,
                 rng: np.random.Generator | None = None) -> LatentState:
    """K annealing rounds of N steps; round k uses ``step_size * anneal_coef**k``.

    Noise comes from ``rng`` if given, else from a generator seeded with
    ``cfg.rng_seed``; one standard-normal draw of the state's shape per step.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    for eps in anneal_schedule(cfg.step_size, cfg.anneal_coef, cfg.anneal_steps):
        for _ in range(cfg.n_steps):
            state = langevin_step(model, state, eps, rng.standard_normal(state.value.shape),
                                  cfg.score_sign)
    return state
