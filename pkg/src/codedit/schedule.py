"""Discrete variance-preserving noise schedule and the forward marginal q(x_t | x_0)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class Schedule:
    """VP schedule indexed by zero-based integer timesteps.

    ``alpha_bars[t]`` is the cumulative product of ``1 - betas[s]`` for ``s <= t``,
    so the marginal at timestep ``t`` is ``N(sqrt(alpha_bars[t]) x0, (1 - alpha_bars[t]) I)``.
    """

    betas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        alpha_bars = np.asarray(self.alpha_bars, dtype=np.float64)
        if betas.ndim != 1 or betas.shape != alpha_bars.shape:
            raise ConfigurationError("betas and alpha_bars must be 1D arrays of equal length")
        if np.any((betas <= 0) | (betas >= 1)):
            raise ConfigurationError("betas must lie in (0, 1)")
        betas.setflags(write=False)
        alpha_bars.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def T(self) -> int:
        return len(self.betas)

    def check_timestep(self, t: int) -> int:
        if int(t) != t or not 0 <= t < self.T:
            raise ConfigurationError(f"timestep {t!r} outside [0, {self.T})")
        return int(t)

    def alpha_bar(self, t: int) -> float:
        return float(self.alpha_bars[self.check_timestep(t)])

    def sigma(self, t: int) -> float:
        """Noise standard deviation sqrt(1 - alpha_bar) at timestep ``t``."""
        return float(np.sqrt(1.0 - self.alpha_bar(t)))


def make_linear_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> Schedule:
    if int(T) != T or T < 2:
        raise ConfigurationError(f"T must be an integer >= 2, got {T!r}")
    if not 0 < beta_start <= beta_end < 1:
        raise ConfigurationError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start!r}, {beta_end!r}"
        )
    betas = np.linspace(beta_start, beta_end, int(T), dtype=np.float64)
    return Schedule(betas=betas, alpha_bars=np.cumprod(1.0 - betas))


def forward_marginal_sample(schedule: Schedule, x0, t: int, rng_seed) -> np.ndarray:
    """Draw ``x_t ~ q(x_t | x_0)``; accepts any array shape, including batches.

    ``rng_seed`` may be an integer or an existing ``numpy.random.Generator``.
    """
    ab = schedule.alpha_bar(t)
    x0 = np.asarray(x0, dtype=np.float64)
    rng = np.random.default_rng(rng_seed)
    z = rng.standard_normal(x0.shape)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * z
