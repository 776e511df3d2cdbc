"""Confidence-based clipping of latents during encoding.

For data in [-1, 1], the forward marginal at signal level ``a`` puts at least
``Phi(eta) - Phi(-eta)`` of its mass inside ``[-(sqrt(a) + eta sqrt(1-a)), +(...)]``.
Clipping encoded latents to that interval removes what the data could not
plausibly have produced, without looking at the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .ode import LatentState, TimestepGrid, integrate
from .score import ScoreModel


@dataclass(frozen=True)
class CbcConfig:
    eta: float = 1.7
    enabled: bool = True

    def __post_init__(self):
        if not self.eta >= 0:
            raise ConfigurationError(f"eta must be non-negative, got {self.eta!r}")


def cbc_interval(alpha_bar_t: float, eta: float) -> tuple[float, float]:
    if not 0 <= alpha_bar_t <= 1:
        raise ConfigurationError(f"alpha_bar {alpha_bar_t!r} outside [0, 1]")
    if not eta >= 0:
        raise ConfigurationError(f"eta must be non-negative, got {eta!r}")
    hi = math.sqrt(alpha_bar_t) + eta * math.sqrt(1.0 - alpha_bar_t)
    return -hi, hi


def normal_coverage(eta: float) -> float:
    """Phi(eta) - Phi(-eta)."""
    return math.erf(eta / math.sqrt(2.0))


def clip_to_interval(x, lo: float, hi: float) -> np.ndarray:
    if lo > hi:
        raise ConfigurationError(f"empty interval [{lo}, {hi}]")
    return np.clip(np.asarray(x, dtype=np.float64), lo, hi)


def encode_with_cbc(model: ScoreModel, x0, grid: TimestepGrid, depth_index: int,
                    cbc: CbcConfig, trajectory: list | None = None) -> LatentState:
    """Encode to ``depth_index``, clipping the input and every intermediate latent.

    Each state is clipped to the interval of its own timestep.  With
    ``cbc.enabled`` false this is exactly :func:`codedit.ode.encode`.
    """
    grid.check_index(depth_index)
    x = np.asarray(x0, dtype=np.float64)
    clip = None
    if cbc.enabled:
        sched = model.schedule

        def clip(v, t):
            return clip_to_interval(v, *cbc_interval(sched.alpha_bar(t), cbc.eta))

        x = clip(x, int(grid.steps[0]))
    if trajectory is not None:
        trajectory.append(LatentState(0, x))
    x = integrate(model, x, grid, 0, depth_index, clip=clip, trajectory=trajectory)
    return LatentState(int(grid.steps[depth_index]), x)
