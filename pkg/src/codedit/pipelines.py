"""End-to-end editing procedures: ODE editing, CODE (simple and annealed multi-latent), SDEdit."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cbc import CbcConfig, encode_with_cbc
from .errors import ConfigurationError
from .langevin import LangevinConfig, langevin_run
from .ode import LatentState, TimestepGrid, decode, encode, make_grid
from .schedule import Schedule, make_linear_schedule
from .score import ScoreModel


@dataclass(frozen=True)
class EditConfig:
    """CODE hyperparameters.  ``latent_depths`` are grid positions, deepest first."""

    latent_depths: tuple[int, ...] = (40,)
    langevin: LangevinConfig = field(default_factory=LangevinConfig)
    cbc: CbcConfig = field(default_factory=CbcConfig)
    grid: TimestepGrid = field(default_factory=lambda: make_grid(make_linear_schedule()))
    samples_per_input: int = 1

    def __post_init__(self):
        depths = tuple(int(d) for d in np.atleast_1d(self.latent_depths))
        object.__setattr__(self, "latent_depths", depths)
        if not depths:
            raise ConfigurationError("latent_depths must be non-empty")
        if any(a <= b for a, b in zip(depths, depths[1:])):
            raise ConfigurationError(f"latent_depths must be strictly decreasing, got {depths}")
        bad = [d for d in depths if not 0 <= d < self.grid.count]
        if bad:
            raise ConfigurationError(f"latent depths {bad} outside grid [0, {self.grid.count})")
        if self.samples_per_input < 1:
            raise ConfigurationError("samples_per_input must be >= 1")


@dataclass(frozen=True)
class SdeditConfig:
    t0: int = 500
    n_denoise: int = 500
    repeats: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.t0 <= 0:
            raise ConfigurationError(f"t0 must be positive, got {self.t0}")
        if self.n_denoise < 1 or self.repeats < 1:
            raise ConfigurationError("n_denoise and repeats must be >= 1")


def ode_edit(model: ScoreModel, x0, depth: int, langevin_cfg: LangevinConfig,
             grid: TimestepGrid) -> np.ndarray:
    """Encode without clipping, run Langevin at ``depth``, decode."""
    latent = encode(model, x0, grid, depth)
    latent = langevin_run(model, latent, langevin_cfg)
    return decode(model, latent, grid)


def code_simple(model: ScoreModel, x0, cfg: EditConfig) -> np.ndarray:
    """Clipped encoding, one un-annealed Langevin round, decoding."""
    if len(cfg.latent_depths) != 1:
        raise ConfigurationError("code_simple takes exactly one latent depth")
    latent = encode_with_cbc(model, x0, cfg.grid, cfg.latent_depths[0], cfg.cbc)
    latent = langevin_run(model, latent, replace(cfg.langevin, anneal_steps=1))
    return decode(model, latent, cfg.grid)


def code_full(model: ScoreModel, x0, cfg: EditConfig) -> np.ndarray:
    """Annealed multi-latent CODE.

    Encode (clipped) to the deepest latent, then for each latent deepest-first:
    K annealed Langevin rounds there, followed by ODE decoding to the next
    shallower latent (finally to data space).  All Langevin noise comes from
    one generator seeded with ``cfg.langevin.rng_seed``.
    """
    grid = cfg.grid
    depths = cfg.latent_depths
    rng = np.random.default_rng(cfg.langevin.rng_seed)
    latent = encode_with_cbc(model, x0, grid, depths[0], cfg.cbc)
    for i, depth in enumerate(depths):
        latent = langevin_run(model, latent, cfg.langevin, rng=rng)
        target = depths[i + 1] if i + 1 < len(depths) else 0
        x = decode(model, latent, grid, to_index=target)
        latent = LatentState(int(grid.steps[target]), x)
    return latent.value


def _beta_at(schedule: Schedule, t: float) -> tuple[float, int]:
    idx = min(max(int(round(t)), 0), schedule.T - 1)
    return float(schedule.betas[idx]), idx


def sdedit(model: ScoreModel, guide, cfg: SdeditConfig, schedule: Schedule | None = None) -> np.ndarray:
    """SDEdit baseline on the VP-SDE, time measured in schedule timesteps.

    Perturb the guide to level ``t0`` and integrate the reverse SDE with
    ``n_denoise`` Euler-Maruyama steps of size ``t0 / n_denoise``.  With
    ``repeats > 1`` each round re-perturbs the previous round's output; the
    last result is returned.
    """
    schedule = schedule or model.schedule
    if cfg.t0 >= schedule.T:
        raise ConfigurationError(f"t0={cfg.t0} must be below T={schedule.T}")
    guide = np.asarray(guide, dtype=np.float64)
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.n_denoise
    dt = cfg.t0 / n
    alpha_t0 = 1.0
    for k in range(1, n + 1):
        alpha_t0 *= 1.0 - _beta_at(schedule, k * cfg.t0 / n)[0] * dt
    x = guide
    for _ in range(cfg.repeats):
        x = np.sqrt(alpha_t0) * x + np.sqrt(1.0 - alpha_t0) * rng.standard_normal(guide.shape)
        for k in range(n, 0, -1):
            beta, idx = _beta_at(schedule, cfg.t0 * k / n)
            bdt = beta * dt
            x = (x + bdt * model.score(x, idx)) / np.sqrt(1.0 - bdt) + np.sqrt(bdt) * rng.standard_normal(x.shape)
    return x
