"""Deterministic DDIM integration of the probability-flow ODE.

The same update moves a sample up the timestep grid (encoding, i.e. inversion)
or down it (decoding).  Samples may carry leading batch axes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .schedule import Schedule
from .score import ScoreModel

DEFAULT_GRID_COUNT = 200


@dataclass(frozen=True)
class TimestepGrid:
    steps: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps)
        if steps.ndim != 1 or steps.size == 0:
            raise ConfigurationError("grid must be a non-empty 1D array")
        if not np.issubdtype(steps.dtype, np.integer):
            if np.any(steps != np.round(steps)):
                raise ConfigurationError("grid timesteps must be integers")
            steps = steps.astype(np.int64)
        if steps[0] != 0 or np.any(np.diff(steps) <= 0):
            raise ConfigurationError("grid must start at 0 and increase strictly")
        steps = steps.copy()
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)

    @property
    def count(self) -> int:
        return self.steps.size

    def check_index(self, index: int) -> int:
        if int(index) != index or not 0 <= index < self.count:
            raise ConfigurationError(f"grid position {index!r} outside [0, {self.count})")
        return int(index)

    def index_of(self, t: int) -> int:
        hits = np.flatnonzero(self.steps == t)
        if hits.size == 0:
            raise ConfigurationError(f"timestep {t} is not on the grid")
        return int(hits[0])


def uniform_grid(T: int, count: int = DEFAULT_GRID_COUNT) -> TimestepGrid:
    """``count`` evenly spaced timesteps ``0, T/count, ...`` strictly below ``T``."""
    if not 1 <= count <= T:
        raise ConfigurationError(f"grid count must lie in [1, {T}], got {count}")
    return TimestepGrid(np.arange(count, dtype=np.int64) * T // count)


def angle_grid(schedule: Schedule, count: int = DEFAULT_GRID_COUNT) -> TimestepGrid:
    """``count`` timesteps evenly spaced in ``arccos(sqrt(alpha_bar))``.

    A DDIM step rotates ``(sqrt(alpha_bar), sigma)`` by the angle between the two
    levels and its per-step inversion error grows with that angle squared, so
    equal angles spend the budget evenly.  Where the schedule is too coarse to
    resolve the spacing (near t=0) consecutive timesteps are used instead.
    """
    T = schedule.T
    if not 1 <= count <= T:
        raise ConfigurationError(f"grid count must lie in [1, {T}], got {count}")
    phi = np.arccos(np.sqrt(schedule.alpha_bars))
    u = (phi - phi[0]) / (phi[-1] - phi[0])
    raw = np.searchsorted(u, np.arange(count) / count)
    steps = np.empty(count, dtype=np.int64)
    prev = -1
    for i, v in enumerate(raw):
        prev = max(int(v), prev + 1)
        steps[i] = prev
    if steps[-1] >= T:
        raise ConfigurationError(f"cannot place {count} distinct steps on this schedule")
    return TimestepGrid(steps)


def make_grid(schedule: Schedule, count: int = DEFAULT_GRID_COUNT, spacing: str = "angle") -> TimestepGrid:
    if spacing == "angle":
        return angle_grid(schedule, count)
    if spacing == "uniform":
        return uniform_grid(schedule.T, count)
    raise ConfigurationError(f"unknown grid spacing {spacing!r}")


@dataclass(frozen=True)
class LatentState:
    t: int
    value: np.ndarray


def ddim_step(model: ScoreModel, x, t_from: int, t_to: int) -> np.ndarray:
    """One deterministic DDIM update from ``t_from`` to ``t_to`` (either direction)."""
    sched = model.schedule
    if t_from == t_to:
        raise ConfigurationError("ddim_step needs distinct timesteps")
    ab_from, ab_to = sched.alpha_bar(t_from), sched.alpha_bar(t_to)
    x = np.asarray(x, dtype=np.float64)
    eps = model.eps(x, t_from)
    x0_hat = (x - np.sqrt(1.0 - ab_from) * eps) / np.sqrt(ab_from)
    return np.sqrt(ab_to) * x0_hat + np.sqrt(1.0 - ab_to) * eps


def integrate(model: ScoreModel, x, grid: TimestepGrid, start: int, stop: int,
              clip=None, trajectory: list | None = None) -> np.ndarray:
    """Walk the grid from position ``start`` to ``stop``.

    ``clip(x, t)`` is applied after each step when given; visited states are
    appended to ``trajectory`` as :class:`LatentState` when given.
    """
    grid.check_index(start)
    grid.check_index(stop)
    x = np.asarray(x, dtype=np.float64)
    step = 1 if stop >= start else -1
    for i in range(start, stop, step):
        t_to = int(grid.steps[i + step])
        x = ddim_step(model, x, int(grid.steps[i]), t_to)
        if clip is not None:
            x = clip(x, t_to)
        if trajectory is not None:
            trajectory.append(LatentState(t_to, x))
    return x


def encode(model: ScoreModel, x0, grid: TimestepGrid, depth_index: int,
           trajectory: list | None = None) -> LatentState:
    x0 = np.asarray(x0, dtype=np.float64)
    if trajectory is not None:
        trajectory.append(LatentState(0, x0))
    x = integrate(model, x0, grid, 0, depth_index, trajectory=trajectory)
    return LatentState(int(grid.steps[depth_index]), x)


def decode(model: ScoreModel, latent: LatentState, grid: TimestepGrid, to_index: int = 0,
           trajectory: list | None = None) -> np.ndarray:
    """Integrate a latent back down to grid position ``to_index`` (data space by default)."""
    start = grid.index_of(latent.t)
    if to_index > start:
        raise ConfigurationError("decode target lies above the latent")
    return integrate(model, latent.value, grid, start, to_index, trajectory=trajectory)


def write_trajectory_csv(path, trajectory, sample_ids=None) -> None:
    """Dump states as rows ``sample_id,t,coordinate_index,value``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "t", "coordinate_index", "value"])
        for state in trajectory:
            values = np.atleast_2d(state.value).reshape(-1, np.shape(state.value)[-1])
            ids = range(len(values)) if sample_ids is None else sample_ids
            for sid, row in zip(ids, values):
                for j, v in enumerate(row):
                    writer.writerow([sid, state.t, j, repr(float(v))])
