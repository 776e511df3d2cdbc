"""Denoising score matching for low-dimensional data with a two-layer tanh network.

The network sees ``(x, sigma_t)`` and predicts the time-t score.  Gradients are
derived by hand; the toy scale keeps everything in plain numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, TrainingError
from .schedule import Schedule
from .score import ScoreModel, score_to_eps

MAX_DIM = 4


@dataclass(frozen=True)
class TinyScoreNet:
    w1: np.ndarray  # (hidden, dim + 1)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (dim, hidden)
    b2: np.ndarray  # (dim,)

    @property
    def dim(self) -> int:
        return self.w2.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @classmethod
    def init(cls, dim: int, hidden: int = 32, rng=0) -> "TinyScoreNet":
        if not 1 <= dim <= MAX_DIM:
            raise ConfigurationError(f"TinyScoreNet supports 1..{MAX_DIM} dims, got {dim}")
        rng = np.random.default_rng(rng)
        return cls(
            w1=rng.normal(0.0, 1.0 / np.sqrt(dim + 1), (hidden, dim + 1)),
            b1=rng.normal(0.0, 0.5, hidden),
            w2=rng.normal(0.0, 1.0 / np.sqrt(hidden), (dim, hidden)),
            b2=np.zeros(dim),
        )

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def __call__(self, x, sigma) -> np.ndarray:
        return self._forward(x, sigma)[0]

    def _forward(self, x, sigma):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        sig = np.broadcast_to(np.asarray(sigma, dtype=np.float64).reshape(-1, 1), (x.shape[0], 1))
        inp = np.concatenate([x, sig], axis=1)
        h = np.tanh(inp @ self.w1.T + self.b1)
        return h @ self.w2.T + self.b2, (inp, h)


class NetScoreModel(ScoreModel):
    """Adapter exposing a trained :class:`TinyScoreNet` as a :class:`ScoreModel`."""

    def __init__(self, net: TinyScoreNet, schedule: Schedule):
        super().__init__(schedule)
        self.net = net

    def score(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        out = self.net(x.reshape(-1, self.net.dim), self.schedule.sigma(t))
        return out.reshape(x.shape)

    def eps(self, x, t):
        return score_to_eps(self.score(x, t), self.schedule.sigma(t))


def default_timesteps(schedule: Schedule, n: int = 10) -> np.ndarray:
    """Noise levels used for training; skips the nearly noiseless start of the schedule."""
    return np.linspace(schedule.T // 20, schedule.T - 1, n).round().astype(int)


def _draw(batch_x0, schedule, rng_seed, timesteps):
    x0 = np.atleast_2d(np.asarray(batch_x0, dtype=np.float64))
    if x0.shape[0] == 0:
        raise ConfigurationError("empty batch")
    rng = np.random.default_rng(rng_seed)
    ts = rng.choice(np.asarray(timesteps), size=x0.shape[0])
    ab = schedule.alpha_bars[ts][:, None]
    sigma = np.sqrt(1.0 - ab)
    z = rng.standard_normal(x0.shape)
    x_noisy = np.sqrt(ab) * x0 + sigma * z
    return x_noisy, sigma, -z / sigma


def dsm_loss(net: TinyScoreNet, batch_x0, schedule: Schedule, rng_seed, timesteps=None) -> float:
    """Mean over the batch of ``|s(x_t, sigma) - (sqrt(ab) x0 - x_t) / sigma^2|^2``."""
    return dsm_loss_and_grad(net, batch_x0, schedule, rng_seed, timesteps)[0]


def dsm_loss_and_grad(net: TinyScoreNet, batch_x0, schedule: Schedule, rng_seed, timesteps=None):
    if timesteps is None:
        timesteps = default_timesteps(schedule)
    x_noisy, sigma, target = _draw(batch_x0, schedule, rng_seed, timesteps)
    out, (inp, h) = net._forward(x_noisy, sigma)
    n = out.shape[0]
    resid = out - target
    loss = float(np.sum(resid**2) / n)
    g_out = 2.0 * resid / n
    g_pre = (g_out @ net.w2) * (1.0 - h**2)
    grads = {
        "w2": g_out.T @ h,
        "b2": g_out.sum(axis=0),
        "w1": g_pre.T @ inp,
        "b1": g_pre.sum(axis=0),
    }
    return loss, grads


def train_dsm(net: TinyScoreNet, data, schedule: Schedule, epochs: int, learning_rate: float,
              rng_seed: int = 0, batch_size: int = 128, timesteps=None,
              history: list | None = None) -> TinyScoreNet:
    """Plain minibatch SGD on the DSM loss.

    Per-epoch median minibatch losses are appended to ``history`` if given.
    Raises :class:`TrainingError` when an epoch median exceeds ten times the
    initial loss.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[1] != net.dim:
        raise ConfigurationError(f"data dim {data.shape[1]} != net dim {net.dim}")
    if data.shape[1] > MAX_DIM:
        raise ConfigurationError(f"training supports at most {MAX_DIM} dims")
    if not learning_rate > 0:
        raise ConfigurationError("learning_rate must be positive")
    rng = np.random.default_rng(rng_seed)
    initial = dsm_loss(net, data[:batch_size], schedule, rng_seed, timesteps)
    for _ in range(epochs):
        perm = rng.permutation(len(data))
        losses = []
        for start in range(0, len(data), batch_size):
            batch = data[perm[start:start + batch_size]]
            loss, grads = dsm_loss_and_grad(net, batch, schedule, rng, timesteps)
            losses.append(loss)
            net = replace(net, **{k: v - learning_rate * grads[k] for k, v in net.params().items()})
        med = float(np.median(losses))
        if history is not None:
            history.append(med)
        if not np.isfinite(med) or med > 10 * initial:
            raise TrainingError(f"training diverged: epoch median loss {med:.4g} vs initial {initial:.4g}")
    return net


def format_net(net: TinyScoreNet) -> str:
    """Header ``tinyscorenet <dim+1> <hidden> <dim>``, then w1 rows, b1, w2 rows, b2."""
    lines = [f"tinyscorenet {net.dim + 1} {net.hidden} {net.dim}"]
    for arr in (net.w1, net.b1[None], net.w2, net.b2[None]):
        lines.extend(" ".join(repr(float(v)) for v in row) for row in arr)
    return "\n".join(lines) + "\n"


def parse_net(text: str) -> TinyScoreNet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split() if lines else []
    if len(head) != 4 or head[0] != "tinyscorenet":
        raise ConfigurationError("bad weights header")
    d_in, hidden, d_out = map(int, head[1:])
    rows = [np.array([float(v) for v in ln.split()]) for ln in lines[1:]]
    if len(rows) != hidden + 1 + d_out + 1:
        raise ConfigurationError("weights file has the wrong number of rows")
    try:
        w1 = np.stack(rows[:hidden]).reshape(hidden, d_in)
        b1 = rows[hidden].reshape(hidden)
        w2 = np.stack(rows[hidden + 1:hidden + 1 + d_out]).reshape(d_out, hidden)
        b2 = rows[-1].reshape(d_out)
    except ValueError:
        raise ConfigurationError("weights rows do not match the header sizes") from None
    return TinyScoreNet(w1, b1, w2, b2)


def save_net(net: TinyScoreNet, path) -> None:
    Path(path).write_text(format_net(net))


def load_net(path) -> TinyScoreNet:
    return parse_net(Path(path).read_text())
