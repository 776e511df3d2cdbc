"""Fit a small score network by denoising score matching and edit with it.

The network replaces the exact score everywhere: the pipelines only see the
ScoreModel interface.

Run: python3 demos/learned_score.py
"""

import numpy as np

from codedit import CorruptionSpec, GmmPrior, LangevinConfig, corrupt, gmm_log_density, make_grid, make_linear_schedule, ode_edit
from codedit.score import gmm_score_at_time
from codedit.scorematch import NetScoreModel, TinyScoreNet, train_dsm

schedule = make_linear_schedule()
prior = GmmPrior([1.0], [[0.0]], [[1.0]])
data = prior.sample(4000, rng=1)

history = []
net = train_dsm(TinyScoreNet.init(1, hidden=32, rng=0), data, schedule, epochs=60, learning_rate=0.01,
                history=history)
print(f"epoch-median loss: first {history[0]:.3f}, last {history[-1]:.3f}")

xs = np.linspace(-2, 2, 41)[:, None]
for t in (100, 500, 900):
    err = np.mean((net(xs, schedule.sigma(t)) - gmm_score_at_time(prior, schedule, xs, t)) ** 2)
    print(f"t={t:3d}: MSE to the exact score on [-2, 2] = {err:.4f}")

x = prior.sample(100, rng=2)
xc = corrupt(x, CorruptionSpec("gaussian_noise", 5.0, 3))
out = ode_edit(NetScoreModel(net, schedule), xc, 40, LangevinConfig(200, 1e-2, 1, 0.8, 0), make_grid(schedule))
print("likelihood improved on {:.0%} of inputs".format(np.mean(gmm_log_density(prior, out) > gmm_log_density(prior, xc))))
