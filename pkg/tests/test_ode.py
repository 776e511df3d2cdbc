import numpy as np
import pytest

from codedit.errors import ConfigurationError
from codedit.metrics import loglik_realism
from codedit.ode import (
    LatentState,
    TimestepGrid,
    angle_grid,
    ddim_step,
    decode,
    encode,
    make_grid,
    uniform_grid,
    write_trajectory_csv,
)
from codedit.schedule import make_linear_schedule
from codedit.score import GmmPrior, GmmScoreModel, ScoreModel


class ZeroEps(ScoreModel):
    def score(self, x, t):
        return np.zeros_like(x)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        TimestepGrid(np.array([1, 2, 3]))
    with pytest.raises(ConfigurationError):
        TimestepGrid(np.array([0, 2, 2]))
    with pytest.raises(ConfigurationError):
        TimestepGrid(np.array([0, 1.5]))
    with pytest.raises(ConfigurationError):
        make_grid(make_linear_schedule(), 10, "cosine")


def test_uniform_grid():
    g = uniform_grid(1000, 200)
    assert g.count == 200 and g.steps[0] == 0 and g.steps[1] == 5 and g.steps[-1] == 995


def test_angle_grid_properties(schedule):
    g = angle_grid(schedule, 200)
    assert g.count == 200 and g.steps[0] == 0 and g.steps[-1] < 1000
    assert np.all(np.diff(g.steps) > 0)
    # frozen landmarks of the default grid
    for pos, t in {10: 23, 40: 98, 100: 259, 199: 917}.items():
        assert g.steps[pos] == t
    phi_all = np.arccos(np.sqrt(schedule.alpha_bars))
    u = (phi_all[g.steps] - phi_all[0]) / (phi_all[-1] - phi_all[0])
    # each position sits within one timestep of its equal-angle target
    one_step = np.max(np.diff(phi_all)) / (phi_all[-1] - phi_all[0])
    assert np.all(np.abs(u - np.arange(200) / 200)[1:] <= one_step)


def test_step_rejects_equal_timesteps(image_model):
    with pytest.raises(ConfigurationError):
        ddim_step(image_model, np.zeros(256), 5, 5)


def test_zero_eps_rescales(schedule):
    m = ZeroEps(schedule)
    x = np.array([0.4, -1.0])
    out = ddim_step(m, x, 10, 15)
    np.testing.assert_allclose(out, np.sqrt(schedule.alpha_bars[15] / schedule.alpha_bars[10]) * x, rtol=1e-14)


def test_equal_levels_give_identity():
    # two timesteps sharing one alpha_bar cannot come from a schedule, so craft one
    from codedit.schedule import Schedule

    s = Schedule(betas=np.array([0.1, 0.1]), alpha_bars=np.array([0.5, 0.5]))
    m = GmmScoreModel(GmmPrior([1.0], [[0.2]], [[0.3]]), s)
    x = np.array([0.7])
    np.testing.assert_allclose(ddim_step(m, x, 0, 1), x, rtol=1e-15)


def test_depth_zero_is_identity(image_model, image_prior, grid):
    x = image_prior.sample(2, 0)
    lat = encode(image_model, x, grid, 0)
    assert lat.t == 0
    np.testing.assert_array_equal(lat.value, x)
    np.testing.assert_array_equal(decode(image_model, lat, grid), x)


def test_decode_rejects_off_grid_latent(image_model, grid):
    with pytest.raises(ConfigurationError):
        decode(image_model, LatentState(1, np.zeros(256)), grid)


def test_deep_latents_look_standard_normal(image_model, image_prior, grid):
    x = image_prior.sample(100, 3)
    lat = encode(image_model, x, grid, grid.count - 1)
    assert 0.8 <= lat.value.var() <= 1.2


@pytest.mark.parametrize("depth", [20, 40, 100, 199])
def test_roundtrip_image_prior(image_model, image_prior, grid, depth):
    x = image_prior.sample(100, 4)
    back = decode(image_model, encode(image_model, x, grid, depth), grid)
    rel = np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1)
    assert rel.max() <= 1e-2


def test_roundtrip_toy_prior(toy_model, toy_prior, grid):
    x = toy_prior.sample(100, 5)
    back = decode(toy_model, encode(toy_model, x, grid, grid.count - 1), grid)
    assert np.linalg.norm(back - x) / np.linalg.norm(x) <= 1e-2


def test_standard_normal_roundtrip_shrink_is_closed_form(schedule, grid):
    # for N(0, I) each DDIM step is an exact rotation followed by the first-order
    # inversion, so encode-decode multiplies x by prod cos^2 of the angle increments
    m = GmmScoreModel(GmmPrior([1.0], [[0.0, 0.0]], [[1.0, 1.0]]), schedule)
    x = np.array([[0.3, -0.7]])
    back = decode(m, encode(m, x, grid, grid.count - 1), grid)
    phi = np.arccos(np.sqrt(schedule.alpha_bars[grid.steps]))
    factor = np.prod(np.cos(np.diff(phi)) ** 2)
    np.testing.assert_allclose(back, factor * x, rtol=1e-10)
    assert 1 - factor < 1.5e-2


def test_determinism(image_model, image_prior, grid):
    x = image_prior.sample(3, 6)
    a = decode(image_model, encode(image_model, x, grid, 60), grid)
    b = decode(image_model, encode(image_model, x, grid, 60), grid)
    np.testing.assert_array_equal(a, b)


def test_decoding_noise_gives_typical_samples(image_model, image_prior, grid):
    z = np.random.default_rng(5).standard_normal((100, 256))
    out = decode(image_model, LatentState(int(grid.steps[-1]), z), grid)
    ref = loglik_realism(image_prior, image_prior.sample(1000, 6))
    assert np.mean(loglik_realism(image_prior, out) >= np.percentile(ref, 5)) >= 0.85


def test_trajectory_csv(tmp_path, toy_model, toy_prior, grid):
    traj = []
    x = toy_prior.sample(2, 0)
    lat = encode(toy_model, x, grid, 3, trajectory=traj)
    decode(toy_model, lat, grid, trajectory=traj)
    up = [int(t) for t in grid.steps[:4]]
    assert [s.t for s in traj] == up + up[-2::-1]
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, traj)
    lines = path.read_text().splitlines()
    assert lines[0] == "sample_id,t,coordinate_index,value"
    assert len(lines) == 1 + 7 * 2 * 2
    sid, t, j, v = lines[1].split(",")
    assert (sid, t, j) == ("0", "0", "0") and float(v) == x[0, 0]
