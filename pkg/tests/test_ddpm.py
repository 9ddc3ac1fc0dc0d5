import numpy as np
import pytest

from discgen.core_data import DiscontinuitySet
from discgen.ddpm import (
    DdpmModel,
    DdpmTrainConfig,
    NoiseSchedule,
    compose_noise,
    ddpm_loss,
    ddpm_sample,
    forward_diffuse,
    init_ddpm,
    reverse_chain,
    time_embedding,
    train_ddpm,
)
from discgen.errors import StepOutOfRange
from discgen.features import Standardizer
from discgen.fixtures import correlated_table
from discgen.nn import Mlp
from discgen.rng import Prng


class _Oracle:
    """Stand-in model whose noise prediction is supplied by the test."""

    def __init__(self, schedule, predict):
        self.schedule = schedule
        self.predict_noise = predict


def iterate_kernel(x0, noises, schedule):
    x = np.asarray(x0, float)
    for s, e in enumerate(noises, start=1):
        x = np.sqrt(1 - schedule.betas[s]) * x + np.sqrt(schedule.betas[s]) * e
    return x


def test_linear_schedule():
    s = NoiseSchedule.linear()
    assert s.T == 200 and s.betas[1] == pytest.approx(1e-4) and s.betas[200] == pytest.approx(0.02)
    assert s.alpha_bars[3] == pytest.approx(np.prod(1 - s.betas[1:4]))


def test_schedule_validation():
    with pytest.raises(ValueError):
        NoiseSchedule([0.1, 1.0])
    with pytest.raises(ValueError):
        NoiseSchedule([0.2, 0.1])
    with pytest.raises(StepOutOfRange):
        NoiseSchedule.linear(5).check_step(6)
    with pytest.raises(StepOutOfRange):
        forward_diffuse(np.zeros(3), 0, np.zeros(3), NoiseSchedule.linear(5))


def test_zero_beta_is_identity():
    s = NoiseSchedule(np.zeros(4), strict=False)
    x0 = np.array([[1.0, -2.0, 0.5]])
    for t in range(1, 5):
        assert np.array_equal(forward_diffuse(x0, t, np.ones((1, 3)), s), x0)


def test_large_t_is_noise():
    s = NoiseSchedule.linear(1000, 1e-4, 0.02)
    eps = Prng(1).normal((5, 3))
    x = forward_diffuse(np.full((5, 3), 3.0), 1000, eps, s)
    assert np.max(np.abs(x - eps)) < 0.05


def test_closed_form_matches_iteration_t3():
    s = NoiseSchedule([0.1, 0.2, 0.3])
    p = Prng(9)
    x0 = p.normal((4, 3))
    noises = [p.normal((4, 3)) for _ in range(3)]
    for t in (1, 2, 3):
        eps = compose_noise(noises[:t], t, s)
        assert np.max(np.abs(forward_diffuse(x0, t, eps, s) - iterate_kernel(x0, noises[:t], s))) < 1e-12


def test_time_embedding():
    e = time_embedding([0, 100, 200], 200)
    assert e.shape == (3, 16)
    assert np.allclose(e[0, :8], 0) and np.allclose(e[0, 8:], 1)
    assert e[1, 0] == pytest.approx(1.0)  # sin(pi/2)


def test_loss_zero_for_perfect_network():
    s = NoiseSchedule.linear(10)
    x0 = Prng(2).normal((6, 3))
    eps = Prng(3).normal((6, 3))
    t = np.arange(1, 7)
    oracle = _Oracle(s, lambda x_t, tt: eps)
    assert ddpm_loss(oracle, x0, t, eps) == 0.0


def test_loss_zero_network_expectation():
    s = NoiseSchedule.linear()
    oracle = _Oracle(s, lambda x_t, tt: np.zeros_like(x_t))
    loss = ddpm_loss(oracle, np.zeros((1000, 3)), prng=Prng(4))
    assert abs(loss - 3.0) < 0.3


def test_loss_hand_computed():
    s = NoiseSchedule([0.1, 0.2])
    x0, eps = np.array([[1.0, 2.0, -1.0]]), np.array([[0.5, -0.5, 0.25]])
    oracle = _Oracle(s, lambda x_t, t: 0.5 * x_t)
    ab = 0.9 * 0.8
    x_t = [np.sqrt(ab) * a + np.sqrt(1 - ab) * e for a, e in zip(x0[0], eps[0])]
    ref = sum((e - 0.5 * x) ** 2 for e, x in zip(eps[0], x_t))
    assert abs(ddpm_loss(oracle, x0, 2, eps) - ref) < 1e-12


def test_zero_epochs_is_initialisation():
    d = correlated_table(50, 0.0, seed=1)
    cfg = DdpmTrainConfig(epochs=0, hidden=(16,))
    a, b = train_ddpm(d, cfg, 5), init_ddpm(d, cfg, 5)
    assert all(np.array_equal(p, q) for p, q in zip(a.network.params, b.network.params))


def test_single_step_tiny_beta_is_identity():
    s = NoiseSchedule([1e-14])
    oracle = _Oracle(s, lambda x, t: x)
    x_T = Prng(6).normal((5, 3))
    out = reverse_chain(oracle, x_T, Prng(7))
    assert np.max(np.abs(out - x_T)) < 1e-6


def test_loss_decreases_on_catalog_dataset(catalog):
    d = catalog.load("thundovd_g1")
    m = train_ddpm(d, DdpmTrainConfig(epochs=600, hidden=(64, 64)), 3)
    assert np.mean(m.losses[-100:]) < np.mean(m.losses[:100])


def test_sampling_reproducible_and_roundtrip():
    d = correlated_table(60, 0.0, seed=2)
    m = train_ddpm(d, DdpmTrainConfig(epochs=20, hidden=(16,), T=20), 1)
    a, b = ddpm_sample(m, 4, seed=8), ddpm_sample(m, 4, seed=8)
    assert a.n == 4 and a.data.tobytes() == b.data.tobytes()
    back = DdpmModel.from_dict(m.to_dict())
    assert ddpm_sample(back, 4, seed=8).data.tobytes() == a.data.tobytes()


def test_degenerate_columns():
    z = Prng(12).normal(500)
    data = np.column_stack([180.0 + z, np.full(500, 40.0), np.full(500, 2.0)])
    d = DiscontinuitySet("degenerate", data)
    m = train_ddpm(d, DdpmTrainConfig(epochs=2000, hidden=(64, 64)), 4)
    g = ddpm_sample(m, 5000, seed=9)
    assert abs(g.column("dip_direction").std() - 1.0) < 0.15
