import itertools

import numpy as np
import pytest

from vqdenoise import state as qs
from vqdenoise.ansatz import AnsatzSpec
from vqdenoise.optim import (
    AmsgradState,
    TrainConfig,
    amsgrad_spsa_step,
    dataset_cost,
    finite_difference_gradient,
    learning_rate,
    qae_cost,
    read_history_csv,
    spsa_direction_average,
    spsa_gradient_estimate,
    train,
    write_history_csv,
)
from vqdenoise.qae import init_model, stack_states
from vqdenoise.state import QuantumState
from vqdenoise.vqe import Dataset


class Counted:
    def __init__(self, fn):
        self.fn, self.calls = fn, 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


def test_spsa_exact_on_linear_cost():
    c = np.array([1.5, -2.0, 0.25, 3.0])
    cost = lambda t: float(c @ t)
    rng = np.random.default_rng(0)
    # a single direction b returns (c . b) b: the directional derivative carries no bias
    for seed in range(20):
        theta = rng.normal(size=4)
        g = spsa_gradient_estimate(cost, theta, 0.1, 1, seed)
        b = np.random.default_rng(seed).choice(np.array([-1.0, 1.0]), size=4)
        assert np.allclose(g, (c @ b) * b, atol=1e-12)
    # averaging over all sign patterns removes the cross terms exactly
    dirs = list(itertools.product([-1.0, 1.0], repeat=4))
    g = spsa_direction_average(cost, np.zeros(4), 0.1, dirs)
    assert np.allclose(g, c, atol=1e-12)


def test_spsa_cost_call_count():
    cost = Counted(lambda t: float(np.sum(t**2)))
    spsa_gradient_estimate(cost, np.ones(5), 0.1, 3, 0)
    assert cost.calls == 6


def test_spsa_rejects_bad_arguments():
    with pytest.raises(ValueError):
        spsa_gradient_estimate(lambda t: 0.0, np.zeros(2), 0.0, 1, 0)
    with pytest.raises(ValueError):
        spsa_gradient_estimate(lambda t: 0.0, np.zeros(2), 0.1, 0, 0)


def quadratic():
    a = np.array([[2.0, 0.5, -0.3], [0.5, 1.0, 0.2], [-0.3, 0.2, 3.0]])
    b = np.array([0.1, -0.4, 0.7])
    return (lambda t: float(t @ a @ t + b @ t)), (lambda t: 2 * a @ t + b)


def test_exhaustive_spsa_matches_finite_difference_on_quadratic():
    cost, grad = quadratic()
    theta = np.array([0.3, -0.2, 0.5])
    dirs = list(itertools.product([-1.0, 1.0], repeat=3))
    spsa = spsa_direction_average(cost, theta, 1e-3, dirs)
    # central differences in each coordinate give the same O(1) bias-free value on a quadratic
    central = np.array([(cost(theta + 1e-3 * e) - cost(theta - 1e-3 * e)) / 2e-3 for e in np.eye(3)])
    assert np.max(np.abs(spsa - central)) < 1e-6
    assert np.max(np.abs(spsa - grad(theta))) < 1e-6
    forward = finite_difference_gradient(cost, theta, 1e-7)
    assert np.max(np.abs(forward - grad(theta))) < 1e-6


def test_finite_difference_call_count():
    cost = Counted(lambda t: float(np.sum(t)))
    finite_difference_gradient(cost, np.zeros(4), 0.1)
    assert cost.calls == 5


def test_learning_rate_schedule():
    cfg = TrainConfig()
    assert [learning_rate(cfg, e) for e in (0, 9, 10, 19, 20, 30)] == [0.1, 0.1, 0.08, 0.08, 0.064, 0.0512]
    assert learning_rate(TrainConfig(eta0=0.2, decay=0.5, decay_interval=3), 7) == 0.05


def test_amsgrad_first_step():
    cfg = TrainConfig()
    theta, st = amsgrad_spsa_step(AmsgradState.zeros(2), np.array([1.0, 0.0]), cfg, np.zeros(2), 0.1)
    assert theta[0] > 0 and theta[1] == 0.0
    assert st.t == 1
    with pytest.raises(ValueError):
        amsgrad_spsa_step(AmsgradState.zeros(2), np.zeros(3), cfg, np.zeros(2), 0.1)


def test_amsgrad_vhat_monotone():
    cfg = TrainConfig()
    rng = np.random.default_rng(1)
    st, theta = AmsgradState.zeros(4), np.zeros(4)
    prev = st.v_hat.copy()
    for _ in range(1000):
        theta, st = amsgrad_spsa_step(st, rng.normal(scale=rng.uniform(0.01, 5), size=4), cfg, theta, 0.1)
        assert np.all(st.v_hat >= prev)
        prev = st.v_hat.copy()


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(beta1=1.0)
    with pytest.raises(ValueError):
        TrainConfig(epsilon=0)
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"epochs": 3, "learning_rate": 0.1})
    assert TrainConfig.from_dict(TrainConfig(epochs=3).to_dict()) == TrainConfig(epochs=3)


def single_state_dataset(n_pairs=4):
    zero = QuantumState.basis("00")
    return Dataset([(zero, zero)] * n_pairs)


def test_train_reaches_identity_on_fixed_state():
    model = init_model((2, 1, 2), AnsatzSpec("RY_CZ", 1), 0)
    cfg = TrainConfig(epochs=150, batch_size=4, rng_seed=1)
    trained, history = train(model, single_state_dataset(), cfg)
    assert dataset_cost(trained, single_state_dataset().pairs) >= 0.999
    assert len(history) == 150


def test_train_is_deterministic():
    rng = np.random.default_rng(3)
    pairs = [(qs.random_pure_state(2, rng), qs.random_pure_state(2, rng)) for _ in range(6)]
    model = init_model((2, 1, 2), AnsatzSpec("RY_CZ", 1), 5)
    cfg = TrainConfig(epochs=3, batch_size=3, rng_seed=11)
    m1, h1 = train(model, Dataset(pairs), cfg)
    m2, h2 = train(model, Dataset(pairs), cfg)
    assert np.array_equal(m1.params, m2.params)
    assert h1 == h2
    assert [(r.epoch, r.batch) for r in h1] == [(e, b) for e in range(3) for b in range(2)]


@pytest.mark.parametrize("optimizer", ["spsa", "gd"])
def test_other_optimizers_improve(optimizer):
    model = init_model((2, 1, 2), AnsatzSpec("RY_CZ", 1), 2)
    ds = single_state_dataset()
    before = dataset_cost(model, ds.pairs)
    trained, _ = train(model, ds, TrainConfig(epochs=30, batch_size=4, optimizer=optimizer, eta0=0.3))
    assert dataset_cost(trained, ds.pairs) > before


def test_train_errors():
    model = init_model((2, 1, 2), AnsatzSpec("RY_CZ", 1), 0)
    with pytest.raises(ValueError):
        train(model, Dataset([]), TrainConfig())
    with pytest.raises(ValueError):
        train(model, single_state_dataset(4), TrainConfig(batch_size=5))
    wide = QuantumState.basis("000")
    with pytest.raises(ValueError):
        train(model, Dataset([(wide, wide)]), TrainConfig(batch_size=1))


def test_shot_cost_is_unbiased_on_average():
    rng = np.random.default_rng(4)
    pairs = [(qs.random_pure_state(2, rng), qs.random_pure_state(2, rng)) for _ in range(5)]
    model = init_model((2, 1, 2), AnsatzSpec("RY_CZ", 1), 6)
    targets, inputs = stack_states([a for a, _ in pairs]), stack_states([b for _, b in pairs])
    exact = qae_cost(model, targets, inputs)(model.params)
    shot_rng = np.random.default_rng(0)
    sampled = [qae_cost(model, targets, inputs, 1000, shot_rng)(model.params) for _ in range(400)]
    assert abs(np.mean(sampled) - exact) < 0.01


def test_history_csv_round_trip(tmp_path):
    model = init_model((2, 1, 2), AnsatzSpec("RY_CZ", 1), 0)
    _, history = train(model, single_state_dataset(), TrainConfig(epochs=2, batch_size=2))
    write_history_csv(history, tmp_path / "h.csv")
    text = (tmp_path / "h.csv").read_text()
    assert text.startswith("epoch,batch,eta,cost\n")
    assert "\r" not in text
    back = read_history_csv(tmp_path / "h.csv")
    assert [(r.epoch, r.batch) for r in back] == [(r.epoch, r.batch) for r in history]
    assert all(abs(a.cost - b.cost) < 1e-11 for a, b in zip(back, history))
