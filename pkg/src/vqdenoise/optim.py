"""SPSA gradient estimates, AMSGrad-fused updates, and mini-batch QAE training.

All updates are ascent steps: the QAE cost is a fidelity to be maximized.
"""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from .qae import QaeModel, batch_overlap, forward_batch, stack_states
from .state import swap_test_estimate

OPTIMIZERS = ("amsgrad_spsa", "spsa", "gd")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 50
    epsilon: float = 0.1
    eta0: float = 0.1
    decay: float = 0.8
    decay_interval: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    nu: float = 1e-8
    spsa_directions: int = 2
    shots: int | None = None
    rng_seed: int = 0
    optimizer: str = "amsgrad_spsa"

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.decay_interval < 1 or self.spsa_directions < 1:
            raise ValueError("epochs, batch_size, decay_interval and spsa_directions must be positive")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive or None for exact fidelities")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; expected one of {OPTIMIZERS}")

    @classmethod
    def from_dict(cls, obj: dict) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return asdict(self)


def learning_rate(cfg: TrainConfig, epoch: int) -> float:
    """eta0 * decay^floor(epoch / interval), evaluated on the decimal values so 0.1 * 0.8 gives 0.08."""
    k = epoch // cfg.decay_interval
    return float(Fraction(repr(cfg.eta0)) * Fraction(repr(cfg.decay)) ** k)


CostFunction = Callable[[np.ndarray], float]


def spsa_gradient_estimate(cost: CostFunction, theta, epsilon: float, directions: int, rng_seed) -> np.ndarray:
    """Average of [(L(theta + eps b) - L(theta - eps b)) / (2 eps)] b over random b in {-1, 1}^P."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if directions < 1:
        raise ValueError("need at least one direction")
    rng = np.random.default_rng(rng_seed)
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for _ in range(directions):
        b = rng.choice(np.array([-1.0, 1.0]), size=theta.shape)
        diff = cost(theta + epsilon * b) - cost(theta - epsilon * b)
        grad += diff / (2 * epsilon) * b
    return grad / directions


def spsa_direction_average(cost: CostFunction, theta, epsilon: float, directions_b) -> np.ndarray:
    """SPSA estimate averaged over an explicit list of directions (e.g. all of {-1, 1}^P)."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for b in directions_b:
        b = np.asarray(b, dtype=float)
        grad += (cost(theta + epsilon * b) - cost(theta - epsilon * b)) / (2 * epsilon) * b
    return grad / len(directions_b)


def finite_difference_gradient(cost: CostFunction, theta, epsilon: float) -> np.ndarray:
    """Forward differences, one cost call per coordinate plus one at theta."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    theta = np.asarray(theta, dtype=float)
    base = cost(theta)
    grad = np.empty_like(theta)
    for p in range(theta.size):
        shifted = theta.copy()
        shifted[p] += epsilon
        grad[p] = (cost(shifted) - base) / epsilon
    return grad


@dataclass(frozen=True, eq=False)
class AmsgradState:
    m: np.ndarray
    v: np.ndarray
    v_hat: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> AmsgradState:
        return cls(np.zeros(size), np.zeros(size), np.zeros(size), 0)


def amsgrad_spsa_step(state: AmsgradState, grad, cfg: TrainConfig, theta, eta: float):
    """One AMSGrad ascent step; returns ``(new_theta, new_state)``.

    The denominator is sqrt(v_hat) + nu element-wise, so a zero v_hat gives nu.
    """
    grad = np.asarray(grad, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if grad.shape != theta.shape or state.m.shape != theta.shape:
        raise ValueError("gradient, parameter and moment vectors must have equal length")
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * grad**2
    v_hat = np.maximum(state.v_hat, v)
    new_theta = theta + eta * m / (np.sqrt(v_hat) + cfg.nu)
    return new_theta, AmsgradState(m, v, v_hat, state.t + 1)


# --- QAE training --------------------------------------------------------------------


@dataclass(frozen=True)
class HistoryRow:
    epoch: int
    batch: int
    eta: float
    cost: float


def qae_cost(model: QaeModel, targets: np.ndarray, inputs: np.ndarray, shots: int | None = None, rng=None):
    """Build theta -> mean Tr(rho_A D(E(rho_B))) over a stacked batch.

    With ``shots`` set, each per-sample fidelity is replaced by a SWAP-test
    estimate drawn from ``rng``.
    """

    def cost(theta) -> float:
        outputs = forward_batch(model.with_params(theta), inputs)
        fids = np.clip(batch_overlap(targets, outputs), 0.0, 1.0)
        if shots is not None:
            fids = swap_test_estimate(fids, shots, rng)
        # fixed-order reduction keeps results bit-stable
        return float(math.fsum(np.atleast_1d(fids)) / len(np.atleast_1d(fids)))

    return cost


def dataset_cost(model: QaeModel, pairs) -> float:
    """Exact training cost of ``model`` over all ``(a, b)`` pairs."""
    targets = stack_states([a for a, _ in pairs])
    inputs = stack_states([b for _, b in pairs])
    return qae_cost(model, targets, inputs)(model.params)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def train(model: QaeModel, dataset, cfg: TrainConfig, progress: Callable[[HistoryRow], None] | None = None):
    """Mini-batch training; returns ``(trained_model, history)``.

    Each batch records the cost at the current parameters, then performs one
    update. Batches are reshuffled every epoch from a stream keyed by
    ``(rng_seed, epoch)``; SPSA directions and shot noise use separate streams.
    """
    pairs = list(dataset.pairs)
    n = len(pairs)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if cfg.batch_size > n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    width = pairs[0][0].num_qubits
    if width != model.input_width or model.topology[-1] != width:
        raise ValueError(f"dataset states have {width} qubits but the QAE topology is {list(model.topology)}")
    targets = stack_states([a for a, _ in pairs])
    inputs = stack_states([b for _, b in pairs])
    dir_rng = _stream(cfg.rng_seed, 1)
    shot_rng = _stream(cfg.rng_seed, 2)
    theta = model.params.copy()
    opt_state = AmsgradState.zeros(theta.size)
    history: list[HistoryRow] = []
    for epoch in range(cfg.epochs):
        eta = learning_rate(cfg, epoch)
        order = _stream(cfg.rng_seed, 0, epoch).permutation(n)
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            cost = qae_cost(model, targets[idx], inputs[idx], cfg.shots, shot_rng)
            row = HistoryRow(epoch, batch, eta, cost(theta))
            history.append(row)
            if progress is not None:
                progress(row)
            if cfg.optimizer == "gd":
                theta = theta + eta * finite_difference_gradient(cost, theta, cfg.epsilon)
                continue
            grad = spsa_gradient_estimate(cost, theta, cfg.epsilon, cfg.spsa_directions, dir_rng)
            if cfg.optimizer == "spsa":
                theta = theta + eta * grad
            else:
                theta, opt_state = amsgrad_spsa_step(opt_state, grad, cfg, theta, eta)
    return model.with_params(theta), history


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "batch", "eta", "cost"])
        for row in history:
            w.writerow([row.epoch, row.batch, f"{row.eta:.12g}", f"{row.cost:.12g}"])


def read_history_csv(path) -> list[HistoryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [HistoryRow(int(r["epoch"]), int(r["batch"]), float(r["eta"]), float(r["cost"]))
                for r in csv.DictReader(fh)]
