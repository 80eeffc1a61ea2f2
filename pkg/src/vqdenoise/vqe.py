"""VQE with the two-local ansatz under plain SPSA, and noisy dataset generation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ansatz import TwoLocalSpec, two_local_amplitudes
from .exact import GroundTruth, ground_state
from .optim import spsa_gradient_estimate
from .pauli import Observable, expectation, parse_observable, pauli_expectation
from .seeding import derive_seed
from .state import NoiseSpec, QuantumState, sample_noise_trajectory


@dataclass(frozen=True)
class VqeConfig:
    hamiltonian: Observable
    iterations: int
    depth: int = 1
    rng_seed: int = 0
    shots: int | None = None
    eta: float = 0.1
    epsilon: float = 0.1
    directions: int = 2

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("VQE needs at least one SPSA iteration")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive or None")

    @property
    def ansatz(self) -> TwoLocalSpec:
        return TwoLocalSpec(self.hamiltonian.num_qubits, self.depth)


def vqe_energy(cfg: VqeConfig, params) -> float:
    return expectation(cfg.hamiltonian, QuantumState(cfg.hamiltonian.num_qubits, two_local_amplitudes(cfg.ansatz, params)))


def sampled_energy(obs: Observable, state: QuantumState, shots: int, rng) -> float:
    """Energy with each Pauli term estimated from ``shots`` +/-1 outcomes."""
    total = 0.0
    for t in obs.terms:
        if set(t.pauli) == {"I"}:
            total += t.coeff
            continue
        p_plus = np.clip((1 + pauli_expectation(t.pauli, state)) / 2, 0.0, 1.0)
        total += t.coeff * (2 * rng.binomial(shots, p_plus) / shots - 1)
    return total


@dataclass(frozen=True, eq=False)
class VqeResult:
    params: np.ndarray
    state: QuantumState
    energies: list[float]


def run_vqe(cfg: VqeConfig) -> VqeResult:
    """Plain SPSA descent on the energy for exactly ``cfg.iterations`` updates.

    Parameters start uniform in [-pi, pi). ``energies`` holds the exact energy
    before the first update and after every update.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    spec = cfg.ansatz
    n = spec.num_qubits
    theta = rng.uniform(-np.pi, np.pi, size=spec.num_params)
    shot_rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed, spawn_key=(1,)))

    def neg_energy(z) -> float:
        if cfg.shots is None:
            return -vqe_energy(cfg, z)
        st = QuantumState(n, two_local_amplitudes(spec, z))
        return -sampled_energy(cfg.hamiltonian, st, cfg.shots, shot_rng)

    energies = [vqe_energy(cfg, theta)]
    for _ in range(cfg.iterations):
        grad = spsa_gradient_estimate(neg_energy, theta, cfg.epsilon, cfg.directions, rng)
        theta = theta + cfg.eta * grad
        energies.append(vqe_energy(cfg, theta))
    return VqeResult(theta, QuantumState(n, two_local_amplitudes(spec, theta)), energies)


# --- datasets -----------------------------------------------------------------------


def hamiltonian_digest(obs: Observable) -> str:
    return hashlib.sha256(json.dumps(obs.to_json(), sort_keys=True).encode()).hexdigest()


@dataclass(eq=False)
class Dataset:
    """Training pairs ``(state_A, state_B)`` plus generation metadata."""

    pairs: list[tuple[QuantumState, QuantumState]]
    metadata: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return self.pairs[0][0].num_qubits

    def states(self) -> list[QuantumState]:
        return [s for pair in self.pairs for s in pair]

    def ground_truth(self) -> GroundTruth:
        return _ground_from_meta(self.metadata)

    def to_json(self) -> dict:
        return {"metadata": self.metadata, "pairs": [{"a": a.to_json(), "b": b.to_json()} for a, b in self.pairs]}

    @classmethod
    def from_json(cls, obj: dict) -> Dataset:
        pairs = [(QuantumState.from_json(p["a"]), QuantumState.from_json(p["b"])) for p in obj["pairs"]]
        return cls(pairs, obj.get("metadata", {}))


@dataclass(eq=False)
class TestSet:
    """Single noisy states used for evaluation."""

    __test__ = False

    states: list[QuantumState]
    metadata: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return self.states[0].num_qubits

    def ground_truth(self) -> GroundTruth:
        return _ground_from_meta(self.metadata)

    def to_json(self) -> dict:
        return {"metadata": self.metadata, "states": [s.to_json() for s in self.states]}

    @classmethod
    def from_json(cls, obj: dict) -> TestSet:
        return cls([QuantumState.from_json(s) for s in obj["states"]], obj.get("metadata", {}))


def _ground_from_meta(meta: dict) -> GroundTruth:
    if "ground_truth" not in meta:
        raise KeyError("dataset metadata carries no ground truth")
    return GroundTruth.from_json(meta["ground_truth"])


def hamiltonian_from_meta(meta: dict) -> Observable:
    if "hamiltonian" not in meta:
        raise KeyError("dataset metadata carries no Hamiltonian")
    return parse_observable(meta["hamiltonian"])


def save_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj.to_json()) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    return Dataset.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def load_test_set(path) -> TestSet:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "states" not in obj:
        # a paired dataset can serve as a test set of its B states
        return TestSet([QuantumState.from_json(p["b"]) for p in obj["pairs"]], obj.get("metadata", {}))
    return TestSet.from_json(obj)


def vqe_runs(cfg: VqeConfig, count: int, rng_seed: int) -> tuple[list[QuantumState], list[int]]:
    """Final states of ``count`` independent early-stopped VQE runs and their seeds."""
    seeds = [derive_seed(rng_seed, "vqe-run", run) for run in range(count)]
    return [run_vqe(replace(cfg, rng_seed=seed)).state for seed in seeds], seeds


def apply_trajectory_noise(states, noise: NoiseSpec | None, rng_seed: int) -> list[QuantumState]:
    """One sampled noise trajectory per state, seeded by (rng_seed, run index)."""
    if noise is None:
        return list(states)
    if noise.mode != "trajectory":
        raise ValueError("dataset generation samples noise trajectories; use mode='trajectory'")
    return [sample_noise_trajectory(psi, noise, derive_seed(rng_seed, "noise", run)) for run, psi in enumerate(states)]


def _metadata(cfg: VqeConfig, noise: NoiseSpec | None, rng_seed: int, seeds, gt: GroundTruth) -> dict:
    return {
        "hamiltonian": cfg.hamiltonian.to_json(),
        "hamiltonian_sha256": hamiltonian_digest(cfg.hamiltonian),
        "vqe": {"depth": cfg.depth, "iterations": cfg.iterations, "shots": cfg.shots,
                "eta": cfg.eta, "epsilon": cfg.epsilon, "directions": cfg.directions},
        "noise": None if noise is None else noise.to_json(),
        "rng_seed": rng_seed,
        "run_seeds": seeds,
        "ground_truth": gt.to_json(),
    }


def pair_runs(states) -> list[tuple[QuantumState, QuantumState]]:
    """Pair run i with run N+i."""
    if len(states) % 2:
        raise ValueError("pairing needs an even number of runs")
    half = len(states) // 2
    return [(states[i], states[half + i]) for i in range(half)]


def generate_noisy_dataset(cfg: VqeConfig, n_pairs: int, noise: NoiseSpec | None, rng_seed: int) -> Dataset:
    """2N independent early-stopped VQE runs, paired as (run_i, run_{N+i})."""
    if n_pairs < 1:
        raise ValueError("need at least one training pair")
    if noise is not None and noise.mode != "trajectory":
        raise ValueError("dataset generation samples noise trajectories; use mode='trajectory'")
    clean, seeds = vqe_runs(cfg, 2 * n_pairs, rng_seed)
    return noisy_dataset_from_runs(cfg, clean, seeds, noise, rng_seed)


def noisy_dataset_from_runs(cfg: VqeConfig, clean, seeds, noise: NoiseSpec | None, rng_seed: int) -> Dataset:
    pairs = pair_runs(apply_trajectory_noise(clean, noise, rng_seed))
    meta = _metadata(cfg, noise, rng_seed, seeds, ground_state(cfg.hamiltonian))
    meta["pairing"] = "run_i with run_{N+i}"
    return Dataset(pairs, meta)


def generate_test_set(cfg: VqeConfig, n_states: int, noise: NoiseSpec | None, rng_seed: int) -> TestSet:
    if n_states < 1:
        raise ValueError("need at least one test state")
    if noise is not None and noise.mode != "trajectory":
        raise ValueError("dataset generation samples noise trajectories; use mode='trajectory'")
    clean, seeds = vqe_runs(cfg, n_states, rng_seed)
    return noisy_test_set_from_runs(cfg, clean, seeds, noise, rng_seed)


def noisy_test_set_from_runs(cfg: VqeConfig, clean, seeds, noise: NoiseSpec | None, rng_seed: int) -> TestSet:
    states = apply_trajectory_noise(clean, noise, rng_seed)
    return TestSet(states, _metadata(cfg, noise, rng_seed, seeds, ground_state(cfg.hamiltonian)))
