"""Dissipative quantum autoencoder built from per-neuron ansatz blocks.

Layer ``i`` (0-based here) maps ``m_i`` qubits to ``m_{i+1}`` qubits: the input
is extended with ``m_{i+1}`` zero ancillas (appended after the inputs), the
neuron unitaries ``U_j`` act on all inputs plus ancilla ``j`` in ascending
``j``, and the inputs are traced out. Decoder layers use the same construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import state as qs
from .ansatz import AnsatzSpec, block_layers, block_param_count
from .state import DimensionError, QuantumState, apply_matrix


def validate_topology(layers: Sequence[int], require_mirror: bool = True) -> tuple[int, ...]:
    layers = tuple(int(m) for m in layers)
    if len(layers) < 2:
        raise ValueError("a QAE needs at least two layers")
    if any(m < 1 for m in layers):
        raise ValueError(f"layer widths must be positive, got {list(layers)}")
    if require_mirror and layers[0] != layers[-1]:
        raise ValueError(f"input and output widths differ: {list(layers)}")
    return layers


def total_param_count(topology: Sequence[int], ansatz: AnsatzSpec) -> int:
    topology = validate_topology(topology, require_mirror=False)
    return sum(m_next * block_param_count(ansatz, m + 1) for m, m_next in zip(topology, topology[1:]))


def qubit_requirements(topology: Sequence[int]) -> tuple[int, int]:
    """(QAE circuit width, full training-circuit width including the SWAP test)."""
    topology = validate_topology(topology, require_mirror=False)
    qae_width = max(a + b for a, b in zip(topology, topology[1:]))
    return qae_width, 1 + topology[0] + qae_width


@dataclass(frozen=True)
class GateNoise:
    """Depolarizing rates after every rotation layer (1q) and every entangling gate (2q)."""

    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self) -> None:
        for p in (self.p1, self.p2):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"depolarizing rate {p} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class QaeModel:
    topology: tuple[int, ...]
    ansatz: AnsatzSpec
    params: np.ndarray
    gate_noise: GateNoise | None = None

    def __post_init__(self) -> None:
        topo = validate_topology(self.topology)
        object.__setattr__(self, "topology", topo)
        params = np.array(self.params, dtype=float).reshape(-1)
        expected = total_param_count(topo, self.ansatz)
        if params.size != expected:
            raise ValueError(f"model needs {expected} parameters, got {params.size}")
        params.setflags(write=False)
        object.__setattr__(self, "params", params)

    @property
    def num_params(self) -> int:
        return self.params.size

    @property
    def input_width(self) -> int:
        return self.topology[0]

    def with_params(self, params) -> QaeModel:
        return replace(self, params=params)

    def block_params(self, layer: int, neuron: int) -> np.ndarray:
        start = 0
        for i, (m, m_next) in enumerate(zip(self.topology, self.topology[1:])):
            size = block_param_count(self.ansatz, m + 1)
            if i == layer:
                if not 0 <= neuron < m_next:
                    raise IndexError(f"layer {layer} has {m_next} neurons")
                start += neuron * size
                return self.params[start:start + size]
            start += m_next * size
        raise IndexError(f"layer index {layer} out of range")

    def to_json(self) -> dict:
        obj = {
            "topology": list(self.topology),
            "ansatz": self.ansatz.variant,
            "blocks": self.ansatz.blocks,
            "params": [float(x) for x in self.params],
        }
        if self.gate_noise is not None:
            obj["gate_noise"] = {"p1": self.gate_noise.p1, "p2": self.gate_noise.p2}
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> QaeModel:
        noise = obj.get("gate_noise")
        return cls(
            tuple(obj["topology"]),
            AnsatzSpec(obj["ansatz"], int(obj["blocks"])),
            np.array(obj["params"], dtype=float),
            GateNoise(**noise) if noise else None,
        )


def init_model(topology: Sequence[int], ansatz: AnsatzSpec, rng_seed) -> QaeModel:
    """Parameters drawn uniformly from [-pi, pi)."""
    rng = np.random.default_rng(rng_seed)
    size = total_param_count(topology, ansatz)
    return QaeModel(tuple(topology), ansatz, rng.uniform(-np.pi, np.pi, size=size))


def zero_model(topology: Sequence[int], ansatz: AnsatzSpec) -> QaeModel:
    return QaeModel(tuple(topology), ansatz, np.zeros(total_param_count(topology, ansatz)))


def save_model(model: QaeModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_json()) + "\n", encoding="utf-8")


def load_model(path) -> QaeModel:
    return QaeModel.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def apply_internal_noise(model: QaeModel, p1: float, p2: float) -> QaeModel:
    """Copy of ``model`` whose forward passes simulate depolarizing gate noise."""
    return replace(model, gate_noise=GateNoise(p1, p2))


# --- noiseless channel via layer isometries -------------------------------------------


def _neuron_targets(m: int, neuron: int) -> list[int]:
    return list(range(m)) + [m + neuron]


def layer_isometry(model: QaeModel, layer: int, active: int | None = None) -> np.ndarray:
    """U^i restricted to zero ancillas: maps 2^m_i inputs into the (m_i + k)-qubit space.

    ``active`` keeps only the first ``active`` neurons of the layer.
    """
    if not 0 <= layer < len(model.topology) - 1:
        raise IndexError(f"layer index {layer} out of range for topology {list(model.topology)}")
    m = model.topology[layer]
    k = model.topology[layer + 1] if active is None else active
    n = m + k
    iso = np.zeros((2**n, 2**m), dtype=complex)
    iso[np.arange(2**m) * 2**k, np.arange(2**m)] = 1.0
    for j in range(k):
        local_to_joint = _neuron_targets(m, j)
        for _, gates in block_layers(model.ansatz, m + 1, model.block_params(layer, j)):
            for gate in gates:
                iso = apply_matrix(iso, gate.unitary(), [local_to_joint[q] for q in gate.targets], n)
    return iso


def _apply_isometry_batch(iso: np.ndarray, inputs: np.ndarray, m: int) -> np.ndarray:
    """Tr_inputs[V rho V^dagger] for a batch; ``inputs`` is (B, d) pure or (B, d, d) mixed."""
    da = 2**m
    dx = iso.shape[0] // da
    if inputs.ndim == 2:
        phi = (inputs @ iso.T).reshape(-1, da, dx)
        return np.einsum("bax,bay->bxy", phi, phi.conj())
    w = iso @ inputs @ iso.conj().T
    return np.einsum("baxay->bxy", w.reshape(-1, da, dx, da, dx))


def _uses_gate_noise(model: QaeModel) -> bool:
    return model.gate_noise is not None


def forward_batch(model: QaeModel, inputs: np.ndarray, active_last: int | None = None) -> np.ndarray:
    """Forward a stacked batch of inputs; returns density matrices of shape (B, D, D)."""
    inputs = np.asarray(inputs, dtype=complex)
    if inputs.shape[1] != 2 ** model.input_width:
        raise DimensionError(f"inputs of dimension {inputs.shape[1]} do not match a {model.input_width}-qubit QAE")
    if _uses_gate_noise(model):
        states = [QuantumState(model.input_width, x) for x in inputs]
        return np.stack([_forward_noisy(model, s, active_last).data for s in states])
    out = inputs
    n_layers = len(model.topology) - 1
    for i in range(n_layers):
        active = active_last if i == n_layers - 1 else None
        out = _apply_isometry_batch(layer_isometry(model, i, active), out, model.topology[i])
    return out


def forward_layer(model: QaeModel, layer: int, state: QuantumState, active: int | None = None) -> QuantumState:
    if not 0 <= layer < len(model.topology) - 1:
        raise IndexError(f"layer index {layer} out of range for topology {list(model.topology)}")
    m = model.topology[layer]
    if state.num_qubits != m:
        raise DimensionError(f"layer {layer} expects {m} qubits, got {state.num_qubits}")
    if _uses_gate_noise(model):
        return _noisy_layer(model, layer, state, active)
    out = _apply_isometry_batch(layer_isometry(model, layer, active), state.data[None], m)[0]
    return QuantumState.mixed(out)


def forward(model: QaeModel, state: QuantumState) -> QuantumState:
    """Decoder(Encoder(state)) as a mixed state on ``m_M`` qubits."""
    return forward_subsystem(model, state, model.topology[-1])


def forward_subsystem(model: QaeModel, state: QuantumState, active_last: int) -> QuantumState:
    """Forward with only the first ``active_last`` neurons of the final layer kept."""
    if not 1 <= active_last <= model.topology[-1]:
        raise ValueError(f"active neuron count must be in [1, {model.topology[-1]}], got {active_last}")
    if state.num_qubits != model.input_width:
        raise DimensionError(f"QAE expects {model.input_width} qubits, got {state.num_qubits}")
    n_layers = len(model.topology) - 1
    for i in range(n_layers):
        state = forward_layer(model, i, state, active_last if i == n_layers - 1 else None)
    return state


# --- gate-level density-matrix path (internal noise) -------------------------------------


def _noisy_layer(model: QaeModel, layer: int, state: QuantumState, active: int | None) -> QuantumState:
    noise = model.gate_noise or GateNoise()
    m = model.topology[layer]
    k = model.topology[layer + 1] if active is None else active
    depol = qs.NoiseSpec("depolarizing", noise.p1, mode="channel")
    rho = qs.extend_with_zeros(state.to_mixed(), k)
    for j in range(k):
        local_to_joint = _neuron_targets(m, j)
        for kind, gates in block_layers(model.ansatz, m + 1, model.block_params(layer, j)):
            for gate in gates:
                targets = [local_to_joint[q] for q in gate.targets]
                rho = qs.apply_unitary(rho, gate.unitary(), targets)
                if kind == "ent":
                    rho = qs.depolarize_pair(rho, noise.p2, targets)
            if kind in ("rot", "unitary"):
                rho = qs.apply_noise_channel(rho, depol, local_to_joint)
    return qs.partial_trace(rho, range(m))


def _forward_noisy(model: QaeModel, state: QuantumState, active_last: int | None) -> QuantumState:
    n_layers = len(model.topology) - 1
    for i in range(n_layers):
        state = _noisy_layer(model, i, state, active_last if i == n_layers - 1 else None)
    return state


# --- batch helpers used by training and evaluation ---------------------------------------


def stack_states(states: Sequence[QuantumState]) -> np.ndarray:
    """Stack as (B, d) amplitudes when all are pure, otherwise as (B, d, d) density matrices."""
    if all(s.is_pure for s in states):
        return np.stack([s.data for s in states])
    return np.stack([s.density_matrix() for s in states])


def batch_overlap(targets: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    """Tr(target_b output_b) per batch element (<a|sigma|a> for pure targets)."""
    if targets.ndim == 2:
        vals = np.einsum("bi,bij,bj->b", targets.conj(), outputs, targets)
    else:
        vals = np.einsum("bij,bji->b", targets, outputs)
    return vals.real
