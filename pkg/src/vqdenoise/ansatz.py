"""Parameterized unitaries: QAE block ansatzes, the full-QNN baseline, and the two-local VQE circuit.

Block ansatz layout (circuit order, first gate first)::

    for l in 1..L:  rotation layer theta_l on every qubit, then the entangler
    final rotation layer theta_{L+1}

Parameters are flattened layer-major, then qubit-ascending, then rotation
order as listed in ``ROTATIONS``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .state import PAULI, GateOp, QuantumState, apply_matrix

# Rotation gates per qubit per layer, applied in the listed order.
# RZYY is read literally as RZ then RY then RY (a naming convention, not a
# decomposition given anywhere; the two RY collapse to one rotation).
ROTATIONS = {
    "RY_CZ": ("RY",),
    "RY_CX": ("RY",),
    "RYZ_CZ": ("RY", "RZ"),
    "RY_CAN": ("RY",),
    "RYZ_CAN": ("RY", "RZ"),
    "RZYY_CAN": ("RZ", "RY", "RY"),
}
ENTANGLER = {name: name.rsplit("_", 1)[1] for name in ROTATIONS}
VARIANTS = tuple(ROTATIONS) + ("FULL_QNN",)

MAX_QNN_WIDTH = 4


@dataclass(frozen=True)
class AnsatzSpec:
    variant: str = "RY_CZ"
    blocks: int = 1

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown ansatz variant {self.variant!r}; expected one of {VARIANTS}")
        if self.blocks < 0:
            raise ValueError("number of blocks must be non-negative")


def circular_pairs(width: int) -> list[tuple[int, int]]:
    if width == 1:
        return []
    if width == 2:
        return [(0, 1)]
    return [(k, (k + 1) % width) for k in range(width)]


def block_param_count(spec: AnsatzSpec, width: int) -> int:
    if width < 1:
        raise ValueError("block width must be at least 1")
    if spec.variant == "FULL_QNN":
        return 4**width
    return (spec.blocks + 1) * width * len(ROTATIONS[spec.variant])


def block_layers(spec: AnsatzSpec, width: int, params) -> list[tuple[str, list[GateOp]]]:
    """Gate layers of one block as ``("rot" | "ent" | "unitary", gates)`` in circuit order."""
    params = np.asarray(params, dtype=float)
    expected = block_param_count(spec, width)
    if params.shape != (expected,):
        raise ValueError(f"{spec.variant} block on {width} qubits needs {expected} parameters, got {params.size}")
    if spec.variant == "FULL_QNN":
        return [("unitary", [GateOp("UNITARY", tuple(range(width)), matrix=build_full_qnn_unitary(width, params))])]
    rots = ROTATIONS[spec.variant]
    ent = ENTANGLER[spec.variant]
    per_layer = width * len(rots)
    layers = []
    for l in range(spec.blocks + 1):
        theta = params[l * per_layer:(l + 1) * per_layer].reshape(width, len(rots))
        layers.append(
            ("rot", [GateOp(kind, (q,), angle=theta[q, r]) for q in range(width) for r, kind in enumerate(rots)])
        )
        if l < spec.blocks:
            pairs = circular_pairs(width)
            if pairs:
                layers.append(("ent", [GateOp(ent, pair) for pair in pairs]))
    return layers


def build_block_unitary(spec: AnsatzSpec, width: int, params) -> np.ndarray:
    u = np.eye(2**width, dtype=complex)
    for _, gates in block_layers(spec, width, params):
        for gate in gates:
            u = apply_matrix(u, gate.unitary(), gate.targets, width)
    return u


def pauli_basis(width: int):
    """Pauli strings over {I,X,Y,Z}^width in lexicographic order, with their matrices."""
    for labels in itertools.product("IXYZ", repeat=width):
        yield "".join(labels), reduce(np.kron, (PAULI[c] for c in labels))


def build_full_qnn_unitary(width: int, coeffs) -> np.ndarray:
    """exp(iK) with K = sum_sigma k_sigma sigma over all Pauli strings of the block."""
    if width > MAX_QNN_WIDTH:
        raise ValueError(f"full-QNN blocks are limited to width {MAX_QNN_WIDTH}, got {width}")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (4**width,):
        raise ValueError(f"full-QNN block on {width} qubits needs {4**width} coefficients, got {coeffs.size}")
    k = np.zeros((2**width, 2**width), dtype=complex)
    for c, (_, sigma) in zip(coeffs, pauli_basis(width)):
        if c != 0.0:
            k += c * sigma
    w, v = np.linalg.eigh(k)
    return (v * np.exp(1j * w)) @ v.conj().T


# --- two-local VQE ansatz ---------------------------------------------------------


@dataclass(frozen=True)
class TwoLocalSpec:
    """RY(z1) RZ(z2) on every qubit, alternating with linear CX chains.

    Stored angle count is 2 Q (D + 1): ``D + 1`` rotation layers of two angles
    per qubit, ordered layer-major, qubit-ascending, (RY angle, RZ angle).
    """

    num_qubits: int
    depth: int = 1

    def __post_init__(self) -> None:
        if self.num_qubits < 1 or self.depth < 0:
            raise ValueError("two-local ansatz needs num_qubits >= 1 and depth >= 0")

    @property
    def num_params(self) -> int:
        return 2 * self.num_qubits * (self.depth + 1)


def _rotation_layer(vec: np.ndarray, angles: np.ndarray, n: int) -> np.ndarray:
    # U_R = RY(z1) RZ(z2): RZ acts first
    mats = ry_rz(angles[:, 0], angles[:, 1])
    for q in range(n):
        vec = (mats[q] @ vec.reshape(2**q, 2, -1)).reshape(-1)
    return vec


def ry_rz(a, b) -> np.ndarray:
    """RY(a) RZ(b); broadcasts over array arguments, returning (..., 2, 2)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    ca, sa = np.cos(a / 2), np.sin(a / 2)
    e_m, e_p = np.exp(-0.5j * b), np.exp(0.5j * b)
    return np.stack([np.stack([ca * e_m, -sa * e_p], -1), np.stack([sa * e_m, ca * e_p], -1)], -2)


@lru_cache(maxsize=None)
def _cx_chain_permutation(n: int) -> np.ndarray:
    """Index map for CX(0,1) CX(1,2) ... CX(n-2,n-1) applied in that order: new = vec[perm]."""
    idx = np.arange(2**n)
    perm = idx.copy()
    for k in range(n - 1):
        control, target = 1 << (n - 1 - k), 1 << (n - 2 - k)
        perm = perm[np.where(idx & control, idx ^ target, idx)]
    perm.setflags(write=False)
    return perm


def two_local_amplitudes(spec: TwoLocalSpec, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.num_params,):
        raise ValueError(f"two-local ansatz needs {spec.num_params} angles, got {params.size}")
    n = spec.num_qubits
    angles = params.reshape(spec.depth + 1, n, 2)
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = 1.0
    vec = _rotation_layer(vec, angles[0], n)
    chain = _cx_chain_permutation(n)
    for d in range(1, spec.depth + 1):
        vec = vec[chain]
        vec = _rotation_layer(vec, angles[d], n)
    return vec


def build_two_local_state(spec: TwoLocalSpec, params) -> QuantumState:
    return QuantumState(spec.num_qubits, two_local_amplitudes(spec, params))
