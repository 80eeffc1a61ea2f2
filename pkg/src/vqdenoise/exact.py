"""Dense diagonalization used as ground truth for every evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import Observable, build_tfim
from .state import QuantumState, entanglement_entropy

MAX_EXACT_QUBITS = 12
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True, eq=False)
class GroundTruth:
    energy: float
    state: QuantumState
    degenerate: bool
    # orthonormal basis of the lowest eigenspace, shape (2^n, g)
    subspace: np.ndarray

    def fidelity(self, state: QuantumState) -> float:
        """Overlap with the ground-space projector (plain ground-state fidelity when non-degenerate)."""
        basis = self.subspace
        if state.is_pure:
            amps = basis.conj().T @ state.data
            f = np.sum(np.abs(amps) ** 2)
        else:
            f = np.einsum("ig,ij,jg->", basis.conj(), state.data, basis).real
        return float(min(max(f, 0.0), 1.0))

    def to_json(self) -> dict:
        return {
            "energy": self.energy,
            "degenerate": self.degenerate,
            "state": self.state.to_json(),
            "subspace": [QuantumState.pure(v).to_json() for v in self.subspace.T],
        }

    @classmethod
    def from_json(cls, obj: dict) -> GroundTruth:
        vecs = [QuantumState.from_json(v).data for v in obj["subspace"]]
        return cls(float(obj["energy"]), QuantumState.from_json(obj["state"]), bool(obj["degenerate"]),
                   np.stack(vecs, axis=1))


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(vec))
    return vec * (abs(vec[k]) / vec[k])


def ground_state(obs: Observable) -> GroundTruth:
    """Lowest eigenpair of the dense Hamiltonian.

    When the lowest level is degenerate (gap below ``DEGENERACY_GAP``) the
    returned vector is the normalized projection of |+...+> onto the ground
    space, which picks the spin-flip-symmetric state for Ising chains; the full
    ground space is kept in ``subspace`` for projector fidelities.
    """
    n = obs.num_qubits
    if n > MAX_EXACT_QUBITS:
        raise ValueError(f"exact diagonalization limited to {MAX_EXACT_QUBITS} qubits, got {n}")
    h = obs.to_matrix()
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    e0 = float(w[0])
    in_ground = np.abs(w - e0) < DEGENERACY_GAP
    subspace = v[:, in_ground]
    degenerate = subspace.shape[1] > 1
    vec = v[:, 0]
    if degenerate:
        plus = np.full(2**n, 2 ** (-n / 2), dtype=complex)
        proj = subspace @ (subspace.conj().T @ plus)
        norm = np.linalg.norm(proj)
        if norm > 1e-6:
            vec = proj / norm
    return GroundTruth(e0, QuantumState(n, _fix_phase(vec)), degenerate, subspace)


def reduced_ground_state(obs: Observable, keep: int) -> QuantumState:
    """Reduced density matrix of the first ``keep`` qubits of the ground state."""
    n = obs.num_qubits
    if not 1 <= keep < n:
        raise ValueError(f"keep must satisfy 1 <= keep < {n}, got {keep}")
    psi = ground_state(obs).state.data.reshape(2**keep, 2 ** (n - keep))
    return QuantumState(keep, psi @ psi.conj().T)


def entropy_curve(n_spins: int, g_values, base: float = 2.0) -> list[tuple[float, float]]:
    """Half-chain entanglement entropy of the open TFIM ground state for each field value."""
    if n_spins < 2:
        raise ValueError("need at least two spins for a bipartition")
    out = []
    for g in g_values:
        gs = ground_state(build_tfim(n_spins, g))
        out.append((float(g), entanglement_entropy(gs.state, n_spins // 2, base=base)))
    return out
