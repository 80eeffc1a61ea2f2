"""Dense pure/mixed quantum states and the operations the rest of the package builds on.

Index convention: qubit 0 is the most significant bit of a basis index, so a
state on ``n`` qubits reshapes to a ``[2] * n`` tensor whose first axis is
qubit 0. Ancillas added by :func:`extend_with_zeros` become the highest-index
qubits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 14

ATOL_NORM = 1e-10
PSD_TOL = 1e-8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


class DimensionError(ValueError):
    """Raised when operands act on incompatible qubit counts."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure state (amplitude vector) or a mixed state (density matrix).

    Instances are treated as immutable values; every operation in this module
    returns a new state.
    """

    num_qubits: int
    data: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        dim = 2**self.num_qubits
        arr = np.asarray(self.data, dtype=complex)
        if arr.shape not in ((dim,), (dim, dim)):
            raise DimensionError(f"data of shape {arr.shape} does not describe {self.num_qubits} qubits")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def pure(cls, amplitudes) -> QuantumState:
        vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(_num_qubits_for(vec.shape[0]), vec)

    @classmethod
    def mixed(cls, rho) -> QuantumState:
        mat = np.asarray(rho, dtype=complex)
        return cls(_num_qubits_for(mat.shape[0]), mat)

    @classmethod
    def basis(cls, bits: str) -> QuantumState:
        """Computational basis state from a bit string, e.g. ``"01"``."""
        vec = np.zeros(2 ** len(bits), dtype=complex)
        vec[int(bits, 2)] = 1.0
        return cls(len(bits), vec)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def kind(self) -> str:
        return "pure" if self.is_pure else "mixed"

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data.copy()

    def to_mixed(self) -> QuantumState:
        return self if not self.is_pure else QuantumState(self.num_qubits, self.density_matrix())

    def trace(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def check(self, atol: float = ATOL_NORM) -> None:
        """Raise ``ValueError`` unless the state satisfies its physical invariants."""
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > atol:
                raise ValueError(f"pure state norm {norm} differs from 1")
            return
        rho = self.data
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > atol:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > atol:
            raise ValueError(f"density matrix trace {tr} differs from 1")
        min_eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if min_eig < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {min_eig:.3g}")

    def to_json(self) -> dict:
        flat = self.data.reshape(-1)
        return {
            "num_qubits": self.num_qubits,
            "kind": self.kind,
            "data": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json(cls, obj: dict) -> QuantumState:
        n = int(obj["num_qubits"])
        kind = obj["kind"]
        flat = np.array([complex(re, im) for re, im in obj["data"]], dtype=complex)
        if kind == "pure":
            return cls(n, flat)
        if kind == "mixed":
            return cls(n, flat.reshape(2**n, 2**n))
        raise ValueError(f"unknown state kind {kind!r}")


def _num_qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


# --- gates -------------------------------------------------------------------


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


def pauli_rotation2(pauli: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i theta/2 P⊗P) for a single-qubit Pauli ``P`` (P⊗P squares to identity)."""
    pp = np.kron(pauli, pauli)
    return np.cos(theta / 2) * np.eye(4) - 1j * np.sin(theta / 2) * pp


def can_gate() -> np.ndarray:
    """RXX(pi) RYY(pi) RZZ(pi)."""
    return pauli_rotation2(X, np.pi) @ pauli_rotation2(Y, np.pi) @ pauli_rotation2(Z, np.pi)


CAN = can_gate()

_FIXED_GATES = {"CX": CX, "CZ": CZ, "CAN": CAN}
_ROTATIONS = {"RX": rx, "RY": ry, "RZ": rz}


@dataclass(frozen=True, eq=False)
class GateOp:
    """A gate on ordered target qubits.

    ``kind`` is one of RX, RY, RZ (with ``angle``), CX, CZ, CAN, or UNITARY
    (with ``matrix``). For CX the first target is the control.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float = 0.0
    matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise IndexError(f"duplicate gate targets {self.targets}")
        if self.kind in _ROTATIONS:
            arity = 1
        elif self.kind in _FIXED_GATES:
            arity = 2
        elif self.kind == "UNITARY":
            if self.matrix is None:
                raise ValueError("UNITARY gate requires a matrix")
            arity = _num_qubits_for(np.shape(self.matrix)[0])
            u = np.asarray(self.matrix, dtype=complex)
            if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > ATOL_NORM:
                raise ValueError("gate matrix is not unitary")
            object.__setattr__(self, "matrix", u)
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != arity:
            raise IndexError(f"{self.kind} acts on {arity} qubit(s), got targets {self.targets}")

    def unitary(self) -> np.ndarray:
        if self.kind in _ROTATIONS:
            return _ROTATIONS[self.kind](self.angle)
        if self.kind in _FIXED_GATES:
            return _FIXED_GATES[self.kind]
        return self.matrix


def apply_matrix(arr: np.ndarray, mat: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply ``mat`` to the leading ``n`` qubit axes of ``arr`` (shape ``(2**n, ...)``).

    Trailing axes are carried along untouched, so the same kernel applies a
    gate to a state vector, to the columns of an operator, or to a batch.
    """
    k = len(targets)
    rest = arr.shape[1:]
    t = arr.reshape((2,) * n + rest)
    t = np.tensordot(mat.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the gate output axes first; move them back into place
    t = np.moveaxis(t, list(range(k)), list(targets))
    return t.reshape((2**n,) + rest)


def _check_targets(targets: Iterable[int], n: int) -> None:
    for q in targets:
        if not 0 <= q < n:
            raise IndexError(f"qubit index {q} out of range for {n} qubits")


def apply_unitary(state: QuantumState, mat: np.ndarray, targets: Sequence[int]) -> QuantumState:
    n = state.num_qubits
    _check_targets(targets, n)
    if len(set(targets)) != len(targets):
        raise IndexError(f"duplicate targets {tuple(targets)}")
    if state.is_pure:
        return QuantumState(n, apply_matrix(state.data, mat, targets, n))
    left = apply_matrix(state.data, mat, targets, n)
    right = apply_matrix(left.conj().T, mat, targets, n)
    return QuantumState(n, right.conj().T)


def apply_gate(state: QuantumState, gate: GateOp) -> QuantumState:
    return apply_unitary(state, gate.unitary(), gate.targets)


# --- tensor structure ----------------------------------------------------------


def extend_with_zeros(state: QuantumState, k: int) -> QuantumState:
    """state ⊗ |0...0> with the ``k`` ancillas appended as the highest-index qubits."""
    if k < 0:
        raise ValueError("ancilla count must be non-negative")
    if k == 0:
        return state
    zero = np.zeros(2**k, dtype=complex)
    zero[0] = 1.0
    if state.is_pure:
        return QuantumState(state.num_qubits + k, np.kron(state.data, zero))
    return QuantumState(state.num_qubits + k, np.kron(state.data, np.outer(zero, zero)))


def partial_trace(state: QuantumState, traced: Iterable[int]) -> QuantumState:
    """Trace out ``traced`` qubits; the remaining ones keep their relative order."""
    n = state.num_qubits
    traced = sorted(set(traced))
    _check_targets(traced, n)
    keep = [q for q in range(n) if q not in traced]
    if not keep:
        raise ValueError("cannot trace out every qubit")
    dk = 2 ** len(keep)
    if state.is_pure:
        psi = state.data.reshape((2,) * n).transpose(keep + traced).reshape(dk, -1)
        return QuantumState(len(keep), psi @ psi.conj().T)
    t = state.data.reshape((2,) * (2 * n))
    perm = keep + traced + [q + n for q in keep] + [q + n for q in traced]
    dt = 2 ** len(traced)
    t = t.transpose(perm).reshape(dk, dt, dk, dt)
    return QuantumState(len(keep), np.einsum("atbt->ab", t))


# --- fidelities ----------------------------------------------------------------


def _same_width(a: QuantumState, b: QuantumState) -> None:
    if a.num_qubits != b.num_qubits:
        raise DimensionError(f"states act on {a.num_qubits} and {b.num_qubits} qubits")


def fidelity_pure(target: QuantumState, state: QuantumState) -> float:
    """<psi|rho|psi> for a pure ``target``; |<psi|phi>|^2 if ``state`` is pure too."""
    if not target.is_pure:
        raise ValueError("fidelity_pure needs a pure target state")
    _same_width(target, state)
    psi = target.data
    if state.is_pure:
        f = abs(np.vdot(psi, state.data)) ** 2
    else:
        f = np.vdot(psi, state.data @ psi).real
    return float(min(max(f, 0.0), 1.0))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w.min() < -PSD_TOL:
        raise ValueError(f"state is not positive semidefinite (eigenvalue {w.min():.3g})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity_uhlmann(a: QuantumState, b: QuantumState) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2, computed as the squared trace norm of sqrt(a) sqrt(b).

    Singular values avoid taking square roots of round-off eigenvalues, which
    matters for rank-deficient (e.g. pure) arguments.
    """
    _same_width(a, b)
    sv = np.linalg.svd(_psd_sqrt(a.density_matrix()) @ _psd_sqrt(b.density_matrix()), compute_uv=False)
    f = np.sum(sv) ** 2
    return float(min(max(f, 0.0), 1.0))


def state_overlap(a: QuantumState, b: QuantumState) -> float:
    """Tr(a b); equals the SWAP-test quantity for arbitrary mixed inputs."""
    _same_width(a, b)
    if a.is_pure and b.is_pure:
        return float(abs(np.vdot(a.data, b.data)) ** 2)
    if a.is_pure:
        return float(np.vdot(a.data, b.data @ a.data).real)
    if b.is_pure:
        return float(np.vdot(b.data, a.data @ b.data).real)
    return float(np.einsum("ij,ji->", a.data, b.data).real)


def trace_distance(a: QuantumState, b: QuantumState) -> float:
    _same_width(a, b)
    diff = a.density_matrix() - b.density_matrix()
    return float(0.5 * np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


# --- noise -----------------------------------------------------------------------

NOISE_KINDS = ("bitflip", "depolarizing", "phaseflip")


@dataclass(frozen=True)
class NoiseSpec:
    """Independent per-qubit Pauli noise.

    ``mode="trajectory"`` samples one Pauli per qubit on a pure state;
    ``mode="channel"`` applies the averaged map to a density matrix.
    """

    kind: str
    p: float
    mode: str = "trajectory"

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability {self.p} outside [0, 1]")
        if self.mode not in ("trajectory", "channel"):
            raise ValueError(f"unknown noise mode {self.mode!r}")

    def pauli_distribution(self) -> list[tuple[str, float]]:
        p = self.p
        if self.kind == "bitflip":
            return [("I", 1 - p), ("X", p)]
        if self.kind == "phaseflip":
            return [("I", 1 - p), ("Z", p)]
        return [("I", 1 - 0.75 * p), ("X", p / 4), ("Y", p / 4), ("Z", p / 4)]

    def to_json(self) -> dict:
        return {"kind": self.kind, "p": self.p, "mode": self.mode}

    @classmethod
    def from_json(cls, obj: dict | None) -> NoiseSpec | None:
        if obj is None:
            return None
        return cls(obj["kind"], float(obj["p"]), obj.get("mode", "trajectory"))


def _pauli_mixture(rho: np.ndarray, dist, targets: Sequence[int], n: int) -> np.ndarray:
    out = np.zeros_like(rho)
    for mat, prob in dist:
        if prob == 0.0:
            continue
        left = apply_matrix(rho, mat, targets, n)
        out += prob * apply_matrix(left.conj().T, mat, targets, n).conj().T
    return out


def apply_noise_channel(state: QuantumState, noise: NoiseSpec, qubits: Iterable[int]) -> QuantumState:
    """Apply the noise map independently to each listed qubit; output is mixed."""
    n = state.num_qubits
    qubits = list(qubits)
    _check_targets(qubits, n)
    dist = [(PAULI[name], prob) for name, prob in noise.pauli_distribution()]
    rho = state.density_matrix()
    for q in qubits:
        rho = _pauli_mixture(rho, dist, [q], n)
    return QuantumState(n, rho)


def depolarize_pair(state: QuantumState, p: float, pair: Sequence[int]) -> QuantumState:
    """Two-qubit depolarizing map: identity with prob 1-15p/16, each other Pauli pair p/16."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability {p} outside [0, 1]")
    n = state.num_qubits
    _check_targets(pair, n)
    dist = []
    for a in "IXYZ":
        for b in "IXYZ":
            prob = 1 - 15 * p / 16 if a == b == "I" else p / 16
            dist.append((np.kron(PAULI[a], PAULI[b]), prob))
    return QuantumState(n, _pauli_mixture(state.density_matrix(), dist, list(pair), n))


def sample_noise_trajectory(state: QuantumState, noise: NoiseSpec, rng_seed) -> QuantumState:
    """Draw one Pauli per qubit from the noise distribution and apply it to a pure state."""
    if not state.is_pure:
        raise ValueError("trajectory sampling requires a pure state")
    rng = np.random.default_rng(rng_seed)
    names, probs = zip(*noise.pauli_distribution())
    probs = np.clip(np.array(probs), 0.0, None)
    choice = rng.choice(len(names), size=state.num_qubits, p=probs / probs.sum())
    vec = state.data
    n = state.num_qubits
    for q, idx in enumerate(choice):
        if names[idx] != "I":
            vec = apply_matrix(vec, PAULI[names[idx]], [q], n)
    return QuantumState(n, vec)


# --- entropy and measurement statistics ---------------------------------------------


def entanglement_entropy(state: QuantumState, cut: int, base: float = 2.0) -> float:
    """Von Neumann entropy of the first ``cut`` qubits of a pure state.

    ``base`` sets the logarithm; pass ``np.e`` for nats.
    """
    if not state.is_pure:
        raise ValueError("entanglement entropy is defined here for pure states")
    n = state.num_qubits
    if not 1 <= cut < n:
        raise ValueError(f"cut must satisfy 1 <= cut < {n}, got {cut}")
    s = np.linalg.svd(state.data.reshape(2**cut, -1), compute_uv=False)
    lam = s**2
    lam = lam[lam > 1e-12]
    return float(max(-np.sum(lam * np.log(lam)) / np.log(base), 0.0))


def swap_test_estimate(fidelity, shots: int, rng_seed):
    """Shot-limited SWAP-test estimate 2 k/S - 1 with k ~ Binomial(S, (1 + F)/2).

    Accepts a scalar or an array of fidelities; ``rng_seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    f = np.asarray(fidelity, dtype=float)
    if np.any(f < -1e-9) or np.any(f > 1 + 1e-9) or not np.all(np.isfinite(f)):
        raise ValueError("fidelity must lie in [0, 1]")
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(rng_seed)
    p0 = np.clip((1.0 + f) / 2.0, 0.0, 1.0)
    k = rng.binomial(shots, p0)
    est = 2.0 * k / shots - 1.0
    est = np.asarray(est)
    return float(est) if est.ndim == 0 else est


def random_pure_state(n: int, rng) -> QuantumState:
    rng = np.random.default_rng(rng)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return QuantumState(n, v / np.linalg.norm(v))


def random_mixed_state(n: int, rng, rank: int | None = None) -> QuantumState:
    rng = np.random.default_rng(rng)
    d = 2**n
    r = rank or d
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ g.conj().T
    return QuantumState(n, rho / np.trace(rho).real)
