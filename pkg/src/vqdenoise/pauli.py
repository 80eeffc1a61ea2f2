"""Real-weighted Pauli-sum observables, expectation values, and the TFIM Hamiltonian."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from pathlib import Path

import numpy as np

from .state import PAULI, DimensionError, QuantumState

PAULI_ALPHABET = frozenset("IXYZ")


class HamiltonianFormatError(ValueError):
    """A Hamiltonian file could not be parsed or validated."""


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    pauli: str

    def __post_init__(self) -> None:
        if not self.pauli or set(self.pauli) - PAULI_ALPHABET:
            raise ValueError(f"invalid Pauli string {self.pauli!r}")
        if isinstance(self.coeff, complex) or not math.isfinite(self.coeff):
            raise ValueError(f"coefficient must be a finite real number, got {self.coeff!r}")
        object.__setattr__(self, "coeff", float(self.coeff))


@dataclass(frozen=True)
class Observable:
    num_qubits: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        object.__setattr__(self, "terms", tuple(self.terms))
        for idx, term in enumerate(self.terms):
            if len(term.pauli) != self.num_qubits:
                raise ValueError(
                    f"term {idx} ({term.pauli!r}) has length {len(term.pauli)}, expected {self.num_qubits}"
                )

    @classmethod
    def from_terms(cls, terms) -> Observable:
        """Build from ``(coeff, pauli)`` pairs."""
        terms = [PauliTerm(c, p) for c, p in terms]
        if not terms:
            raise ValueError("need at least one term to infer the qubit count")
        return cls(len(terms[0].pauli), tuple(terms))

    def __add__(self, other: Observable) -> Observable:
        if other.num_qubits != self.num_qubits:
            raise DimensionError("observables act on different qubit counts")
        return Observable(self.num_qubits, self.terms + other.terms)

    def __mul__(self, scalar: float) -> Observable:
        return Observable(self.num_qubits, tuple(PauliTerm(scalar * t.coeff, t.pauli) for t in self.terms))

    __rmul__ = __mul__

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix built from Kronecker products."""
        dim = 2**self.num_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += t.coeff * reduce(np.kron, (PAULI[c] for c in t.pauli))
        return out

    def to_json(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "terms": [{"coeff": t.coeff, "pauli": t.pauli} for t in self.terms],
        }


def _masks(pauli: str) -> tuple[int, int, int]:
    n = len(pauli)
    xmask = zmask = 0
    ny = 0
    for k, c in enumerate(pauli):
        bit = 1 << (n - 1 - k)
        if c in "XY":
            xmask |= bit
        if c in "ZY":
            zmask |= bit
        ny += c == "Y"
    return xmask, zmask, ny


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    par = np.zeros_like(v)
    while np.any(v):
        par ^= v & 1
        v >>= 1
    return par


@lru_cache(maxsize=4096)
def _action(pauli: str) -> tuple[np.ndarray, np.ndarray]:
    """Flipped basis indices and phases of P|i> = phase_i |i ^ xmask>."""
    idx = np.arange(2 ** len(pauli))
    xmask, zmask, ny = _masks(pauli)
    phase = (1j) ** ny * (1 - 2 * _parity(idx & zmask))
    flipped = idx ^ xmask
    phase.setflags(write=False)
    flipped.setflags(write=False)
    return flipped, phase


def pauli_expectation(pauli: str, state: QuantumState) -> float:
    """<P> computed from the bit-flip/phase action of P on basis indices."""
    if len(pauli) != state.num_qubits:
        raise DimensionError(f"Pauli string {pauli!r} on {len(pauli)} qubits, state on {state.num_qubits}")
    flipped, phase = _action(pauli)
    if state.is_pure:
        psi = state.data
        val = np.sum(psi[flipped].conj() * phase * psi)
    else:
        val = np.sum(phase * state.data[np.arange(len(flipped)), flipped])
    return float(val.real)


@lru_cache(maxsize=256)
def _grouped_action(obs: Observable) -> list[tuple[np.ndarray, np.ndarray]]:
    """Terms sharing an X-mask act as one weighted permutation: (flipped indices, summed weights)."""
    groups: dict[int, np.ndarray] = {}
    flips: dict[int, np.ndarray] = {}
    for t in obs.terms:
        flipped, phase = _action(t.pauli)
        xmask = int(flipped[0])
        groups[xmask] = groups.get(xmask, 0) + t.coeff * phase
        flips[xmask] = flipped
    return [(flips[x], np.asarray(groups[x], dtype=complex)) for x in sorted(groups)]


def expectation(obs: Observable, state: QuantumState) -> float:
    if obs.num_qubits != state.num_qubits:
        raise DimensionError(f"observable on {obs.num_qubits} qubits, state on {state.num_qubits}")
    total = 0.0
    data = state.data
    if state.is_pure:
        for flipped, weight in _grouped_action(obs):
            total += np.sum(data[flipped].conj() * weight * data).real
    else:
        idx = np.arange(data.shape[0])
        for flipped, weight in _grouped_action(obs):
            total += np.sum(weight * data[idx, flipped]).real
    return float(total)


def build_tfim(n_spins: int, g: float) -> Observable:
    """H = -sum Z_i Z_{i+1} - g sum X_i on an open chain."""
    if n_spins < 1:
        raise ValueError("n_spins must be at least 1")
    terms = []
    for i in range(n_spins - 1):
        terms.append(PauliTerm(-1.0, "I" * i + "ZZ" + "I" * (n_spins - i - 2)))
    if g != 0.0:
        for i in range(n_spins):
            terms.append(PauliTerm(-float(g), "I" * i + "X" + "I" * (n_spins - i - 1)))
    return Observable(n_spins, tuple(terms))


def parse_observable(obj) -> Observable:
    if not isinstance(obj, dict) or "num_qubits" not in obj or "terms" not in obj:
        raise HamiltonianFormatError("expected an object with 'num_qubits' and 'terms'")
    n = obj["num_qubits"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise HamiltonianFormatError(f"num_qubits must be a positive integer, got {n!r}")
    if not isinstance(obj["terms"], list):
        raise HamiltonianFormatError("'terms' must be a list")
    terms = []
    for idx, raw in enumerate(obj["terms"]):
        try:
            coeff, pauli = raw["coeff"], raw["pauli"]
        except (TypeError, KeyError):
            raise HamiltonianFormatError(f"term {idx}: expected keys 'coeff' and 'pauli'") from None
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool) or not math.isfinite(coeff):
            raise HamiltonianFormatError(f"term {idx}: coefficient {coeff!r} is not a finite real number")
        if not isinstance(pauli, str) or set(pauli) - PAULI_ALPHABET or not pauli:
            raise HamiltonianFormatError(f"term {idx}: invalid Pauli string {pauli!r}")
        if len(pauli) != n:
            raise HamiltonianFormatError(f"term {idx}: Pauli string {pauli!r} has length {len(pauli)}, expected {n}")
        terms.append(PauliTerm(float(coeff), pauli))
    return Observable(n, tuple(terms))


def load_observable(path) -> Observable:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HamiltonianFormatError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        return parse_observable(obj)
    except HamiltonianFormatError as exc:
        raise HamiltonianFormatError(f"{path}: {exc}") from None


def save_observable(obs: Observable, path) -> None:
    Path(path).write_text(json.dumps(obs.to_json(), indent=1) + "\n", encoding="utf-8")
