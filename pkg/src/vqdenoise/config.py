"""Experiment configuration: one JSON file describing Hamiltonian, data, model and training."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .ansatz import VARIANTS, AnsatzSpec
from .optim import TrainConfig
from .pauli import Observable, build_tfim, load_observable, parse_observable
from .qae import GateNoise, validate_topology
from .seeding import derive_seed
from .state import NoiseSpec

BUNDLED_HAMILTONIANS = ("synthetic_2q",)


def bundled_hamiltonian_path(name: str):
    if name not in BUNDLED_HAMILTONIANS:
        raise ValueError(f"unknown bundled Hamiltonian {name!r}; available: {BUNDLED_HAMILTONIANS}")
    return resources.files("vqdenoise") / "data" / f"{name}.json"


def _reject_unknown(cls, obj: dict, section: str) -> None:
    unknown = set(obj) - {f.name for f in fields(cls)}
    if unknown:
        raise ValueError(f"unknown keys in '{section}': {sorted(unknown)}")


@dataclass(frozen=True)
class HamiltonianSource:
    """``tfim`` (n_spins, g), ``file`` (path) or ``bundled`` (name)."""

    kind: str = "tfim"
    n_spins: int = 4
    g: float = 1.0
    path: str | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("tfim", "file", "bundled"):
            raise ValueError(f"hamiltonian kind must be 'tfim', 'file' or 'bundled', got {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("hamiltonian kind 'file' needs a 'path'")
        if self.kind == "bundled" and self.name not in BUNDLED_HAMILTONIANS:
            raise ValueError(f"unknown bundled Hamiltonian {self.name!r}; available: {BUNDLED_HAMILTONIANS}")
        if self.kind == "tfim" and self.n_spins < 1:
            raise ValueError("n_spins must be at least 1")

    def build(self) -> Observable:
        if self.kind == "tfim":
            return build_tfim(self.n_spins, self.g)
        if self.kind == "file":
            return load_observable(self.path)
        return parse_observable(json.loads(bundled_hamiltonian_path(self.name).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        if self.kind == "tfim":
            return {"kind": "tfim", "n_spins": self.n_spins, "g": self.g}
        if self.kind == "file":
            return {"kind": "file", "path": self.path}
        return {"kind": "bundled", "name": self.name}


@dataclass(frozen=True)
class VqeSection:
    depth: int = 1
    # None means 4 x (number of qubits)
    iterations: int | None = None
    shots: int | None = None
    eta: float = 0.1
    epsilon: float = 0.1
    directions: int = 2


@dataclass(frozen=True)
class DataSection:
    n_train_pairs: int = 100
    n_test: int = 1000
    noise: NoiseSpec | None = None

    def __post_init__(self) -> None:
        if self.n_train_pairs < 1:
            raise ValueError(f"n_train_pairs must be at least 1, got {self.n_train_pairs}")
        if self.n_test < 1:
            raise ValueError(f"n_test must be at least 1, got {self.n_test}")


@dataclass(frozen=True)
class QaeSection:
    # None means [n, 1, n] for an n-qubit Hamiltonian
    topology: tuple[int, ...] | None = None
    ansatz: str = "RY_CZ"
    blocks: int = 3
    noise_1q: float = 0.0
    noise_2q: float = 0.0

    def __post_init__(self) -> None:
        if self.topology is not None:
            object.__setattr__(self, "topology", validate_topology(self.topology))
        if self.ansatz not in VARIANTS:
            raise ValueError(f"unknown ansatz variant {self.ansatz!r}; expected one of {VARIANTS}")
        GateNoise(self.noise_1q, self.noise_2q)

    @property
    def spec(self) -> AnsatzSpec:
        return AnsatzSpec(self.ansatz, self.blocks)

    def resolved_topology(self, width: int) -> tuple[int, ...]:
        return self.topology if self.topology is not None else (width, 1, width)

    @property
    def gate_noise(self) -> GateNoise | None:
        if self.noise_1q == 0.0 and self.noise_2q == 0.0:
            return None
        return GateNoise(self.noise_1q, self.noise_2q)


@dataclass(frozen=True)
class ExperimentConfig:
    hamiltonian: HamiltonianSource = field(default_factory=HamiltonianSource)
    vqe: VqeSection = field(default_factory=VqeSection)
    data: DataSection = field(default_factory=DataSection)
    qae: QaeSection = field(default_factory=QaeSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "runs"
    seed: int = 0

    def seed_for(self, tag: str, *indices: int) -> int:
        return derive_seed(self.seed, tag, *indices)

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> ExperimentConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg

    def validate_widths(self, width: int) -> None:
        topo = self.qae.resolved_topology(width)
        if topo[0] != width:
            raise ValueError(f"QAE topology {list(topo)} does not match the {width}-qubit Hamiltonian")

    @classmethod
    def from_dict(cls, obj: dict) -> ExperimentConfig:
        _reject_unknown(cls, obj, "config")
        ham = dict(obj.get("hamiltonian", {}))
        _reject_unknown(HamiltonianSource, ham, "hamiltonian")
        vqe = dict(obj.get("vqe", {}))
        _reject_unknown(VqeSection, vqe, "vqe")
        data = dict(obj.get("data", {}))
        _reject_unknown(DataSection, data, "data")
        if data.get("noise") is not None:
            data["noise"] = NoiseSpec.from_json(data["noise"])
        qae = dict(obj.get("qae", {}))
        _reject_unknown(QaeSection, qae, "qae")
        if qae.get("topology") is not None:
            qae["topology"] = tuple(qae["topology"])
        train = dict(obj.get("train", {}))
        if "rng_seed" in train:
            raise ValueError("'train.rng_seed' is derived from the master 'seed'; remove it from the config")
        return cls(
            hamiltonian=HamiltonianSource(**ham),
            vqe=VqeSection(**vqe),
            data=DataSection(**data),
            qae=QaeSection(**qae),
            train=TrainConfig.from_dict(train),
            output_dir=str(obj.get("output_dir", "runs")),
            seed=int(obj.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        train = self.train.to_dict()
        train.pop("rng_seed")
        qae = asdict(self.qae)
        if qae["topology"] is not None:
            qae["topology"] = list(qae["topology"])
        return {
            "hamiltonian": self.hamiltonian.to_dict(),
            "vqe": asdict(self.vqe),
            "data": {
                "n_train_pairs": self.data.n_train_pairs,
                "n_test": self.data.n_test,
                "noise": None if self.data.noise is None else self.data.noise.to_json(),
            },
            "qae": qae,
            "train": train,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }


def load_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(obj)
