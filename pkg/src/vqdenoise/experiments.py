"""Experiment drivers behind the CLI: data generation, training, evaluation, sweeps and scans."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .ansatz import AnsatzSpec
from .config import ExperimentConfig
from .exact import GroundTruth, reduced_ground_state
from .optim import dataset_cost, train
from .pauli import Observable, expectation
from .qae import QaeModel, forward_batch, forward_subsystem, init_model, stack_states, total_param_count
from .state import NoiseSpec, QuantumState, fidelity_uhlmann, state_overlap
from .vqe import (
    Dataset,
    TestSet,
    VqeConfig,
    hamiltonian_from_meta,
    noisy_dataset_from_runs,
    noisy_test_set_from_runs,
    vqe_runs,
)

VERY_NOISY_FIDELITY = 0.2


def fmt(x) -> str:
    """Numbers as written to CSV: 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# --- data and training ---------------------------------------------------------------


def vqe_config(cfg: ExperimentConfig, hamiltonian: Observable) -> VqeConfig:
    v = cfg.vqe
    iterations = v.iterations if v.iterations is not None else 4 * hamiltonian.num_qubits
    return VqeConfig(hamiltonian, iterations, v.depth, shots=v.shots, eta=v.eta, epsilon=v.epsilon,
                     directions=v.directions)


def generate_data(cfg: ExperimentConfig, noise: NoiseSpec | None = None) -> tuple[Dataset, TestSet]:
    """Training pairs and test states; ``noise`` overrides the configured noise when given."""
    h = cfg.hamiltonian.build()
    cfg.validate_widths(h.num_qubits)
    noise = cfg.data.noise if noise is None else noise
    vcfg = vqe_config(cfg, h)
    train_seed, test_seed = cfg.seed_for("vqe-train"), cfg.seed_for("vqe-test")
    clean, seeds = vqe_runs(vcfg, 2 * cfg.data.n_train_pairs, train_seed)
    dataset = noisy_dataset_from_runs(vcfg, clean, seeds, noise, train_seed)
    clean, seeds = vqe_runs(vcfg, cfg.data.n_test, test_seed)
    return dataset, noisy_test_set_from_runs(vcfg, clean, seeds, noise, test_seed)


def initial_model(cfg: ExperimentConfig, width: int) -> QaeModel:
    model = init_model(cfg.qae.resolved_topology(width), cfg.qae.spec, cfg.seed_for("qae-init"))
    return replace(model, gate_noise=cfg.qae.gate_noise)


def train_model(cfg: ExperimentConfig, dataset: Dataset):
    width = dataset.num_qubits
    topo = cfg.qae.resolved_topology(width)
    if topo[0] != width:
        raise ValueError(f"dataset states have {width} qubits but the QAE topology is {list(topo)}")
    train_cfg = replace(cfg.train, rng_seed=cfg.seed_for("qae-train"))
    return train(initial_model(cfg, width), dataset, train_cfg)


# --- evaluation --------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    index: int
    energy_noisy: float
    energy_denoised: float
    fidelity_noisy: float
    fidelity_denoised: float


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(np.mean(v)), "std": float(np.std(v)), "median": float(np.median(v))}


@dataclass
class EvalReport:
    ground_energy: float
    records: list[EvalRecord]

    def abs_delta_e(self, which: str) -> np.ndarray:
        key = "energy_noisy" if which == "noisy" else "energy_denoised"
        return np.array([abs(getattr(r, key) - self.ground_energy) for r in self.records])

    def fidelities(self, which: str) -> np.ndarray:
        key = "fidelity_noisy" if which == "noisy" else "fidelity_denoised"
        return np.array([getattr(r, key) for r in self.records])

    def summary(self) -> dict:
        out = {"n_samples": len(self.records), "ground_energy": self.ground_energy}
        for which in ("noisy", "denoised"):
            fid = self.fidelities(which)
            out[which] = {
                "abs_delta_e": _stats(self.abs_delta_e(which)),
                "fidelity": _stats(fid),
                "very_noisy_fraction": float(np.mean(fid < VERY_NOISY_FIDELITY)),
            }
        out["very_noisy_fraction"] = out["noisy"]["very_noisy_fraction"]
        return out

    def to_json(self) -> dict:
        return {"summary": self.summary(), "records": [asdict(r) for r in self.records]}

    def write(self, out_dir, stem: str = "report") -> None:
        out_dir = Path(out_dir)
        write_json(out_dir / f"{stem}.json", self.to_json())
        write_csv(
            out_dir / f"{stem}.csv",
            ["index", "energy_noisy", "energy_denoised", "abs_delta_e_noisy", "abs_delta_e_denoised",
             "fidelity_noisy", "fidelity_denoised"],
            [[r.index, r.energy_noisy, r.energy_denoised, abs(r.energy_noisy - self.ground_energy),
              abs(r.energy_denoised - self.ground_energy), r.fidelity_noisy, r.fidelity_denoised]
             for r in self.records],
        )


def denoise(model: QaeModel, states) -> list[QuantumState]:
    out = forward_batch(model, stack_states(states))
    return [QuantumState(model.topology[-1], rho) for rho in out]


def evaluate(model: QaeModel, test_set: TestSet, worst_k: int | None = None) -> EvalReport:
    """Energies and ground-state fidelities of each test state before and after denoising.

    ``worst_k`` restricts evaluation to the k test states with the highest noisy energy.
    """
    gt = test_set.ground_truth()
    h = hamiltonian_from_meta(test_set.metadata)
    if model.input_width != test_set.num_qubits:
        raise ValueError(f"model expects {model.input_width} qubits, test states have {test_set.num_qubits}")
    indices = list(range(len(test_set.states)))
    energies = [expectation(h, s) for s in test_set.states]
    if worst_k is not None:
        if not 1 <= worst_k <= len(indices):
            raise ValueError(f"worst_k must lie in [1, {len(indices)}], got {worst_k}")
        # stable sort keeps the lower index first among equal energies
        indices = sorted(indices, key=lambda i: -energies[i])[:worst_k]
        indices.sort()
    states = [test_set.states[i] for i in indices]
    outputs = denoise(model, states)
    records = [
        EvalRecord(i, energies[i], expectation(h, out), gt.fidelity(s), gt.fidelity(out))
        for i, s, out in zip(indices, states, outputs)
    ]
    return EvalReport(gt.energy, records)


# --- noise sweep -------------------------------------------------------------------------

SWEEP_HEADER = ["kind", "p", "mean_abs_delta_e_noisy", "mean_abs_delta_e_denoised",
                "mean_fidelity_noisy", "mean_fidelity_denoised", "very_noisy_fraction"]


def sweep_noise(cfg: ExperimentConfig, kind: str, strengths, progress=None) -> list[list]:
    """Per strength: add noise of ``kind`` to the same VQE runs, train a fresh model, evaluate.

    VQE runs are shared across strengths, so rows differ only through the noise.
    """
    strengths = [float(p) for p in strengths]
    for p in strengths:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"noise strength {p} outside [0, 1]")
    h = cfg.hamiltonian.build()
    cfg.validate_widths(h.num_qubits)
    vcfg = vqe_config(cfg, h)
    train_seed, test_seed = cfg.seed_for("vqe-train"), cfg.seed_for("vqe-test")
    train_runs = vqe_runs(vcfg, 2 * cfg.data.n_train_pairs, train_seed)
    test_runs = vqe_runs(vcfg, cfg.data.n_test, test_seed)
    rows = []
    for p in strengths:
        noise = NoiseSpec(kind, p)
        dataset = noisy_dataset_from_runs(vcfg, *train_runs, noise, train_seed)
        test_set = noisy_test_set_from_runs(vcfg, *test_runs, noise, test_seed)
        model, _ = train_model(cfg, dataset)
        s = evaluate(model, test_set).summary()
        rows.append([kind, p, s["noisy"]["abs_delta_e"]["mean"], s["denoised"]["abs_delta_e"]["mean"],
                     s["noisy"]["fidelity"]["mean"], s["denoised"]["fidelity"]["mean"], s["very_noisy_fraction"]])
        if progress is not None:
            progress(rows[-1])
    return rows


# --- landscape scan ------------------------------------------------------------------------


def landscape(model: QaeModel, dataset: Dataset, i: int, j: int, half_width: float = 0.5, grid: int = 11,
              test_set: TestSet | None = None) -> list[list]:
    """Training cost (and mean test fidelity) on a grid around the trained (theta_i, theta_j).

    Rows are ``[grid_i, grid_j, theta_i, theta_j, train_cost(, test_fidelity)]``.
    """
    p = model.num_params
    if not (0 <= i < p and 0 <= j < p):
        raise IndexError(f"parameter indices must lie in [0, {p}), got ({i}, {j})")
    if i == j:
        raise ValueError("landscape axes must be two different parameters")
    if grid < 2:
        raise ValueError("grid needs at least 2 points per axis")
    if half_width < 0:
        raise ValueError("half_width must be non-negative")
    gt = test_set.ground_truth() if test_set is not None else None
    axis_i = model.params[i] + np.linspace(-half_width, half_width, grid)
    axis_j = model.params[j] + np.linspace(-half_width, half_width, grid)
    rows = []
    for a, ti in enumerate(axis_i):
        for b, tj in enumerate(axis_j):
            theta = model.params.copy()
            theta[i], theta[j] = ti, tj
            probe = model.with_params(theta)
            row = [a, b, float(ti), float(tj), dataset_cost(probe, dataset.pairs)]
            if test_set is not None:
                outs = denoise(probe, test_set.states)
                row.append(math.fsum(gt.fidelity(o) for o in outs) / len(outs))
            rows.append(row)
    return rows


def landscape_header(with_test: bool) -> list[str]:
    head = ["grid_i", "grid_j", "theta_i", "theta_j", "train_cost"]
    return head + ["test_fidelity"] if with_test else head


# --- subsystem analysis ---------------------------------------------------------------------

SUBSYSTEM_METRICS = ("uhlmann", "overlap")


def subsystem_fidelities(model: QaeModel, test_set: TestSet, ks, metric: str = "uhlmann") -> list[list]:
    """Rows ``[k, mean, std]``: outputs with k active final neurons vs the ground state's first k qubits.

    For ``k = m_M`` the full ground state is used with the same projector fidelity as evaluation.
    """
    if metric not in SUBSYSTEM_METRICS:
        raise ValueError(f"metric must be one of {SUBSYSTEM_METRICS}, got {metric!r}")
    m_out = model.topology[-1]
    h = hamiltonian_from_meta(test_set.metadata)
    gt = test_set.ground_truth()
    rows = []
    for k in ks:
        if not 1 <= k <= m_out:
            raise ValueError(f"k must lie in [1, {m_out}], got {k}")
        target = None if k == m_out else reduced_ground_state(h, k)
        vals = [_subsystem_value(forward_subsystem(model, s, k), target, gt, metric) for s in test_set.states]
        rows.append([k, float(np.mean(vals)), float(np.std(vals))])
    return rows


def _subsystem_value(out: QuantumState, target: QuantumState | None, gt: GroundTruth, metric: str) -> float:
    if target is None:
        return gt.fidelity(out) if metric == "uhlmann" else state_overlap(gt.state, out)
    return fidelity_uhlmann(target, out) if metric == "uhlmann" else state_overlap(target, out)


# --- parameter counts ------------------------------------------------------------------------


def param_count_rows(topology, variant: str, blocks: int) -> list[list]:
    """Rows ``[label, count]`` for the requested ansatz and the full-QNN baseline."""
    return [
        [f"{variant} L={blocks}", total_param_count(topology, AnsatzSpec(variant, blocks))],
        ["FULL_QNN", total_param_count(topology, AnsatzSpec("FULL_QNN"))],
    ]
