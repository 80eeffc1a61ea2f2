"""Command-line entry point: ``vqdenoise <command> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .ansatz import VARIANTS
from .config import ExperimentConfig, load_config
from .exact import entropy_curve, ground_state
from .optim import write_history_csv
from .pauli import HamiltonianFormatError
from .qae import load_model, save_model
from .state import NOISE_KINDS, entanglement_entropy
from .vqe import load_dataset, load_test_set, save_json


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=default, help="master seed (overrides the config)")
    parser.add_argument("--out", default=default, help="output directory (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqdenoise", description="Denoise variational ground states with a quantum autoencoder.")
    _common(parser, suppress=False)
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate-data", parents=[common], help="write train.json and test.json")

    p = sub.add_parser("train", parents=[common], help="train a QAE on a dataset")
    p.add_argument("--data", required=True, help="training dataset JSON")

    p = sub.add_parser("evaluate", parents=[common], help="denoise a test set and report energies and fidelities")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True, help="test set (or dataset) JSON")
    p.add_argument("--worst-k", type=int, default=None, help="only the k test states with the highest energy")

    p = sub.add_parser("sweep-noise", parents=[common], help="retrain and evaluate over noise strengths")
    p.add_argument("--kind", choices=NOISE_KINDS, required=True)
    p.add_argument("--strengths", type=_float_list, required=True, help="comma-separated, e.g. 0,0.1,0.2")

    p = sub.add_parser("landscape", parents=[common], help="training cost on a 2-parameter grid")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test", default=None, help="optional test set; adds mean test fidelity per cell")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--half-width", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=11)

    p = sub.add_parser("subsystem", parents=[common], help="fidelities with only k final neurons active")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ks", type=_int_list, default=None, help="comma-separated; default 1..m_M")
    p.add_argument("--metric", choices=ex.SUBSYSTEM_METRICS, default="uhlmann")

    p = sub.add_parser("param-count", help="parameter counts for a topology")
    p.add_argument("--topology", type=_int_list, required=True, help="e.g. 4,2,1,2,4")
    p.add_argument("--ansatz", choices=[v for v in VARIANTS if v != "FULL_QNN"], default="RY_CZ")
    p.add_argument("--blocks", type=int, default=1)

    p = sub.add_parser("exact", parents=[common], help="ground state of the configured Hamiltonian")
    p.add_argument("--g-values", type=_float_list, default=None,
                   help="TFIM field values for a half-chain entropy curve (written to entropy.csv)")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, output_dir=args.out)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate_data(args) -> None:
    cfg = _config(args)
    out = _out_dir(cfg)
    dataset, test_set = ex.generate_data(cfg)
    save_json(dataset, out / "train.json")
    save_json(test_set, out / "test.json")
    ex.write_json(out / "config.json", cfg.to_dict())
    print(f"wrote {len(dataset.pairs)} training pairs and {len(test_set.states)} test states to {out}")


def cmd_train(args) -> None:
    cfg = _config(args)
    dataset = load_dataset(args.data)
    model, history = ex.train_model(cfg, dataset)
    out = _out_dir(cfg)
    save_model(model, out / "model.json")
    write_history_csv(history, out / "history.csv")
    print(f"trained {model.num_params} parameters over {cfg.train.epochs} epochs; final batch cost {history[-1].cost:.12g}"
          if history else "no training epochs requested")


def cmd_evaluate(args) -> None:
    cfg = _config(args)
    report = ex.evaluate(load_model(args.model), load_test_set(args.test), args.worst_k)
    out = _out_dir(cfg)
    report.write(out)
    s = report.summary()
    print(json.dumps({k: s[k] for k in ("noisy", "denoised")}, indent=1, sort_keys=True))


def cmd_sweep_noise(args) -> None:
    cfg = _config(args)
    out = _out_dir(cfg)
    rows = ex.sweep_noise(cfg, args.kind, args.strengths,
                          progress=lambda row: print(",".join(ex.fmt(v) for v in row), flush=True))
    ex.write_csv(out / "sweep.csv", ex.SWEEP_HEADER, rows)


def cmd_landscape(args) -> None:
    cfg = _config(args)
    test_set = load_test_set(args.test) if args.test else None
    rows = ex.landscape(load_model(args.model), load_dataset(args.data), args.i, args.j,
                        args.half_width, args.grid, test_set)
    out = _out_dir(cfg)
    ex.write_csv(out / "landscape.csv", ex.landscape_header(test_set is not None), rows)
    print(f"wrote {len(rows)} grid cells to {out / 'landscape.csv'}")


def cmd_subsystem(args) -> None:
    cfg = _config(args)
    model = load_model(args.model)
    ks = args.ks if args.ks is not None else list(range(1, model.topology[-1] + 1))
    rows = ex.subsystem_fidelities(model, load_test_set(args.test), ks, args.metric)
    out = _out_dir(cfg)
    ex.write_csv(out / "subsystem.csv", ["k", "mean_fidelity", "std_fidelity"], rows)
    for row in rows:
        print(",".join(ex.fmt(v) for v in row))


def cmd_param_count(args) -> None:
    for label, count in ex.param_count_rows(args.topology, args.ansatz, args.blocks):
        print(f"{label}: {count}")


def cmd_exact(args) -> None:
    cfg = _config(args)
    h = cfg.hamiltonian.build()
    gs = ground_state(h)
    info = {"num_qubits": h.num_qubits, "energy": gs.energy, "degenerate": gs.degenerate}
    if h.num_qubits >= 2:
        info["half_chain_entropy"] = entanglement_entropy(gs.state, h.num_qubits // 2)
    print(json.dumps(info, indent=1))
    if args.g_values:
        if cfg.hamiltonian.kind != "tfim":
            raise ValueError("--g-values needs a TFIM Hamiltonian")
        out = _out_dir(cfg)
        ex.write_csv(out / "entropy.csv", ["g", "entropy"], entropy_curve(cfg.hamiltonian.n_spins, args.g_values))


COMMANDS = {
    "generate-data": cmd_generate_data,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep-noise": cmd_sweep_noise,
    "landscape": cmd_landscape,
    "subsystem": cmd_subsystem,
    "param-count": cmd_param_count,
    "exact": cmd_exact,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ValueError, KeyError, IndexError, OSError, HamiltonianFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
