"""Command-line entry points.

Subcommands: run, sweep, gen-synthetic, inspect-energy, gradcheck, plot,
selftest. Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
abort.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import RunConfig, load_config, parse_kv
from .dirichlet import dataset_energy
from .engine import no_grad
from .errors import ConfigError, DataError, NumericsError
from .graphs import block_diagonal
from .nn import load_checkpoint
from .rng import derive_seed
from .synth import SyntheticSpec, gen_synthetic, oracle_accuracy
from .tudata import save_tu_dataset


def _load_with_overrides(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got '{item}'")
        key, value = item.split("=", 1)
        parse_kv(cfg, key.strip(), value)
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    from .train import train

    cfg = _load_with_overrides(args)
    records = train(cfg, args.out)
    if records:
        last = records[-1]
        print(f"finished {len(records)} epochs: train_acc={last.train_acc:.4f} "
              f"test_acc={last.test_acc:.4f} energy={last.dirichlet_energy:.6g}")
    else:
        print("finished 0 epochs (header-only metrics written)")
    print(f"outputs in {args.out}")
    return 0


def cmd_sweep(args) -> int:
    from .sweep import sweep

    cfg = _load_with_overrides(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    summary = sweep(cfg, args.axis, values, args.out)
    print(f"sweep summary: {summary}")
    return 0


def cmd_gen_synthetic(args) -> int:
    spec = SyntheticSpec(
        num_graphs=args.num_graphs,
        num_classes=args.classes,
        nodes_min=args.nodes_min,
        nodes_max=args.nodes_max,
        edge_prob=args.edge_prob,
        motifs_per_graph=args.motifs,
        seed=args.seed,
    )
    ds = gen_synthetic(spec)
    save_tu_dataset(ds, args.out, name=args.name)
    acc = oracle_accuracy(ds)
    print(f"wrote {len(ds.graphs)} graphs to {args.out} "
          f"(combinatorial oracle accuracy {acc:.4f})")
    return 0


def cmd_inspect_energy(args) -> int:
    from .train import prepare_dataset

    cfg = _load_with_overrides(args)
    model = load_checkpoint(args.checkpoint)
    ds = prepare_dataset(cfg)
    if args.split == "train":
        indices = ds.train_idx
    elif args.split == "test":
        indices = ds.test_idx
    else:
        indices = np.arange(len(ds.graphs))
    layer = args.layer if args.layer is not None else cfg.energy_layer
    layer = model.num_layers if layer < 0 else layer
    reps = []
    with no_grad():
        for start in range(0, len(indices), 64):
            part = [ds.graphs[i] for i in indices[start:start + 64]]
            block = block_diagonal(part)
            _, stages = model.forward(block, collect_all=True)
            h = stages[layer].data
            for g, chunk_off, size in zip(part, block.component_offsets,
                                          block.component_sizes):
                reps.append((h[chunk_off:chunk_off + size], g))
    report = dataset_energy(reps)
    print(f"dataset_energy[{args.split}, layer {layer}] = "
          f"{report.dataset_energy:.12g} over {len(reps)} graphs "
          f"(method {report.method})")
    return 0


def cmd_gradcheck(args) -> int:
    from .checks import gradcheck_suite

    failures = 0
    for name, ok, worst in gradcheck_suite(trials=args.trials, seed=args.seed):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: worst fd error {worst:.3e}")
        failures += 0 if ok else 1
    if failures:
        raise NumericsError(f"{failures} gradcheck suites failed")
    return 0


def cmd_plot(args) -> int:
    from .svgplot import plot_runs

    written = plot_runs(args.run_dirs, args.out or args.run_dirs[0])
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_selftest(args) -> int:
    from .checks import selftest_suite

    failures = 0
    for name, ok, detail in selftest_suite(seed=args.seed):
        print(f"[{'PASS' if ok else 'FAIL'}] {name} ({detail})")
        failures += 0 if ok else 1
    if failures:
        raise NumericsError(f"{failures} selftest suites failed")
    print("all selftests passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gclab",
                                     description="graph classification lab")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")

    p = sub.add_parser("run", help="train one configuration")
    add_config_opts(p, config_required=False)
    p.add_argument("--out", default="runs/run", help="output directory")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run one config axis over several values")
    add_config_opts(p, config_required=False)
    p.add_argument("--axis", required=True,
                   choices=("noise_rate", "dataset_size", "hidden", "epochs"))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", default="runs/sweep", help="output directory")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("gen-synthetic", help="write a synthetic dataset in the "
                                             "text benchmark format")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="SYNTH")
    p.add_argument("--num-graphs", type=int, default=500)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--nodes-min", type=int, default=12)
    p.add_argument("--nodes-max", type=int, default=20)
    p.add_argument("--edge-prob", type=float, default=0.08)
    p.add_argument("--motifs", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen_synthetic)

    p = sub.add_parser("inspect-energy", help="dataset energy of a checkpoint")
    add_config_opts(p, config_required=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="train")
    p.add_argument("--layer", type=int, default=None)
    p.set_defaults(fn=cmd_inspect_energy)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("plot", help="render metric SVGs for run directories")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("selftest", help="numerical property suites")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
