"""Multi-run sweeps along one config axis, with a summary table."""

from __future__ import annotations

import copy
import os
import traceback

import numpy as np

from .config import RunConfig, format_config
from .errors import ConfigError
from .rng import derive_seed
from .train import RunRecord, train

AXES = ("noise_rate", "dataset_size", "hidden", "epochs")


def _apply_axis(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    sub = copy.deepcopy(cfg)
    if axis == "noise_rate":
        sub.noise_rate = float(value)
    elif axis == "dataset_size":
        if cfg.dataset_source != "synthetic":
            raise ConfigError("dataset_size sweeps need a synthetic dataset")
        sub.synthetic_num_graphs = int(value)
    elif axis == "hidden":
        sub.model_hidden = int(value)
    elif axis == "epochs":
        sub.train_epochs = int(value)
    else:
        raise ConfigError(f"unknown sweep axis '{axis}' (use one of {AXES})")
    return sub


def _tag(value: float) -> str:
    return f"{value:g}"


def sweep(cfg: RunConfig, axis: str, values: list[float], outdir: str) -> str:
    """One sub-run per value; failures are recorded and do not stop the sweep.

    Returns the summary CSV path. Sub-run seeds are derived from the base
    seed and the axis position, so sweeps are reproducible as a whole.
    """
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis '{axis}' (use one of {AXES})")
    if not values:
        raise ConfigError("sweep needs at least one value")
    os.makedirs(outdir, exist_ok=True)
    summary_path = os.path.join(outdir, "summary.csv")
    with open(summary_path, "w") as summary:
        summary.write("axis,value,run_dir,status,final_test_acc,final_energy,"
                      "peak_memorization\n")
        for pos, value in enumerate(values):
            sub = _apply_axis(cfg, axis, value)
            sub.train_seed = derive_seed(cfg.train_seed, f"sweep:{axis}:{pos}")
            run_dir = os.path.join(outdir, f"{axis}={_tag(value)}")
            try:
                records = train(sub, run_dir)
                final = records[-1] if records else None
                line = (f"{axis},{_tag(value)},{run_dir},ok,"
                        f"{final.test_acc:.12g},{final.dirichlet_energy:.12g},"
                        f"{max(r.noisy_acc_vs_assigned for r in records):.12g}"
                        if final else
                        f"{axis},{_tag(value)},{run_dir},ok,nan,nan,nan")
            except Exception as exc:  # record and continue
                os.makedirs(run_dir, exist_ok=True)
                with open(os.path.join(run_dir, "error.txt"), "w") as fh:
                    fh.write(traceback.format_exc())
                line = f"{axis},{_tag(value)},{run_dir},failed:{type(exc).__name__},nan,nan,nan"
            summary.write(line + "\n")
            summary.flush()
    return summary_path
