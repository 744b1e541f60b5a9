"""Training loop with noise injection, energy logging, and CSV emission.

A run directory collects:

  config.resolved   canonical form of the effective config
  metrics.csv       one row per epoch (schema below, versioned header)
  noise.csv         per-graph label bookkeeping (audit)
  u.csv             per-epoch trust parameters (gcod runs only)
  gcod_terms.csv    per-epoch loss term means (gcod runs only)
  model.ckpt        final parameters

Everything random is derived from train.seed; reruns of the same config
are byte-identical except the wallclock_ms column.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, format_config
from .dirichlet import energy_spatial
from .engine import backward, no_grad
from .errors import ConfigError, DataError, NumericsError
from .graphs import BlockGraph, GraphDataset, block_diagonal
from .losses import (GcodConfig, GcodState, cross_entropy, gcod_step,
                     refresh_class_stats)
from .nn import Model, build_propagation, save_checkpoint
from .noise import NoiseSpec, inject
from .optim import Adam
from .projection import ProjectionPolicy, apply_policy
from .rng import CounterRng, derive_seed
from .synth import SyntheticSpec, gen_synthetic
from .tudata import load_tu_dataset

METRICS_VERSION = "# gclab-metrics v1"
METRICS_COLUMNS = ("epoch,train_loss,train_acc,test_acc,clean_train_acc,"
                   "noisy_acc_vs_assigned,noisy_acc_vs_true,dirichlet_energy,"
                   "wallclock_ms")
EVAL_CHUNK = 64


@dataclass
class RunRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float
    clean_train_acc: float
    noisy_acc_vs_assigned: float
    noisy_acc_vs_true: float
    dirichlet_energy: float
    wallclock_ms: int

    def csv_row(self) -> str:
        nums = (self.train_loss, self.train_acc, self.test_acc,
                self.clean_train_acc, self.noisy_acc_vs_assigned,
                self.noisy_acc_vs_true, self.dirichlet_energy)
        return f"{self.epoch}," + ",".join(f"{v:.12g}" for v in nums) + f",{self.wallclock_ms}"


def stratified_indices(labels: np.ndarray, fraction: float, rng: CounterRng) -> np.ndarray:
    """Seeded per-class subset covering about ``fraction`` of each class."""
    chosen = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        perm = rng.permutation(len(members))
        k = int(fraction * len(members) + 0.5)
        k = min(max(k, 1), len(members))
        chosen.append(members[perm[:k]])
    return np.sort(np.concatenate(chosen))


def stratified_split(labels: np.ndarray, train_fraction: float,
                     rng: CounterRng) -> tuple[np.ndarray, np.ndarray]:
    """Per-class seeded train/test split; every class keeps at least one
    sample on each side when it has two or more."""
    train, test = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        perm = rng.permutation(len(members))
        k = int(train_fraction * len(members) + 0.5)
        k = min(max(k, 1), len(members) - 1 if len(members) > 1 else 1)
        train.append(members[perm[:k]])
        test.append(members[perm[k:]])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def prepare_dataset(cfg: RunConfig) -> GraphDataset:
    """Load or generate graphs, subsample, split, and corrupt train labels."""
    if cfg.dataset_source == "synthetic":
        spec = SyntheticSpec(
            num_graphs=cfg.synthetic_num_graphs,
            num_classes=cfg.synthetic_num_classes,
            nodes_min=cfg.synthetic_nodes_min,
            nodes_max=cfg.synthetic_nodes_max,
            edge_prob=cfg.synthetic_edge_prob,
            motifs_per_graph=cfg.synthetic_motifs_per_graph,
            seed=derive_seed(cfg.train_seed, "synthetic"),
        )
        ds = gen_synthetic(spec)
    else:
        ds = load_tu_dataset(cfg.dataset_path)

    if cfg.train_subsample_fraction < 1.0:
        keep = stratified_indices(ds.true_labels, cfg.train_subsample_fraction,
                                  CounterRng(cfg.train_seed, "subsample"))
        graphs = [ds.graphs[i] for i in keep]
        ds = GraphDataset.from_graphs(graphs, ds.num_classes)

    train_idx, test_idx = stratified_split(ds.true_labels, cfg.train_fraction,
                                           CounterRng(cfg.train_seed, "split"))
    assigned = ds.true_labels.copy()
    spec = NoiseSpec(cfg.noise_kind, cfg.noise_rate,
                     seed=derive_seed(cfg.train_seed, "noise"))
    noisy_train, _ = inject(ds.true_labels[train_idx], ds.num_classes, spec)
    assigned[train_idx] = noisy_train
    return GraphDataset(
        graphs=ds.graphs,
        num_classes=ds.num_classes,
        true_labels=ds.true_labels,
        assigned_labels=assigned,
        noise_mask=assigned != ds.true_labels,
        train_idx=train_idx,
        test_idx=test_idx,
    )


def write_noise_csv(ds: GraphDataset, path: str):
    with open(path, "w") as fh:
        fh.write("graph_id,true_label,assigned_label,is_noisy\n")
        for g, t, a, m in zip(ds.graphs, ds.true_labels, ds.assigned_labels, ds.noise_mask):
            fh.write(f"{g.graph_id},{t},{a},{int(m)}\n")


class _EvalSet:
    """Precomputed blocks + propagation matrices for a fixed index list."""

    def __init__(self, ds: GraphDataset, indices: np.ndarray, model: Model):
        self.indices = indices
        self.chunks: list[tuple[np.ndarray, BlockGraph, object]] = []
        for start in range(0, len(indices), EVAL_CHUNK):
            part = indices[start:start + EVAL_CHUNK]
            block = block_diagonal([ds.graphs[i] for i in part])
            prop = build_propagation(block, model.kind, model.propagation)
            self.chunks.append((part, block, prop))

    def evaluate(self, model: Model, energy_layer: int):
        """Predictions aligned with ``indices``, mean Dirichlet energy of the
        configured layer's representations, and pooled graph embeddings."""
        preds = np.zeros(len(self.indices), dtype=np.int64)
        embeddings = np.zeros((len(self.indices), model.hidden))
        energy_total = 0.0
        pos = 0
        with no_grad():
            for part, block, prop in self.chunks:
                logits, reps = model.forward(block, collect_all=True, prop=prop)
                preds[pos:pos + len(part)] = logits.data.argmax(axis=1)
                layer = energy_layer if energy_layer >= 0 else model.num_layers
                energy_total += energy_spatial(reps[layer].data, block)
                starts = np.concatenate([[0], np.cumsum(block.component_sizes)[:-1]])
                pooled = np.add.reduceat(reps[-1].data, starts, axis=0)
                if model.readout_mode == "mean":
                    pooled = pooled / np.asarray(block.component_sizes, dtype=np.float64)[:, None]
                embeddings[pos:pos + len(part)] = pooled
                pos += len(part)
        return preds, energy_total / max(len(self.indices), 1), embeddings


def _subset_accuracy(preds, labels, mask) -> float:
    if not mask.any():
        return 0.0  # empty subset: reported as 0 by convention
    return float((preds[mask] == labels[mask]).mean())


def train(cfg: RunConfig, outdir: str, on_epoch_end=None) -> list[RunRecord]:
    """Run the full training loop; returns the per-epoch records.

    ``on_epoch_end(model, record)``, when given, is called after each
    epoch's diagnostics row is written (instrumentation hook; it must not
    mutate the model)."""
    cfg.validate()
    if cfg.energy_layer > cfg.model_layers:
        raise ConfigError("energy.layer beyond last layer")
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.resolved"), "w") as fh:
        fh.write(format_config(cfg))

    ds = prepare_dataset(cfg)
    write_noise_csv(ds, os.path.join(outdir, "noise.csv"))
    if len(ds.train_idx) == 0:
        raise DataError("empty training split")

    in_dim = ds.graphs[0].feature_dim
    readout_mode = None if cfg.model_readout == "auto" else cfg.model_readout
    model = Model(
        in_dim=in_dim,
        hidden=cfg.model_hidden,
        num_classes=ds.num_classes,
        kind=cfg.model_kind,
        num_layers=cfg.model_layers,
        readout_mode=readout_mode,
        propagation=cfg.model_propagation,
        train_eps=cfg.model_train_eps,
        seed=derive_seed(cfg.train_seed, "init"),
    )
    adam = Adam(model.named_parameters(), lr=cfg.train_lr,
                weight_decay=cfg.train_weight_decay)
    policy = ProjectionPolicy(target=cfg.projection_target,
                              frequency=cfg.projection_frequency)

    train_idx = ds.train_idx
    u_slot = {int(g): k for k, g in enumerate(train_idx)}
    state = None
    u_file = terms_file = None
    if cfg.loss_kind == "gcod":
        state = GcodState(len(train_idx), ds.num_classes, cfg.model_hidden,
                          GcodConfig(u_lr=cfg.gcod_u_lr,
                                     fit_weight=cfg.gcod_fit_weight,
                                     smooth_weight=cfg.gcod_smooth_weight,
                                     balance_weight=cfg.gcod_balance_weight,
                                     warmup_epochs=cfg.gcod_warmup_epochs,
                                     sim_temperature=cfg.gcod_sim_temperature))
        u_file = open(os.path.join(outdir, "u.csv"), "w")
        u_file.write("epoch,graph_id,u_value,is_noisy\n")
        terms_file = open(os.path.join(outdir, "gcod_terms.csv"), "w")
        terms_file.write("epoch,fit,smooth,balance,l_u,mean_u,mean_cos\n")

    train_eval = _EvalSet(ds, train_idx, model)
    test_eval = _EvalSet(ds, ds.test_idx, model)
    assigned_train = ds.assigned_labels[train_idx]
    true_train = ds.true_labels[train_idx]
    noisy_mask = ds.noise_mask[train_idx]
    clean_mask = ~noisy_mask

    records: list[RunRecord] = []
    metrics_path = os.path.join(outdir, "metrics.csv")
    with open(metrics_path, "w") as metrics:
        metrics.write(METRICS_VERSION + "\n" + METRICS_COLUMNS + "\n")
        metrics.flush()

        for epoch in range(1, cfg.train_epochs + 1):
            t0 = time.perf_counter()
            perm = CounterRng(cfg.train_seed, f"shuffle:{epoch}").permutation(len(train_idx))
            order = train_idx[perm]
            loss_accum = 0.0
            diag_accum: dict[str, float] = {}
            batch_count = 0
            if state is not None:
                state.epoch = epoch - 1  # epochs completed so far gate the warmup

            for start in range(0, len(order), cfg.train_batch_size):
                batch = order[start:start + cfg.train_batch_size]
                step_index = adam.step_count + 1
                try:
                    block = block_diagonal([ds.graphs[i] for i in batch])
                    labels = ds.assigned_labels[batch]
                    if cfg.loss_kind == "ce":
                        logits, _ = model.forward(block)
                        loss = cross_entropy(logits, labels)
                        model.zero_grad()
                        backward(loss)
                        adam.step()
                        model.zero_grad()
                        loss_value = loss.item()
                    else:
                        slots = np.array([u_slot[int(i)] for i in batch])
                        loss_value, diag = gcod_step(model, adam, state, block,
                                                     slots, labels)
                        for key, val in diag.items():
                            diag_accum[key] = diag_accum.get(key, 0.0) + val
                    if policy.due(adam.step_count):
                        apply_policy(model, policy)
                except NumericsError as exc:
                    raise NumericsError(
                        f"numerical abort at epoch {epoch}, step {step_index}: {exc}"
                    ) from exc
                loss_accum += loss_value * len(batch)
                batch_count += 1

            # diagnostics pass: inference mode, training state untouched
            train_preds, energy, train_emb = train_eval.evaluate(model, cfg.energy_layer)
            test_preds, _, _ = test_eval.evaluate(model, cfg.energy_layer)
            if not np.array_equal(ds.assigned_labels[ds.test_idx],
                                  ds.true_labels[ds.test_idx]):
                raise DataError("test labels were corrupted")
            assert noisy_mask.sum() + clean_mask.sum() == len(train_idx)

            record = RunRecord(
                epoch=epoch,
                train_loss=loss_accum / len(train_idx),
                train_acc=float((train_preds == assigned_train).mean()),
                test_acc=_subset_accuracy(test_preds, ds.true_labels[ds.test_idx],
                                          np.ones(len(ds.test_idx), dtype=bool)),
                clean_train_acc=_subset_accuracy(train_preds, assigned_train, clean_mask),
                noisy_acc_vs_assigned=_subset_accuracy(train_preds, assigned_train, noisy_mask),
                noisy_acc_vs_true=_subset_accuracy(train_preds, true_train, noisy_mask),
                dirichlet_energy=energy,
                wallclock_ms=int((time.perf_counter() - t0) * 1000),
            )
            records.append(record)
            metrics.write(record.csv_row() + "\n")
            metrics.flush()
            if on_epoch_end is not None:
                on_epoch_end(model, record)

            if state is not None:
                refresh_class_stats(state, train_emb, assigned_train)
                for k, gid in enumerate(train_idx):
                    u_file.write(f"{epoch},{ds.graphs[gid].graph_id},"
                                 f"{state.u[k]:.12g},{int(noisy_mask[k])}\n")
                u_file.flush()
                if batch_count:
                    means = {k: v / batch_count for k, v in diag_accum.items()}
                    terms_file.write(
                        f"{epoch},{means.get('fit', 0.0):.12g},"
                        f"{means.get('smooth', 0.0):.12g},"
                        f"{means.get('balance', 0.0):.12g},"
                        f"{means.get('l_u', 0.0):.12g},"
                        f"{means.get('mean_u', 0.0):.12g},"
                        f"{means.get('mean_cos', 0.0):.12g}\n")
                    terms_file.flush()

    if u_file is not None:
        u_file.close()
    if terms_file is not None:
        terms_file.close()
    save_checkpoint(model, os.path.join(outdir, "model.ckpt"))
    return records
