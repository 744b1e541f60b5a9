"""Flat key=value run configuration.

Files look like:

    # comment
    model.kind = gin
    train.epochs = 500
    noise.rate = 0.3

Unknown keys are errors (typo protection). Values round-trip losslessly
through ``format_config`` / ``parse_config``. One seed (train.seed) drives
every random choice in a run; sub-streams (init, split, noise, shuffles,
synthetic data) are derived from it by tag.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected boolean, got '{text}'")


@dataclass
class RunConfig:
    dataset_source: str = "synthetic"  # "synthetic" | "tu"
    dataset_path: str = ""
    synthetic_num_graphs: int = 500
    synthetic_num_classes: int = 2
    synthetic_nodes_min: int = 12
    synthetic_nodes_max: int = 20
    synthetic_edge_prob: float = 0.08
    synthetic_motifs_per_graph: int = 2
    model_kind: str = "gin"
    model_layers: int = 5
    model_hidden: int = 300
    model_readout: str = "auto"  # "auto" | "sum" | "mean"
    model_propagation: str = "norm_adjacency"  # | "laplacian"
    model_train_eps: bool = False
    train_lr: float = 0.001
    train_weight_decay: float = 1e-4
    train_batch_size: int = 32
    train_epochs: int = 500
    train_fraction: float = 0.8
    train_seed: int = 0
    train_subsample_fraction: float = 1.0
    loss_kind: str = "ce"  # "ce" | "gcod"
    gcod_u_lr: float = 1.0
    gcod_fit_weight: float = 1.0
    gcod_smooth_weight: float = 1.0
    gcod_balance_weight: float = 1.0
    gcod_warmup_epochs: int = 10
    gcod_sim_temperature: float = 0.1
    noise_kind: str = "symmetric"
    noise_rate: float = 0.0
    projection_target: str = "none"
    projection_frequency: int = 1
    energy_layer: int = -1  # -1 = last layer

    def validate(self):
        checks = [
            (self.dataset_source in ("synthetic", "tu"), "dataset.source"),
            (self.model_kind in ("gin", "gcn"), "model.kind"),
            (self.model_readout in ("auto", "sum", "mean"), "model.readout"),
            (self.model_propagation in ("norm_adjacency", "laplacian"), "model.propagation"),
            (self.loss_kind in ("ce", "gcod"), "loss.kind"),
            (self.noise_kind in ("symmetric", "pairflip"), "noise.kind"),
            (self.projection_target in ("none", "w2_only", "w1_and_w2"), "projection.target"),
            (self.model_layers >= 1, "model.layers"),
            (self.model_hidden >= 1, "model.hidden"),
            (self.train_lr > 0, "train.lr"),
            (self.train_weight_decay >= 0, "train.weight_decay"),
            (self.train_batch_size >= 1, "train.batch_size"),
            (self.train_epochs >= 0, "train.epochs"),
            (0 < self.train_fraction < 1, "train.fraction"),
            (0 < self.train_subsample_fraction <= 1, "train.subsample_fraction"),
            (0 <= self.noise_rate <= 1, "noise.rate"),
            (self.projection_frequency >= 1, "projection.frequency"),
            (self.energy_layer >= -1, "energy.layer"),
            (self.gcod_u_lr >= 0, "gcod.u_lr"),
            (self.gcod_warmup_epochs >= 0, "gcod.warmup_epochs"),
            (self.gcod_sim_temperature > 0, "gcod.sim_temperature"),
            (self.synthetic_num_graphs >= 1, "synthetic.num_graphs"),
            (self.synthetic_num_classes >= 2, "synthetic.num_classes"),
            (1 <= self.synthetic_nodes_min <= self.synthetic_nodes_max, "synthetic.nodes"),
            (0 <= self.synthetic_edge_prob <= 1, "synthetic.edge_prob"),
            (self.synthetic_motifs_per_graph >= 1, "synthetic.motifs_per_graph"),
        ]
        for ok, name in checks:
            if not ok:
                raise ConfigError(f"config value out of range: {name}")
        if self.dataset_source == "tu" and not self.dataset_path:
            raise ConfigError("dataset.path required when dataset.source = tu")
        if self.energy_layer > self.model_layers:
            raise ConfigError("energy.layer beyond last layer")


def _key_of(field_name: str) -> str:
    return field_name.replace("_", ".", 1)


_FIELDS = {_key_of(f.name): f for f in fields(RunConfig)}


def parse_kv(cfg: RunConfig, key: str, raw: str):
    """Set one key on cfg from its text value."""
    f = _FIELDS.get(key)
    if f is None:
        raise ConfigError(f"unknown config key '{key}'")
    raw = raw.strip()
    try:
        if f.type in ("int", int):
            value = int(raw)
        elif f.type in ("float", float):
            value = float(raw)
        elif f.type in ("bool", bool):
            value = _parse_bool(raw)
        else:
            value = raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: '{raw}'") from exc
    setattr(cfg, f.name, value)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got '{line}'")
        key, raw = line.split("=", 1)
        parse_kv(cfg, key.strip(), raw)
    cfg.validate()
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def format_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(format_config(c)) == c."""
    lines = []
    for key in sorted(_FIELDS):
        value = getattr(cfg, _FIELDS[key].name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
