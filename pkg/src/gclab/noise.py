"""Seeded synthetic corruption of class labels.

Two standard schemes:
  * symmetric: with probability ``rate`` a label is replaced by a uniformly
    random *different* class, so the nominal rate is the actual per-sample
    corruption probability;
  * pairflip: with probability ``rate`` class c becomes (c + 1) mod C.

Corruption decisions use the repo's counter RNG (two counters per sample:
one for the Bernoulli draw, one for the replacement class), so realizations
are identical across platforms for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import CounterRng


@dataclass
class NoiseSpec:
    kind: str = "symmetric"  # "symmetric" | "pairflip"
    rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("symmetric", "pairflip"):
            raise ConfigError(f"unknown noise kind '{self.kind}'")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"noise rate {self.rate} outside [0, 1]")


def inject(labels: np.ndarray, num_classes: int, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Corrupt ``labels``; returns (assigned, noise_mask).

    Deterministic in (labels, spec.seed). Sample i consumes counters 2i
    (flip decision) and 2i+1 (replacement class), so the realization for a
    given index does not depend on the rest of the vector.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ConfigError("labels outside [0, num_classes)")
    if spec.rate > 0.0 and num_classes < 2:
        raise ConfigError("need at least 2 classes to inject noise")

    rng = CounterRng(spec.seed, "label-noise")
    n = labels.size
    assigned = labels.copy()
    if n == 0 or spec.rate == 0.0:
        return assigned, np.zeros(n, dtype=bool)

    words = np.array([rng.at(2 * i) for i in range(n)], dtype=np.uint64)
    flip = (words >> np.uint64(11)).astype(np.float64) * 2.0**-53 < spec.rate
    repl_words = np.array([rng.at(2 * i + 1) for i in range(n)], dtype=np.uint64)
    if spec.kind == "symmetric":
        # uniform over the C-1 other classes: skip the current label
        k = (repl_words % np.uint64(num_classes - 1)).astype(np.int64)
        new = np.where(k < labels, k, k + 1)
    else:  # pairflip
        new = (labels + 1) % num_classes
    assigned[flip] = new[flip]
    mask = assigned != labels
    return assigned, mask


def confusion_estimate(true: np.ndarray, assigned: np.ndarray, num_classes: int) -> np.ndarray:
    """Row-stochastic empirical transition matrix true -> assigned.

    Classes with no samples get an identity row.
    """
    true = np.asarray(true, dtype=np.int64)
    assigned = np.asarray(assigned, dtype=np.int64)
    if true.shape != assigned.shape:
        raise ConfigError("label vectors must have equal length")
    counts = np.zeros((num_classes, num_classes))
    np.add.at(counts, (true, assigned), 1.0)
    rowsum = counts.sum(axis=1)
    out = np.eye(num_classes)
    nz = rowsum > 0
    out[nz] = counts[nz] / rowsum[nz, None]
    return out
