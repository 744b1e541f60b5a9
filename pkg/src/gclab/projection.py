"""Positive-eigenvalue projection of weight matrices (applied post-step).

``project_positive`` symmetrizes the input, eigendecomposes, zeroes every
negative eigenvalue and reconstructs. For a symmetric matrix this is the
Frobenius-nearest PSD matrix; for a general square W the result is the PSD
projection of (W + W^T)/2. General real matrices may have complex spectra,
so symmetrize-first is the only reconstruction that stays real and keeps
the eigenvector inverse equal to the transpose.

``apply_policy`` rewrites the targeted weights in place, outside any
gradient bookkeeping; Adam moments and grads are untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .spectral import sym_eig

TARGETS = ("none", "w2_only", "w1_and_w2")


@dataclass
class ProjectionPolicy:
    """Which matrices to project and how often (every k optimizer steps)."""

    target: str = "none"
    layers: list[int] | None = None  # None = all layers
    frequency: int = 1

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"projection target must be one of {TARGETS}")
        if self.frequency < 1:
            raise ConfigError("projection frequency must be >= 1")

    def due(self, step_count: int) -> bool:
        return self.target != "none" and step_count % self.frequency == 0


def project_positive(w: np.ndarray) -> np.ndarray:
    """Nearest symmetric PSD matrix to (W + W^T)/2.

    Eigenvalues of the symmetrized input are passed through max(., 0) and
    the matrix is rebuilt; the result is symmetrized bitwise. Idempotent up
    to rounding.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {w.shape}")
    dec = sym_eig(0.5 * (w + w.T))
    clipped = np.maximum(dec.eigenvalues, 0.0)
    rebuilt = (dec.eigenvectors * clipped) @ dec.eigenvectors.T
    return 0.5 * (rebuilt + rebuilt.T)


def apply_policy(model, policy: ProjectionPolicy):
    """Project the targeted weight matrices of ``model`` in place."""
    if policy.target == "none":
        return
    wanted = set(policy.layers) if policy.layers is not None else None
    for i, layer in enumerate(model.layers):
        if wanted is not None and i not in wanted:
            continue
        layer.w2.data = project_positive(layer.w2.data)
        if policy.target == "w1_and_w2":
            layer.w1.data = project_positive(layer.w1.data)
