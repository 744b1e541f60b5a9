"""Cross-entropy and the GCOD noise-discounting loss.

GCOD keeps one parameter u_i in [0, 1] per training graph (0 = trust the
assigned label). The model objective is a weighted sum of three terms:

  fit      -mean_i log(softmax(z_i)[y_i] + u_i), clamped to (0, 1]:
           u_i absorbs probability mass the model refuses to put on the
           assigned class, so confidently-noisy samples stop driving the
           weights. With u = 0 this is exactly cross-entropy.
  smooth   mean_i (1 - u_i) * ||h_i - c_{y_i}||^2 / (2 * scale): pulls
           pooled graph embeddings toward their assigned-class centroid,
           weighted by how much the sample is trusted; ``scale`` is the
           (detached) train-set variance of embeddings, so the term and its
           gradients stay O(1) whatever the representation magnitude.
           Promotes clustered, smoother representations.
  balance  KL(uniform || mean_i softmax(z_i)): keeps the mean prediction
           from collapsing onto one class.

u is trained by its own objective (model outputs held constant):

  L_u = 1/2 * sum_i (u_i - t_i)^2
  t_i = 1 - softmax_k( cos(h_i - mean, c_k) / temperature )[y_i]

so a plain gradient step with the default learning rate 1 assigns
u_i <- t_i: a sample whose (centered) embedding sits closer to some other
class's centroid than to its assigned one is marked noisy. Gradient
separation is structural: the model objective consumes u as a constant
array, and L_u consumes detached embeddings.

Centroids (per assigned class, over the training split, in mean-centered
coordinates) are refreshed once per epoch; all-zero centroids (before the
first refresh, or empty classes) make the smooth term inert. Every term
weight is a config knob; (fit, smooth, balance) = (1, 0, 0) with u = 0
reduces the model objective to plain cross-entropy and is pinned by a
regression test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import (Tensor, backward, clip, div, exp, gather_rows, log,
                     log_softmax, mul, neg, sqrt, sub, tmean, tsum)
from .errors import ConfigError, DimensionError
from .nn import readout

PROB_FLOOR = 1e-12
NORM_FLOOR = 1e-16  # on squared norms before sqrt


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of integer labels under the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    num_classes = logits.data.shape[-1]
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ConfigError("label outside [0, num_classes)")
    return neg(tmean(gather_rows(log_softmax(logits), labels)))


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    return float((logits.argmax(axis=1) == labels).mean())


@dataclass
class GcodConfig:
    u_lr: float = 1.0
    fit_weight: float = 1.0
    smooth_weight: float = 1.0
    balance_weight: float = 1.0
    warmup_epochs: int = 10
    sim_temperature: float = 0.1

    def __post_init__(self):
        if self.u_lr < 0:
            raise ConfigError("u_lr must be non-negative")
        if self.warmup_epochs < 0:
            raise ConfigError("warmup_epochs must be non-negative")
        if self.sim_temperature <= 0:
            raise ConfigError("sim_temperature must be positive")


class GcodState:
    """Per-sample trust parameters plus per-class embedding centroids.

    Centroids live in centered coordinates: the train-set mean embedding is
    subtracted first, which strips the dominant shared direction that ReLU
    sum pooling gives every graph and leaves the class-discriminative
    geometry."""

    def __init__(self, num_train: int, num_classes: int, hidden: int,
                 config: GcodConfig | None = None):
        self.config = config or GcodConfig()
        self.u = np.zeros(num_train)
        self.class_stats = np.zeros((num_classes, hidden))
        self.embed_mean = np.zeros(hidden)
        self.embed_scale = 1.0  # mean ||h - mean||^2 over the train set
        self.empty_classes = np.ones(num_classes, dtype=bool)
        self.epoch = 0

    @property
    def num_train(self) -> int:
        return len(self.u)

    @property
    def num_classes(self) -> int:
        return self.class_stats.shape[0]

    def in_warmup(self) -> bool:
        return self.epoch < self.config.warmup_epochs

    def unit_centroids(self) -> np.ndarray:
        """Unit directions of the centered class centroids; empty classes
        stay all-zero (their cosines read as 0)."""
        centered = self.class_stats - self.embed_mean
        centered[self.empty_classes] = 0.0
        norms = np.sqrt((centered * centered).sum(axis=1))
        safe = np.where(norms > 0, norms, 1.0)
        return centered / safe[:, None]


def refresh_class_stats(state: GcodState, embeddings: np.ndarray, labels: np.ndarray):
    """class_stats[c] = mean embedding over training samples assigned to c;
    also records the train-set mean used for centering at lookup time."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if embeddings.shape[0] != labels.shape[0]:
        raise DimensionError("embeddings and labels must align")
    state.embed_mean = embeddings.mean(axis=0)
    c = state.num_classes
    sums = np.zeros((c, embeddings.shape[1]))
    np.add.at(sums, labels, embeddings)
    counts = np.bincount(labels, minlength=c).astype(np.float64)
    state.empty_classes = counts == 0
    denom = np.where(counts > 0, counts, 1.0)
    state.class_stats = sums / denom[:, None]


def _cosine_to_centroid(embeddings: Tensor, labels: np.ndarray, state: GcodState) -> Tensor:
    """Differentiable cos(h_i - mean, centroid[y_i]); mean and centroids are
    constants refreshed once per epoch."""
    c_sel = state.unit_centroids()[labels]  # (B, hidden) constant
    centered = sub(embeddings, state.embed_mean)
    dot = tsum(mul(centered, c_sel), axis=1)
    sumsq = tsum(mul(centered, centered), axis=1)
    return div(dot, sqrt(clip(sumsq, NORM_FLOOR, np.inf)))


def _trust_targets(embeddings: np.ndarray, labels: np.ndarray, state: GcodState) -> np.ndarray:
    """t_i = 1 - softmax_k(cos(h_i - mean, c_k) / temperature)[y_i].

    Relative rather than absolute similarity: a sample whose centered
    embedding sits closer to another class's centroid than to its assigned
    one gets t near 1 regardless of the overall cosine scale."""
    centered = embeddings - state.embed_mean
    norms = np.sqrt((centered * centered).sum(axis=1))
    unit = centered / np.maximum(norms, 1e-12)[:, None]
    cos_all = unit @ state.unit_centroids().T  # (B, C)
    scaled = cos_all / state.config.sim_temperature
    scaled -= scaled.max(axis=1, keepdims=True)
    soft = np.exp(scaled)
    soft /= soft.sum(axis=1, keepdims=True)
    return np.clip(1.0 - soft[np.arange(len(labels)), labels], 0.0, 1.0)


def gcod_terms(logits: Tensor, embeddings: Tensor, labels, u_batch, state: GcodState):
    """Model objective, u objective, and per-term diagnostics for one batch.

    ``u_batch`` may be a plain array (read-only use) or a Tensor with
    requires_grad, in which case L_u backpropagates into it. The model
    objective always consumes u as a constant.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if isinstance(u_batch, Tensor):
        u_tensor = u_batch
        u_const = u_batch.data
    else:
        u_const = np.asarray(u_batch, dtype=np.float64)
        u_tensor = Tensor(u_const, requires_grad=False)
    if u_const.shape[0] != logits.data.shape[0]:
        raise DimensionError("u_batch must have one entry per batch row")
    cfg = state.config
    num_classes = logits.data.shape[1]

    probs = exp(log_softmax(logits))
    cos = _cosine_to_centroid(embeddings, labels, state)
    zero = Tensor(np.asarray(0.0))

    if cfg.fit_weight != 0.0:
        p_adj = clip(gather_rows(probs, labels) + u_const, PROB_FLOOR, 1.0)
        fit = neg(tmean(log(p_adj)))
    else:
        fit = zero
    if cfg.smooth_weight != 0.0:
        smooth = tmean(mul(1.0 - u_const, sub(1.0, cos)))
    else:
        smooth = zero
    if cfg.balance_weight != 0.0:
        qbar = tsum(probs, axis=0) / float(logits.data.shape[0])
        balance = sub(
            div(tsum(neg(log(clip(qbar, PROB_FLOOR, 1.0)))), float(num_classes)),
            float(np.log(num_classes)),
        )
    else:
        balance = zero

    l_model = fit * cfg.fit_weight + smooth * cfg.smooth_weight + balance * cfg.balance_weight

    # u objective: track the relative-similarity target; sum reduction so a
    # plain step at u_lr = 1 lands exactly on the target.
    target = _trust_targets(embeddings.data, labels, state)
    resid = sub(u_tensor, target)
    l_u = tsum(mul(resid, resid)) * 0.5

    diagnostics = {
        "fit": fit.item(),
        "smooth": smooth.item(),
        "balance": balance.item(),
        "l_u": l_u.item(),
        "mean_u": float(u_const.mean()) if u_const.size else 0.0,
        "mean_cos": float(cos.data.mean()) if cos.data.size else 0.0,
    }
    return l_model, l_u, diagnostics


def gcod_step(model, adam, state: GcodState, block, sample_ids, labels):
    """One alternating update: Adam on the model, then a plain gradient step
    on the batch's u entries (skipped during warmup), then clamp to [0, 1]."""
    sample_ids = np.asarray(sample_ids, dtype=np.int64)
    logits, h = model.forward(block)
    emb = readout(h, block.component_sizes, model.readout_mode)
    u_tensor = Tensor(state.u[sample_ids], requires_grad=True)
    l_model, l_u, diag = gcod_terms(logits, emb, labels, u_tensor, state)

    model.zero_grad()
    backward(l_model)
    adam.step()
    model.zero_grad()

    if not state.in_warmup():
        backward(l_u)
        if u_tensor.grad is not None:
            stepped = u_tensor.data - state.config.u_lr * u_tensor.grad
            state.u[sample_ids] = np.clip(stepped, 0.0, 1.0)
    return l_model.item(), diag
