"""GCN/GIN stacks with paired square weight matrices, pooling, checkpoints.

Layer update rules (sigma = ReLU, no biases inside the W1/W2 path):

    GCN:  H' = sigma(P @ H @ W1) @ W2
    GIN:  H' = sigma(sigma((1 + eps) * H + A @ H) @ W1) @ W2

where P is the propagation operator. The conventional GCN operator is the
self-loop symmetric-normalized adjacency (``norm_adjacency``); the
normalized Laplacian can be selected instead via ``propagation="laplacian"``.
W1 and W2 are square (hidden x hidden) so their spectra can be manipulated
directly. The input projection and the classifier head are ordinary affine
maps and carry the only biases in the model.

Batches are block-diagonal graphs: one sparse operator for the whole block,
per-component readout by segment sums, so disconnected components never
interact.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .engine import Tensor, add, matmul, mul, relu, segment_sum, spmm
from .errors import DataError, DimensionError
from .graphs import BlockGraph
from .rng import CounterRng, derive_seed

CHECKPOINT_MAGIC = "gclab-checkpoint v1"


class GnnLayer:
    """One message-passing layer holding square W1, W2 (and eps for GIN)."""

    def __init__(self, kind: str, w1: Tensor, w2: Tensor, epsilon: Tensor):
        if kind not in ("gcn", "gin"):
            raise DataError(f"unknown layer kind '{kind}'")
        if w1.data.shape != w2.data.shape or w1.data.shape[0] != w1.data.shape[1]:
            raise DimensionError("W1 and W2 must be square and equally sized")
        self.kind = kind
        self.w1 = w1
        self.w2 = w2
        self.epsilon = epsilon


def gcn_forward(layer: GnnLayer, h: Tensor, prop) -> Tensor:
    """H' = relu(P @ H @ W1) @ W2 with P the graph's propagation operator."""
    return matmul(relu(matmul(spmm(prop, h), layer.w1)), layer.w2)


def gin_forward(layer: GnnLayer, h: Tensor, adj) -> Tensor:
    """H' = relu(relu((1 + eps) * H + A @ H) @ W1) @ W2."""
    agg = add(mul(add(layer.epsilon, 1.0), h), spmm(adj, h))
    return matmul(relu(matmul(relu(agg), layer.w1)), layer.w2)


def readout(h: Tensor, sizes: np.ndarray, mode: str) -> Tensor:
    """Pool node rows per component: 'sum' or 'mean'."""
    pooled = segment_sum(h, sizes)
    if mode == "sum":
        return pooled
    if mode == "mean":
        return pooled / np.asarray(sizes, dtype=np.float64)[:, None]
    raise DataError(f"unknown readout mode '{mode}'")


def _adjacency_csr(block: BlockGraph) -> sp.csr_matrix:
    n = block.num_nodes
    if not block.edges:
        return sp.csr_matrix((n, n))
    e = np.asarray(block.edges, dtype=np.int64)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    vals = np.ones(len(rows))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def build_propagation(block: BlockGraph, kind: str, propagation: str) -> sp.csr_matrix:
    """Sparse operator applied per layer.

    GIN always uses the raw adjacency. GCN uses either the self-loop
    normalized adjacency D~^{-1/2}(A+I)D~^{-1/2} or the normalized Laplacian
    (isolated nodes: all-zero rows).
    """
    if kind == "gin":
        return _adjacency_csr(block)
    a = _adjacency_csr(block)
    n = block.num_nodes
    if propagation == "norm_adjacency":
        a = a + sp.identity(n, format="csr")
        deg = np.asarray(a.sum(axis=1)).ravel()
        inv_sqrt = 1.0 / np.sqrt(deg)
        d = sp.diags(inv_sqrt)
        return (d @ a @ d).tocsr()
    if propagation == "laplacian":
        deg = np.asarray(a.sum(axis=1)).ravel()
        nz = deg > 0
        inv_sqrt = np.where(nz, 1.0 / np.sqrt(np.where(nz, deg, 1.0)), 0.0)
        d = sp.diags(inv_sqrt)
        eye = sp.diags(nz.astype(np.float64))
        return (eye - d @ a @ d).tocsr()
    raise DataError(f"unknown propagation '{propagation}'")


class Model:
    """Input projection, a stack of GnnLayers, readout, classifier head."""

    def __init__(
        self,
        in_dim: int,
        hidden: int,
        num_classes: int,
        kind: str = "gin",
        num_layers: int = 5,
        readout_mode: str | None = None,
        propagation: str = "norm_adjacency",
        train_eps: bool = False,
        seed: int = 0,
    ):
        if kind not in ("gcn", "gin"):
            raise DataError(f"unknown model kind '{kind}'")
        self.kind = kind
        self.in_dim = in_dim
        self.hidden = hidden
        self.num_classes = num_classes
        self.num_layers = num_layers
        self.readout_mode = readout_mode or ("sum" if kind == "gin" else "mean")
        self.propagation = propagation
        self.train_eps = train_eps
        self.seed = seed

        def init(name, shape, fan_in):
            rng = CounterRng(derive_seed(seed, f"init:{name}"))
            return Tensor(rng.uniform_signed(shape, 1.0 / np.sqrt(fan_in)),
                          requires_grad=True)

        self.embed_w = init("embed.w", (in_dim, hidden), in_dim)
        self.embed_b = Tensor(np.zeros(hidden), requires_grad=True)
        self.layers: list[GnnLayer] = []
        for i in range(num_layers):
            w1 = init(f"layer{i}.w1", (hidden, hidden), hidden)
            w2 = init(f"layer{i}.w2", (hidden, hidden), hidden)
            eps = Tensor(np.asarray(0.0), requires_grad=train_eps)
            self.layers.append(GnnLayer(kind, w1, w2, eps))
        self.head_w = init("head.w", (hidden, num_classes), hidden)
        self.head_b = Tensor(np.zeros(num_classes), requires_grad=True)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = [("embed.w", self.embed_w), ("embed.b", self.embed_b)]
        for i, layer in enumerate(self.layers):
            out.append((f"layer{i}.w1", layer.w1))
            out.append((f"layer{i}.w2", layer.w2))
            if self.train_eps:
                out.append((f"layer{i}.eps", layer.epsilon))
        out.append(("head.w", self.head_w))
        out.append(("head.b", self.head_b))
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    @property
    def num_parameters(self) -> int:
        return sum(t.data.size for t in self.parameters())

    def zero_grad(self):
        for t in self.parameters():
            t.zero_grad()

    def forward(self, block: BlockGraph, collect_all: bool = False, prop=None):
        """Run the stack on a block graph.

        Returns ``(logits, node_reps)`` where node_reps is the last layer's
        node matrix, or ``(logits, [reps per stage])`` with ``collect_all``
        (stage 0 is the input projection output). ``prop`` may carry a
        precomputed propagation matrix for this block.
        """
        if block.features.shape[1] != self.in_dim:
            raise DimensionError(
                f"feature dim {block.features.shape[1]} != model in_dim {self.in_dim}"
            )
        if prop is None:
            prop = build_propagation(block, self.kind, self.propagation)
        h = add(matmul(Tensor(block.features), self.embed_w), self.embed_b)
        reps = [h]
        for layer in self.layers:
            h = gin_forward(layer, h, prop) if self.kind == "gin" else gcn_forward(layer, h, prop)
            reps.append(h)
        pooled = readout(h, block.component_sizes, self.readout_mode)
        logits = add(matmul(pooled, self.head_w), self.head_b)
        return (logits, reps) if collect_all else (logits, h)

    def graph_embeddings(self, block: BlockGraph) -> Tensor:
        """Pooled per-graph representations (pre-head)."""
        _, h = self.forward(block)
        return readout(h, block.component_sizes, self.readout_mode)


def forward_batch(model: Model, block: BlockGraph):
    """(logits |batch| x C, node_reps N_tot x hidden) for a block graph."""
    return model.forward(block)


def save_checkpoint(model: Model, path: str):
    """Flat text checkpoint: meta lines, then shape-tagged hex float arrays.

    Hex float serialization round-trips bitwise.
    """
    lines = [CHECKPOINT_MAGIC]
    meta = {
        "kind": model.kind,
        "in_dim": model.in_dim,
        "hidden": model.hidden,
        "num_classes": model.num_classes,
        "num_layers": model.num_layers,
        "readout": model.readout_mode,
        "propagation": model.propagation,
        "train_eps": int(model.train_eps),
        "seed": model.seed,
    }
    for key, value in meta.items():
        lines.append(f"meta {key} {value}")
    named = dict(model.named_parameters())
    # eps values are stored even when not trainable so state is complete
    for i, layer in enumerate(model.layers):
        named.setdefault(f"layer{i}.eps", layer.epsilon)
    for name in sorted(named):
        t = named[name]
        dims = " ".join(str(d) for d in t.data.shape)
        lines.append(f"param {name} {dims}".rstrip())
        lines.append(" ".join(v.hex() for v in t.data.ravel().tolist()) or "-")
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path: str) -> Model:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a gclab checkpoint")
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("meta "):
        _, key, value = lines[i].split(" ", 2)
        meta[key] = value
        i += 1
    try:
        model = Model(
            in_dim=int(meta["in_dim"]),
            hidden=int(meta["hidden"]),
            num_classes=int(meta["num_classes"]),
            kind=meta["kind"],
            num_layers=int(meta["num_layers"]),
            readout_mode=meta["readout"],
            propagation=meta["propagation"],
            train_eps=bool(int(meta["train_eps"])),
            seed=int(meta["seed"]),
        )
    except KeyError as exc:
        raise DataError(f"{path}: missing checkpoint meta {exc}") from exc
    named = dict(model.named_parameters())
    for j, layer in enumerate(model.layers):
        named.setdefault(f"layer{j}.eps", layer.epsilon)
    while i < len(lines) and lines[i] != "end":
        head = lines[i].split()
        if head[0] != "param":
            raise DataError(f"{path}: expected param line, got '{lines[i]}'")
        name = head[1]
        shape = tuple(int(d) for d in head[2:])
        if name not in named:
            raise DataError(f"{path}: unknown parameter '{name}'")
        payload = lines[i + 1]
        values = [] if payload == "-" else [float.fromhex(v) for v in payload.split()]
        arr = np.array(values, dtype=np.float64).reshape(shape)
        if arr.shape != named[name].data.shape:
            raise DataError(f"{path}: shape mismatch for '{name}'")
        named[name].data = arr
        i += 2
    return model
