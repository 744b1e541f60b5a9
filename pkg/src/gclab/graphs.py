"""Graph containers, the normalized Laplacian, and block-diagonal batching.

A dataset of graphs is treated throughout as one large disconnected graph:
``block_diagonal`` stacks the node features and places each adjacency on the
diagonal. Per-graph quantities (Laplacians, energies, spectra) then agree
with the assembled block quantities, which several test suites check
explicitly.

Conventions fixed here:
  * edges are stored once with ``i < j`` and expanded symmetrically when a
    matrix is materialized;
  * isolated nodes get an all-zero Laplacian row/column (not 1 on the
    diagonal), so they contribute nothing to any smoothness measure;
  * everything is dense float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError


@dataclass
class Graph:
    """One undirected sample: node features, edge list, class label.

    ``edges`` holds each undirected edge exactly once as ``(i, j)`` with
    ``i < j``; no self-loops, both endpoints < num_nodes.
    """

    node_features: np.ndarray  # (N, m) float64
    edges: list[tuple[int, int]]
    label: int
    graph_id: int = 0

    def __post_init__(self):
        self.node_features = np.asarray(self.node_features, dtype=np.float64)
        if self.node_features.ndim != 2:
            raise DimensionError("node_features must be a 2-d (N, m) array")
        n = self.node_features.shape[0]
        if n < 1 or self.node_features.shape[1] < 1:
            raise DataError("graph needs at least one node and one feature dim")
        if not np.isfinite(self.node_features).all():
            raise DataError("node features must be finite")
        canon = set()
        for i, j in self.edges:
            if i == j:
                raise DataError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise DataError(f"edge ({i},{j}) out of range for {n} nodes")
            canon.add((min(i, j), max(i, j)))
        if len(canon) != len(self.edges):
            raise DataError("duplicate edges in edge list")
        self.edges = sorted(canon)

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.node_features.shape[1]

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix."""
        n = self.num_nodes
        a = np.zeros((n, n))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.num_nodes)
        for i, j in self.edges:
            d[i] += 1.0
            d[j] += 1.0
        return d


@dataclass
class GraphDataset:
    """Graph collection plus label/noise/split bookkeeping.

    ``assigned_labels`` are what training sees; ``true_labels`` stay intact
    for diagnostics. ``noise_mask[i]`` holds exactly when the two differ.
    """

    graphs: list[Graph]
    num_classes: int
    true_labels: np.ndarray
    assigned_labels: np.ndarray
    noise_mask: np.ndarray
    train_idx: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    test_idx: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))

    def __post_init__(self):
        self.true_labels = np.asarray(self.true_labels, dtype=np.int64)
        self.assigned_labels = np.asarray(self.assigned_labels, dtype=np.int64)
        self.noise_mask = np.asarray(self.noise_mask, dtype=bool)
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64)
        n = len(self.graphs)
        if not (len(self.true_labels) == len(self.assigned_labels) == len(self.noise_mask) == n):
            raise DimensionError("label arrays must match the number of graphs")
        if not np.array_equal(self.noise_mask, self.assigned_labels != self.true_labels):
            raise DataError("noise_mask inconsistent with label arrays")
        both = np.intersect1d(self.train_idx, self.test_idx)
        if both.size:
            raise DataError("train and test index sets overlap")
        for idx in (self.train_idx, self.test_idx):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise DataError("split index out of range")

    def __len__(self) -> int:
        return len(self.graphs)

    @classmethod
    def from_graphs(cls, graphs: list[Graph], num_classes: int) -> "GraphDataset":
        """Clean dataset: assigned == true, empty splits."""
        labels = np.array([g.label for g in graphs], dtype=np.int64)
        return cls(
            graphs=graphs,
            num_classes=num_classes,
            true_labels=labels,
            assigned_labels=labels.copy(),
            noise_mask=np.zeros(len(graphs), dtype=bool),
        )


@dataclass
class BlockGraph:
    """A list of graphs viewed as one disconnected graph.

    Row block i of ``features`` is graph i's feature matrix; no edge crosses
    a component boundary. ``component_offsets[i]`` is the first row of
    component i, whose size is ``component_sizes[i]``.
    """

    features: np.ndarray
    edges: list[tuple[int, int]]  # already offset into block coordinates
    component_offsets: np.ndarray
    component_sizes: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_components(self) -> int:
        return len(self.component_sizes)

    def adjacency(self) -> np.ndarray:
        n = self.num_nodes
        a = np.zeros((n, n))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.num_nodes)
        for i, j in self.edges:
            d[i] += 1.0
            d[j] += 1.0
        return d

    def as_graph(self, label: int = 0) -> Graph:
        """The block itself as a single Graph (label is a placeholder)."""
        return Graph(node_features=self.features, edges=list(self.edges), label=label)

    def split(self) -> list[np.ndarray]:
        """Per-component feature blocks, recovering the stacking order."""
        out = []
        for off, size in zip(self.component_offsets, self.component_sizes):
            out.append(self.features[off : off + size])
        return out


def normalized_laplacian(g: Graph | BlockGraph) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    Rows/columns of isolated nodes are all-zero rather than identity, so an
    isolated node carries zero energy and the spectrum stays in [0, 2].
    The result is symmetrized bitwise before returning.
    """
    n = g.num_nodes if isinstance(g, (Graph, BlockGraph)) else None
    if n is None:
        raise DimensionError("expected Graph or BlockGraph")
    d = g.degrees()
    lap = np.zeros((n, n))
    nz = d > 0
    lap[nz, nz] = 1.0
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(nz, 1.0 / np.sqrt(np.where(nz, d, 1.0)), 0.0)
    for i, j in g.edges:
        w = inv_sqrt[i] * inv_sqrt[j]
        lap[i, j] -= w
        lap[j, i] -= w
    return 0.5 * (lap + lap.T)


def block_diagonal(graphs: list[Graph]) -> BlockGraph:
    """Stack graphs into one block-diagonal graph, preserving order."""
    if not graphs:
        raise DataError("block_diagonal needs at least one graph")
    m = graphs[0].feature_dim
    for g in graphs:
        if g.feature_dim != m:
            raise DimensionError(
                f"feature dims differ: {g.feature_dim} vs {m} (graph_id={g.graph_id})"
            )
    sizes = np.array([g.num_nodes for g in graphs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    features = np.vstack([g.node_features for g in graphs])
    edges: list[tuple[int, int]] = []
    for off, g in zip(offsets, graphs):
        off = int(off)
        edges.extend((i + off, j + off) for i, j in g.edges)
    return BlockGraph(
        features=features,
        edges=edges,
        component_offsets=offsets,
        component_sizes=sizes,
    )


def degree_onehot_features(g: Graph, max_degree: int) -> np.ndarray:
    """One-hot encode min(deg(i), max_degree) per node; dim = max_degree + 1."""
    if max_degree < 1:
        raise DataError("max_degree must be >= 1")
    d = np.minimum(g.degrees().astype(np.int64), max_degree)
    out = np.zeros((g.num_nodes, max_degree + 1))
    out[np.arange(g.num_nodes), d] = 1.0
    return out
