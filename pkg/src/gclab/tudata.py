"""Loader for the plain-text benchmark graph format.

A dataset directory holds files sharing one prefix (found from ``*_A.txt``):

  <DS>_A.txt                one edge per line as "i, j", node ids 1-based
                            and global across the whole dataset
  <DS>_graph_indicator.txt  line k: graph id (1-based) of node k
  <DS>_graph_labels.txt     line g: class label of graph g
  <DS>_node_labels.txt      optional; line k: integer label of node k

Edges are undirected and may appear in both orientations; they are
deduplicated. Self-loop lines are dropped. Graph labels are remapped to a
contiguous [0, C) by sorted original value. Node labels become one-hot
features; without node labels, nodes get degree one-hot features capped at
``degree_cap``.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DataError
from .graphs import Graph, GraphDataset, degree_onehot_features

DEGREE_CAP = 32


def _read_int_lines(path: str, what: str) -> list[int]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-integer {what} '{line}'") from exc
    return out


def _find_prefix(directory: str) -> str:
    hits = [f for f in sorted(os.listdir(directory)) if f.endswith("_A.txt")]
    if not hits:
        raise DataError(f"{directory}: no *_A.txt edge file found")
    if len(hits) > 1:
        raise DataError(f"{directory}: multiple *_A.txt files: {hits}")
    return hits[0][: -len("_A.txt")]


def load_tu_dataset(directory: str, degree_cap: int = DEGREE_CAP) -> GraphDataset:
    """Parse a dataset directory into a GraphDataset (no splits, no noise)."""
    if not os.path.isdir(directory):
        raise DataError(f"{directory}: not a directory")
    prefix = _find_prefix(directory)

    def path(suffix: str) -> str:
        return os.path.join(directory, f"{prefix}_{suffix}.txt")

    for required in ("graph_indicator", "graph_labels"):
        if not os.path.exists(path(required)):
            raise DataError(f"missing mandatory file {path(required)}")

    indicator = _read_int_lines(path("graph_indicator"), "graph id")
    raw_labels = _read_int_lines(path("graph_labels"), "graph label")
    num_graphs = len(raw_labels)
    num_nodes = len(indicator)
    if min(indicator) != 1 or max(indicator) != num_graphs:
        raise DataError(
            f"graph_indicator covers ids {min(indicator)}..{max(indicator)} "
            f"but there are {num_graphs} graph labels"
        )

    # global node id -> (graph index, local node index)
    indicator = np.asarray(indicator, dtype=np.int64) - 1
    local_index = np.zeros(num_nodes, dtype=np.int64)
    counts = np.zeros(num_graphs, dtype=np.int64)
    for k, g in enumerate(indicator):
        local_index[k] = counts[g]
        counts[g] += 1
    if (counts == 0).any():
        raise DataError("some graph has no nodes")

    edge_sets: list[set[tuple[int, int]]] = [set() for _ in range(num_graphs)]
    with open(path("A")) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise DataError(f"{path('A')}:{lineno}: expected 'i, j', got '{line}'")
            try:
                u, v = int(parts[0]) - 1, int(parts[1]) - 1
            except ValueError as exc:
                raise DataError(f"{path('A')}:{lineno}: non-integer node id") from exc
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise DataError(f"{path('A')}:{lineno}: node id out of range")
            if indicator[u] != indicator[v]:
                raise DataError(f"{path('A')}:{lineno}: edge crosses graphs")
            if u == v:
                continue  # stray self-loops are dropped
            g = indicator[u]
            i, j = int(local_index[u]), int(local_index[v])
            edge_sets[g].add((min(i, j), max(i, j)))

    node_labels = None
    if os.path.exists(path("node_labels")):
        raw_nodes = _read_int_lines(path("node_labels"), "node label")
        if len(raw_nodes) != num_nodes:
            raise DataError("node_labels length does not match graph_indicator")
        values = sorted(set(raw_nodes))
        remap = {v: k for k, v in enumerate(values)}
        node_labels = np.array([remap[v] for v in raw_nodes], dtype=np.int64)
        feat_dim = len(values)

    label_values = sorted(set(raw_labels))
    label_remap = {v: k for k, v in enumerate(label_values)}

    graphs = []
    for g in range(num_graphs):
        n = int(counts[g])
        if node_labels is not None:
            feats = np.zeros((n, feat_dim))
            for k in np.flatnonzero(indicator == g):
                feats[local_index[k], node_labels[k]] = 1.0
            graph = Graph(feats, sorted(edge_sets[g]),
                          label=label_remap[raw_labels[g]], graph_id=g)
        else:
            graph = Graph(np.zeros((n, 1)), sorted(edge_sets[g]),
                          label=label_remap[raw_labels[g]], graph_id=g)
            graph.node_features = degree_onehot_features(graph, degree_cap)
        graphs.append(graph)

    return GraphDataset.from_graphs(graphs, num_classes=len(label_values))


def save_tu_dataset(dataset: GraphDataset, directory: str, name: str = "DS"):
    """Write a dataset in the text format (edges, indicator, labels).

    Node features are not serialized; reloading a featureless directory
    regenerates degree one-hot features.
    """
    os.makedirs(directory, exist_ok=True)

    def path(suffix: str) -> str:
        return os.path.join(directory, f"{name}_{suffix}.txt")

    edge_lines = []
    indicator_lines = []
    offset = 0
    for g_index, g in enumerate(dataset.graphs, 1):
        for i, j in g.edges:
            edge_lines.append(f"{offset + i + 1}, {offset + j + 1}")
            edge_lines.append(f"{offset + j + 1}, {offset + i + 1}")
        indicator_lines.extend([str(g_index)] * g.num_nodes)
        offset += g.num_nodes

    with open(path("A"), "w") as fh:
        fh.write("\n".join(edge_lines) + ("\n" if edge_lines else ""))
    with open(path("graph_indicator"), "w") as fh:
        fh.write("\n".join(indicator_lines) + "\n")
    with open(path("graph_labels"), "w") as fh:
        fh.write("\n".join(str(int(y)) for y in dataset.true_labels) + "\n")
