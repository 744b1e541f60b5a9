"""Synthetic motif-classification datasets.

Each graph starts as an Erdos-Renyi base graph; its class plants one or
more copies of a class-specific motif on random node subsets:

    class 0: 4-cycles, class 1: 4-cliques, class 2: 6-cycles,
    class 3: 5-cliques, ... (even classes cycles, odd classes cliques,
    growing with the class index)

Labels are balanced exactly by round-robin assignment. Node features are
degree one-hots, so the motifs are visible to a message-passing model both
through degrees and through local structure. A combinatorial oracle
(clique counting plus degree histograms) certifies the classes separable.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError
from .graphs import Graph, GraphDataset, degree_onehot_features
from .rng import CounterRng, derive_seed

# matches the loader's cap for featureless text datasets, so a synthetic
# dataset exported to the text format reloads with identical features
FEATURE_DEGREE_CAP = 32


@dataclass
class SyntheticSpec:
    num_graphs: int = 500
    num_classes: int = 2
    nodes_min: int = 12
    nodes_max: int = 20
    edge_prob: float = 0.08
    motifs_per_graph: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError("need at least 2 classes")
        if not (1 <= self.nodes_min <= self.nodes_max):
            raise ConfigError("invalid node count range")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ConfigError("edge_prob outside [0, 1]")
        if self.num_graphs < 1 or self.motifs_per_graph < 1:
            raise ConfigError("num_graphs and motifs_per_graph must be positive")


def motif_for_class(c: int) -> tuple[str, int]:
    """(kind, size) of class c's planted motif."""
    if c % 2 == 0:
        return "cycle", 4 + c  # 4, 6, 8, ...
    return "clique", 4 + (c - 1) // 2  # 4, 5, 6, ...


def _motif_edges(kind: str, nodes: list[int]) -> list[tuple[int, int]]:
    if kind == "cycle":
        return [(nodes[k], nodes[(k + 1) % len(nodes)]) for k in range(len(nodes))]
    return list(combinations(nodes, 2))


def _make_graph(rng: CounterRng, spec: SyntheticSpec, label: int, graph_id: int) -> Graph:
    span = spec.nodes_max - spec.nodes_min + 1
    kind, size = motif_for_class(label)
    n = spec.nodes_min + int(rng.integers(span))
    n = max(n, size)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < spec.edge_prob:
                edges.add((i, j))
    for _ in range(spec.motifs_per_graph):
        chosen = [int(v) for v in rng.permutation(n)[:size]]
        for a, b in _motif_edges(kind, chosen):
            edges.add((min(a, b), max(a, b)))
    g = Graph(np.zeros((n, 1)), sorted(edges), label=label, graph_id=graph_id)
    g.node_features = degree_onehot_features(g, FEATURE_DEGREE_CAP)
    return g


def gen_synthetic(spec: SyntheticSpec) -> GraphDataset:
    """Deterministic dataset for the given spec (no splits, no noise)."""
    graphs = []
    for i in range(spec.num_graphs):
        label = i % spec.num_classes  # exact balance
        rng = CounterRng(derive_seed(spec.seed, f"graph:{i}"))
        graphs.append(_make_graph(rng, spec, label, graph_id=i))
    return GraphDataset.from_graphs(graphs, num_classes=spec.num_classes)


def count_cliques(g: Graph, size: int) -> int:
    """Number of complete subgraphs on ``size`` nodes (exact enumeration)."""
    adj = {i: set() for i in range(g.num_nodes)}
    for i, j in g.edges:
        adj[i].add(j)
        adj[j].add(i)
    # only nodes with enough neighbors can participate
    candidates = [v for v in range(g.num_nodes) if len(adj[v]) >= size - 1]
    count = 0
    for combo in combinations(candidates, size):
        if all(b in adj[a] for a, b in combinations(combo, 2)):
            count += 1
    return count


def oracle_predict(g: Graph, num_classes: int) -> int:
    """Combinatorial stand-in classifier: largest planted clique wins.

    Checks clique classes from largest to smallest motif; graphs with none
    of the clique motifs fall back to a degree-histogram vote among the
    cycle classes (all cycle motifs of class c have uniform degree >= 2, and
    larger cycles touch more nodes).
    """
    clique_classes = [c for c in range(num_classes) if motif_for_class(c)[0] == "clique"]
    for c in sorted(clique_classes, key=lambda c: -motif_for_class(c)[1]):
        if count_cliques(g, motif_for_class(c)[1]) > 0:
            return c
    cycle_classes = [c for c in range(num_classes) if motif_for_class(c)[0] == "cycle"]
    if len(cycle_classes) <= 1:
        return cycle_classes[0] if cycle_classes else 0
    # rough degree-histogram discriminator: count of nodes with degree >= 2
    deg = g.degrees()
    busy = int((deg >= 2).sum())
    best, best_gap = cycle_classes[0], np.inf
    for c in cycle_classes:
        gap = abs(busy - motif_for_class(c)[1])
        if gap < best_gap:
            best, best_gap = c, gap
    return best


def oracle_accuracy(dataset: GraphDataset) -> float:
    """Accuracy of the combinatorial oracle against true labels."""
    hits = sum(
        1 for g, y in zip(dataset.graphs, dataset.true_labels)
        if oracle_predict(g, dataset.num_classes) == y
    )
    return hits / len(dataset.graphs)
