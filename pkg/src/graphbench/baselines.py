"""Reference predictors: random, majority label, and label propagation.

Label propagation is the literal power iteration: one-hot rows for known
nodes, zero rows elsewhere, then ten multiplications by the random-walk
normalized adjacency. Known labels are not re-clamped between steps. Ties
always resolve to the lowest class index; an all-zero score row falls back
to the majority known class.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .graph import LabelView, TextGraph
from .seeding import derive_rng

DEFAULT_PROPAGATION_STEPS = 10


@dataclass(frozen=True)
class Prediction:
    node: int
    class_index: int
    score_vector: tuple[float, ...] | None = None


def predict_random(catalog_size: int, query: Sequence[int], seed: int) -> list[Prediction]:
    """Uniform i.i.d. predictions over the class catalog, reproducible per seed."""
    if catalog_size < 1:
        raise ValueError("catalog_size must be at least 1")
    rng = derive_rng("random-baseline", seed)
    return [Prediction(node=q, class_index=rng.randrange(catalog_size)) for q in query]


def majority_class(known: dict[int, int]) -> int:
    """Modal class of the known labels; ties break to the lowest index."""
    if not known:
        raise ValueError("known label set is empty")
    counts = Counter(known.values())
    best = max(counts.items(), key=lambda item: (item[1], -item[0]))
    return best[0]


def predict_majority(labels: LabelView, query: Sequence[int]) -> list[Prediction]:
    """Assign every query node the most frequent known class."""
    modal = majority_class(labels.known)
    return [Prediction(node=q, class_index=modal) for q in query]


def normalized_adjacency(graph: TextGraph) -> sparse.csr_matrix:
    """Random-walk normalized adjacency; zero-degree nodes get all-zero rows."""
    n = graph.node_count
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for node, neighbors in enumerate(graph.adjacency):
        if not neighbors:
            continue
        weight = 1.0 / len(neighbors)
        for other in neighbors:
            rows.append(node)
            cols.append(other)
            vals.append(weight)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=np.float64)


def seed_matrix(graph: TextGraph, labels: LabelView) -> np.ndarray:
    """One-hot rows for known nodes, zero rows for everything else."""
    scores = np.zeros((graph.node_count, graph.class_count), dtype=np.float64)
    for node, label in labels.known.items():
        scores[node, label] = 1.0
    return scores


def propagate_labels(
    graph: TextGraph, labels: LabelView, steps: int = DEFAULT_PROPAGATION_STEPS
) -> np.ndarray:
    """Score matrix after ``steps`` propagation sweeps (no clamping)."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    adjacency = normalized_adjacency(graph)
    scores = seed_matrix(graph, labels)
    for _ in range(steps):
        scores = adjacency @ scores
    return scores


def label_propagation(
    graph: TextGraph,
    labels: LabelView,
    steps: int = DEFAULT_PROPAGATION_STEPS,
    query: Iterable[int] | None = None,
) -> list[Prediction]:
    """Predictions for the query nodes from the propagated score matrix.

    Nodes whose score row is all zeros (e.g. isolated nodes) receive the
    majority known class and carry no score vector.
    """
    scores = propagate_labels(graph, labels, steps)
    nodes = sorted(labels.query_set) if query is None else list(query)
    fallback = majority_class(labels.known) if labels.known else 0
    predictions: list[Prediction] = []
    for node in nodes:
        graph.check_node(node)
        row = scores[node]
        if not row.any():
            predictions.append(Prediction(node=node, class_index=fallback))
        else:
            predictions.append(
                Prediction(
                    node=node,
                    class_index=int(np.argmax(row)),
                    score_vector=tuple(float(v) for v in row),
                )
            )
    return predictions
