"""Immutable text-attributed graphs and their dataset I/O.

Graphs are undirected, nodes are dense integer ids, each node carries a
free-text feature and an optional class label, and the class catalog maps
class indices to human-readable descriptions. All neighbor orderings are
ascending by id so downstream rendering is deterministic.

Dataset format (JSON Lines): one header object
``{"num_nodes": N, "classes": ["desc0", ...]}`` followed by one object per
node ``{"id": int, "text": str, "label": int|null, "neighbors": [int, ...]}``.
Splits are a JSON object ``{"known": [ids], "query": [ids]}``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator


class GraphFormatError(ValueError):
    """Raised when a dataset or splits file violates the format."""


@dataclass(frozen=True)
class TextGraph:
    adjacency: tuple[tuple[int, ...], ...]
    features: tuple[str, ...]
    labels: tuple[int | None, ...]
    class_catalog: tuple[str, ...]

    def __post_init__(self) -> None:
        n = len(self.adjacency)
        if len(self.features) != n or len(self.labels) != n:
            raise ValueError("adjacency, features and labels must have equal length")
        for node, neighbors in enumerate(self.adjacency):
            previous = -1
            for other in neighbors:
                if not 0 <= other < n:
                    raise ValueError(f"dangling endpoint: edge ({node}, {other})")
                if other == node:
                    raise ValueError(f"self-loop at node {node}")
                if other <= previous:
                    raise ValueError(f"adjacency of node {node} not sorted/deduplicated")
                if node not in self.adjacency[other]:
                    raise ValueError(f"asymmetric edge ({node}, {other})")
                previous = other
        c = len(self.class_catalog)
        for node, label in enumerate(self.labels):
            if label is not None and not 0 <= label < c:
                raise ValueError(f"label {label} of node {node} outside [0, {c})")

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    @property
    def class_count(self) -> int:
        return len(self.class_catalog)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def neighbors(self, node: int) -> tuple[int, ...]:
        self.check_node(node)
        return self.adjacency[node]

    def check_node(self, node: int) -> None:
        if not isinstance(node, int) or not 0 <= node < self.node_count:
            raise ValueError(f"invalid node id: {node}")

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each undirected edge once as (i, j) with i < j."""
        for i, neighbors in enumerate(self.adjacency):
            for j in neighbors:
                if i < j:
                    yield (i, j)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    @classmethod
    def build(
        cls,
        num_nodes: int,
        edges: Iterable[tuple[int, int]],
        features: Iterable[str],
        labels: Iterable[int | None],
        class_catalog: Iterable[str],
    ) -> "TextGraph":
        """Construct a graph, symmetrizing and deduplicating the edge list."""
        adj: list[set[int]] = [set() for _ in range(num_nodes)]
        for i, j in edges:
            if not (0 <= i < num_nodes and 0 <= j < num_nodes):
                raise ValueError(f"dangling endpoint: edge ({i}, {j})")
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            adj[i].add(j)
            adj[j].add(i)
        return cls(
            adjacency=tuple(tuple(sorted(s)) for s in adj),
            features=tuple(features),
            labels=tuple(labels),
            class_catalog=tuple(class_catalog),
        )


@dataclass(frozen=True)
class LabelView:
    """The label information the harness may reveal.

    ``known`` maps node ids to class indices that can be shown to a model;
    every other node renders as ``None``. ``query_set`` holds the nodes being
    classified and is always disjoint from the known set.
    """

    known: dict[int, int]
    query_set: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        overlap = set(self.known) & self.query_set
        if overlap:
            raise ValueError(f"known and query sets overlap: {sorted(overlap)[:5]}")

    def visible_label(self, node: int) -> int | None:
        return self.known.get(node)

    @classmethod
    def from_splits(
        cls, graph: TextGraph, known_ids: Iterable[int], query_ids: Iterable[int]
    ) -> "LabelView":
        known: dict[int, int] = {}
        for node in known_ids:
            graph.check_node(node)
            label = graph.labels[node]
            if label is None:
                raise ValueError(f"known node {node} has no label in the dataset")
            known[node] = label
        query = frozenset(query_ids)
        for node in query:
            graph.check_node(node)
        return cls(known=known, query_set=query)


def load_graph(path: str | Path) -> TextGraph:
    """Load a graph from the JSONL dataset format, symmetrizing edges."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise GraphFormatError(f"{path}: empty dataset file")

    def fail(lineno: int, message: str) -> GraphFormatError:
        return GraphFormatError(f"{path}:{lineno}: {message}")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise fail(1, f"malformed header: {exc}") from exc
    if not isinstance(header, dict) or "num_nodes" not in header or "classes" not in header:
        raise fail(1, "header must contain num_nodes and classes")
    num_nodes = header["num_nodes"]
    classes = header["classes"]
    if not isinstance(num_nodes, int) or num_nodes < 0:
        raise fail(1, "num_nodes must be a non-negative integer")
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise fail(1, "classes must be a list of strings")

    features: list[str | None] = [None] * num_nodes
    labels: list[int | None] = [None] * num_nodes
    seen: set[int] = set()
    edges: list[tuple[int, int]] = []
    for offset, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise fail(offset, f"malformed record: {exc}") from exc
        if not isinstance(record, dict):
            raise fail(offset, "node record must be an object")
        node = record.get("id")
        if not isinstance(node, int) or not 0 <= node < num_nodes:
            raise fail(offset, f"invalid node id: {node!r}")
        if node in seen:
            raise fail(offset, f"duplicate record for node {node}")
        seen.add(node)
        text = record.get("text")
        if not isinstance(text, str):
            raise fail(offset, f"node {node}: text must be a string")
        label = record.get("label")
        if label is not None:
            if not isinstance(label, int):
                raise fail(offset, f"node {node}: label must be an integer or null")
            if not 0 <= label < len(classes):
                raise fail(offset, f"node {node}: label {label} outside [0, {len(classes)})")
        neighbors = record.get("neighbors")
        if not isinstance(neighbors, list) or not all(isinstance(v, int) for v in neighbors):
            raise fail(offset, f"node {node}: neighbors must be a list of integers")
        for other in neighbors:
            if not 0 <= other < num_nodes:
                raise fail(offset, f"dangling endpoint: edge ({node}, {other})")
            if other == node:
                raise fail(offset, f"self-loop at node {node}")
            edges.append((node, other))
        features[node] = text
        labels[node] = label

    missing = [n for n in range(num_nodes) if n not in seen]
    if missing:
        raise GraphFormatError(f"{path}: missing records for nodes {missing[:5]}")
    return TextGraph.build(num_nodes, edges, [f or "" for f in features], labels, classes)


def save_graph(graph: TextGraph, path: str | Path) -> None:
    """Write a graph in the JSONL dataset format (round-trips load_graph)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        header = {"num_nodes": graph.node_count, "classes": list(graph.class_catalog)}
        handle.write(json.dumps(header) + "\n")
        for node in range(graph.node_count):
            record = {
                "id": node,
                "text": graph.features[node],
                "label": graph.labels[node],
                "neighbors": list(graph.adjacency[node]),
            }
            handle.write(json.dumps(record) + "\n")


def load_splits(path: str | Path) -> tuple[list[int], list[int]]:
    """Read a splits file, returning (known ids, query ids)."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict) or "known" not in data or "query" not in data:
        raise GraphFormatError(f"{path}: splits file must contain known and query lists")
    return list(data["known"]), list(data["query"])


def khop(graph: TextGraph, node: int, k: int) -> list[int]:
    """Nodes exactly ``k`` hops from ``node``, ascending; khop(g, v, 0) == [v]."""
    graph.check_node(node)
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return [node]
    visited = {node}
    frontier = [node]
    for _ in range(k):
        if not frontier:
            return []
        ring: set[int] = set()
        for current in frontier:
            for other in graph.adjacency[current]:
                if other not in visited:
                    ring.add(other)
        visited |= ring
        frontier = sorted(ring)
    return frontier


def khop_with_limit(
    graph: TextGraph, node: int, k: int, visit_budget: list[int]
) -> list[int]:
    """khop variant that charges BFS work against a shared visit budget.

    ``visit_budget`` is a single-element list holding the remaining allowance;
    it is decremented in place. Raises ValueError when exhausted.
    """
    graph.check_node(node)
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return [node]
    visited = {node}
    frontier = [node]
    for _ in range(k):
        if not frontier:
            return []
        ring: set[int] = set()
        for current in frontier:
            visit_budget[0] -= 1 + len(graph.adjacency[current])
            if visit_budget[0] < 0:
                raise ValueError("result too large")
            for other in graph.adjacency[current]:
                if other not in visited:
                    ring.add(other)
        visited |= ring
        frontier = sorted(ring)
    return frontier


def edge_homophily(graph: TextGraph) -> float:
    """Percentage of edges whose endpoints share a label.

    Requires every node to be labeled; raises on an empty edge set.
    """
    unlabeled = [n for n, label in enumerate(graph.labels) if label is None]
    if unlabeled:
        raise ValueError(f"edge homophily needs all nodes labeled; missing {unlabeled[:5]}")
    total = 0
    same = 0
    for i, j in graph.edges():
        total += 1
        if graph.labels[i] == graph.labels[j]:
            same += 1
    if total == 0:
        raise ValueError("edge homophily undefined on an empty edge set")
    return 100.0 * same / total


def stats(graph: TextGraph) -> dict:
    """Dataset-level statistics: average degree, average text length (in
    characters), class count, and edge homophily (None when any node is
    unlabeled or the graph has no edges)."""
    n = graph.node_count
    avg_degree = (2 * graph.edge_count / n) if n else 0.0
    avg_text_length = (sum(len(t) for t in graph.features) / n) if n else 0.0
    try:
        homophily: float | None = edge_homophily(graph)
    except ValueError:
        homophily = None
    return {
        "avg_degree": avg_degree,
        "avg_text_length": avg_text_length,
        "class_count": graph.class_count,
        "homophily": homophily,
    }


def connected_component(graph: TextGraph, node: int) -> set[int]:
    """All nodes reachable from ``node`` (used by ring-coverage checks)."""
    graph.check_node(node)
    seen = {node}
    queue = deque([node])
    while queue:
        current = queue.popleft()
        for other in graph.adjacency[current]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    return seen
