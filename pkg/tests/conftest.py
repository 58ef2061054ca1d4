from __future__ import annotations

import random
from pathlib import Path

import pytest

from graphbench.graph import LabelView, TextGraph, load_graph, load_splits

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


def load_fixture(name: str) -> tuple[TextGraph, LabelView]:
    graph = load_graph(FIXTURES / f"{name}.jsonl")
    known, query = load_splits(FIXTURES / f"{name}_splits.json")
    return graph, LabelView.from_splits(graph, known, query)


@pytest.fixture(scope="session")
def five_node():
    return load_fixture("five_node")


@pytest.fixture(scope="session")
def homophilic():
    return load_fixture("homophilic")


def build_leak_fixture() -> tuple[TextGraph, LabelView]:
    """Three nodes on a path, nine classes; every held-out label sits in
    {6, 7, 8}, which no node id, hop count, list size, or label count can
    reach, so those digits can only appear through leakage."""
    classes = [
        "class alpha",
        "class bravo",
        "class charlie",
        "class delta",
        "class echo",
        "class foxtrot",
        "class golf",
        "class hotel",
        "class india",
    ]
    graph = TextGraph.build(
        3,
        [(0, 1), (1, 2)],
        ["first note", "second note", "third note"],
        [6, 0, 1],
        classes,
    )
    labels = LabelView(known={1: 0, 2: 1}, query_set=frozenset({0}))
    return graph, labels


def build_longtext_fixture() -> tuple[TextGraph, LabelView]:
    """A hub with 14 short-text leaves plus one genuinely long text two hops
    out: full neighborhood prompts overflow a 100-token context, while a
    cap-1 budget prompt stays far below it."""
    leaf_count = 14
    texts = ["hub node"]
    edges = []
    for i in range(1, leaf_count + 1):
        texts.append(f"leaf note number {i:02d}")
        edges.append((0, i))
    texts.append("catalog entry " + "specification detail " * 40)
    edges.append((leaf_count, leaf_count + 1))
    labels = [0] + [i % 2 for i in range(1, leaf_count + 1)] + [1]
    graph = TextGraph.build(leaf_count + 2, edges, texts, labels, ["red", "blue"])
    view = LabelView(
        known={i: labels[i] for i in range(1, leaf_count + 2)},
        query_set=frozenset({0}),
    )
    return graph, view


@pytest.fixture()
def longtext():
    return build_longtext_fixture()


def random_graph(
    rng: random.Random,
    max_nodes: int = 20,
    label_all: bool = True,
    class_count: int | None = None,
) -> TextGraph:
    """Erdos-Renyi style graph with random labels; may contain isolated nodes."""
    n = rng.randint(2, max_nodes)
    c = class_count or rng.randint(2, 4)
    p = rng.uniform(0.05, 0.4)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    if label_all:
        labels = [rng.randrange(c) for _ in range(n)]
    else:
        labels = [rng.randrange(c) if rng.random() < 0.8 else None for _ in range(n)]
    texts = [f"node text {i}" for i in range(n)]
    return TextGraph.build(n, edges, texts, labels, [f"class {k}" for k in range(c)])


def random_label_view(rng: random.Random, graph: TextGraph) -> LabelView:
    labeled = [n for n in range(graph.node_count) if graph.labels[n] is not None]
    rng.shuffle(labeled)
    cut = rng.randint(0, len(labeled))
    known = {n: graph.labels[n] for n in labeled[:cut]}
    query = frozenset(labeled[cut:])
    return LabelView(known=known, query_set=query)
