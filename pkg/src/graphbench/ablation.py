"""Dependency ablations: perturb features, edges, or labels and grid the results.

Each perturbation axis draws a single permutation per seed, and a rate
removes a prefix of it, so the removals at a lower rate are always a subset
of those at a higher rate. Query nodes are sampled once per seed and reused
across every grid cell, so cell differences reflect the perturbation alone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .dispatch import (
    BackendFactory,
    EpisodeSettings,
    ModeSpec,
    accuracy,
    run_episodes,
    status_counts,
)
from .episodes import PARSE_FAILURE, STEP_LIMIT, TOKEN_LIMIT, ANSWERED
from .graph import LabelView, TextGraph
from .seeding import derive_rng
from .tokens import CHARS_DIV_4, truncate_to_fraction

FEATURE_TRUNCATION = "feature_truncation"
EDGE_DELETION = "edge_deletion"
LABEL_DELETION = "label_deletion"

PERTURBATION_KINDS = (FEATURE_TRUNCATION, EDGE_DELETION, LABEL_DELETION)

TOKEN_LIMIT_CELL_THRESHOLD = 0.5

GRID_CSV_COLUMNS = [
    "dataset",
    "mode",
    "x_kind",
    "x_rate",
    "y_kind",
    "y_rate",
    "seed",
    "accuracy",
    "n",
    "answered",
    "token_limit",
    "parse_failure",
    "step_limit",
    "stddev",
]


@dataclass(frozen=True)
class Perturbation:
    """One axis setting. For edge/label deletion ``rate`` is the fraction
    removed; for feature truncation it is the fraction of tokens kept."""

    kind: str
    rate: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind: {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"rate must be in [0, 1], got {self.rate}")


def deleted_edges(graph: TextGraph, rate: float, seed: int) -> set[tuple[int, int]]:
    """The prefix of the seeded edge permutation removed at this rate."""
    edges = list(graph.edges())
    rng = derive_rng("edge-deletion", seed)
    rng.shuffle(edges)
    return set(edges[: math.floor(rate * len(edges))])


def deleted_known(labels: LabelView, rate: float, seed: int) -> set[int]:
    known = sorted(labels.known)
    rng = derive_rng("label-deletion", seed)
    rng.shuffle(known)
    return set(known[: math.floor(rate * len(known))])


def apply_perturbation(
    graph: TextGraph,
    labels: LabelView,
    perturbation: Perturbation,
    counting_mode: str = CHARS_DIV_4,
) -> tuple[TextGraph, LabelView]:
    """Derive a perturbed copy; the originals are never touched."""
    if perturbation.kind == EDGE_DELETION:
        removed = deleted_edges(graph, perturbation.rate, perturbation.seed)
        adjacency = tuple(
            tuple(
                j
                for j in neighbors
                if (min(i, j), max(i, j)) not in removed
            )
            for i, neighbors in enumerate(graph.adjacency)
        )
        derived = TextGraph(
            adjacency=adjacency,
            features=graph.features,
            labels=graph.labels,
            class_catalog=graph.class_catalog,
        )
        return derived, labels
    if perturbation.kind == LABEL_DELETION:
        removed = deleted_known(labels, perturbation.rate, perturbation.seed)
        known = {n: c for n, c in labels.known.items() if n not in removed}
        return graph, LabelView(known=known, query_set=labels.query_set)
    features = tuple(
        truncate_to_fraction(text, perturbation.rate, counting_mode)
        for text in graph.features
    )
    derived = TextGraph(
        adjacency=graph.adjacency,
        features=features,
        labels=graph.labels,
        class_catalog=graph.class_catalog,
    )
    return derived, labels


@dataclass
class CellStats:
    accuracy: float
    n: int
    counts: dict[str, int]


@dataclass
class CellAggregate:
    mean: float
    stddev: float
    n: int
    counts: dict[str, int]
    token_limited: bool


@dataclass
class GridResult:
    dataset: str
    mode: str
    x_kind: str
    y_kind: str
    x_rates: list[float]
    y_rates: list[float]
    seeds: list[int]
    cells: dict[tuple[float, float, int], CellStats] = field(default_factory=dict)
    aggregates: dict[tuple[float, float], CellAggregate] = field(default_factory=dict)


def sample_stddev(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def _merge_counts(counts: Sequence[dict[str, int]]) -> dict[str, int]:
    merged: dict[str, int] = {}
    for entry in counts:
        for key, value in entry.items():
            merged[key] = merged.get(key, 0) + value
    return merged


def run_grid(
    graph: TextGraph,
    labels: LabelView,
    spec: ModeSpec,
    x_kind: str,
    x_rates: Sequence[float],
    y_kind: str,
    y_rates: Sequence[float],
    seeds: Sequence[int],
    episodes_per_seed: int,
    backend_factory: BackendFactory | None,
    settings: EpisodeSettings,
    dataset_name: str = "dataset",
    csv_path: str | Path | None = None,
    counting_mode: str = CHARS_DIV_4,
) -> GridResult:
    """Run the full (x_rate, y_rate, seed) grid and optionally write the CSV."""
    from .runner import sample_query_nodes

    if x_kind == y_kind:
        raise ValueError("grid axes must be distinct perturbation kinds")
    x_rates = sorted(x_rates)
    y_rates = sorted(y_rates)
    if list(seeds) != sorted(set(seeds)):
        seeds = sorted(set(seeds))
    nodes_per_seed = {
        seed: sample_query_nodes(labels, episodes_per_seed, seed) for seed in seeds
    }
    result = GridResult(
        dataset=dataset_name,
        mode=spec.label,
        x_kind=x_kind,
        y_kind=y_kind,
        x_rates=list(x_rates),
        y_rates=list(y_rates),
        seeds=list(seeds),
    )
    for x_rate in x_rates:
        for y_rate in y_rates:
            per_seed: list[CellStats] = []
            for seed in seeds:
                perturbed_graph, perturbed_labels = apply_perturbation(
                    graph, labels, Perturbation(x_kind, x_rate, seed), counting_mode
                )
                perturbed_graph, perturbed_labels = apply_perturbation(
                    perturbed_graph,
                    perturbed_labels,
                    Perturbation(y_kind, y_rate, seed),
                    counting_mode,
                )
                episodes = run_episodes(
                    spec,
                    perturbed_graph,
                    perturbed_labels,
                    nodes_per_seed[seed],
                    seed,
                    backend_factory,
                    settings,
                )
                stats = CellStats(
                    accuracy=accuracy(episodes, graph),
                    n=len(episodes),
                    counts=status_counts(episodes),
                )
                per_seed.append(stats)
                result.cells[(x_rate, y_rate, seed)] = stats
            accuracies = [s.accuracy for s in per_seed]
            counts = _merge_counts([s.counts for s in per_seed])
            total = sum(s.n for s in per_seed)
            limited = counts.get(TOKEN_LIMIT, 0) > TOKEN_LIMIT_CELL_THRESHOLD * total
            result.aggregates[(x_rate, y_rate)] = CellAggregate(
                mean=sum(accuracies) / len(accuracies),
                stddev=sample_stddev(accuracies),
                n=total,
                counts=counts,
                token_limited=limited,
            )
    if csv_path is not None:
        write_grid_csv(result, csv_path)
    return result


def write_grid_csv(result: GridResult, path: str | Path) -> None:
    """Per-seed rows followed by each cell's aggregate row (seed=ALL).

    A cell whose episodes were majority token-limited carries the literal
    ``TokenLimit`` in its aggregate accuracy column.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(GRID_CSV_COLUMNS)
        for x_rate in result.x_rates:
            for y_rate in result.y_rates:
                for seed in result.seeds:
                    cell = result.cells[(x_rate, y_rate, seed)]
                    writer.writerow(
                        [
                            result.dataset,
                            result.mode,
                            result.x_kind,
                            f"{x_rate:g}",
                            result.y_kind,
                            f"{y_rate:g}",
                            seed,
                            f"{cell.accuracy:.6f}",
                            cell.n,
                            cell.counts[ANSWERED],
                            cell.counts[TOKEN_LIMIT],
                            cell.counts[PARSE_FAILURE],
                            cell.counts[STEP_LIMIT],
                            "",
                        ]
                    )
                aggregate = result.aggregates[(x_rate, y_rate)]
                writer.writerow(
                    [
                        result.dataset,
                        result.mode,
                        result.x_kind,
                        f"{x_rate:g}",
                        result.y_kind,
                        f"{y_rate:g}",
                        "ALL",
                        "TokenLimit" if aggregate.token_limited else f"{aggregate.mean:.6f}",
                        aggregate.n,
                        aggregate.counts[ANSWERED],
                        aggregate.counts[TOKEN_LIMIT],
                        aggregate.counts[PARSE_FAILURE],
                        aggregate.counts[STEP_LIMIT],
                        f"{aggregate.stddev:.6f}",
                    ]
                )
