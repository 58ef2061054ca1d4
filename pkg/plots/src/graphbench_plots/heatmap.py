"""Accuracy heatmaps from ablation grid CSVs.

Reads only the aggregate (seed=ALL) rows, pivots them into a full
(x_rate, y_rate) matrix, and renders one annotated cell per pair. Cells
whose aggregate accuracy is the literal ``TokenLimit`` are hatched gray and
labeled ``TL`` instead of colored by value. Plotting never mutates inputs,
and row order in the CSV is irrelevant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .common import TOKEN_LIMIT, SchemaError

REQUIRED_COLUMNS = {
    "dataset",
    "mode",
    "x_kind",
    "x_rate",
    "y_kind",
    "y_rate",
    "seed",
    "accuracy",
}

class IncompleteGridError(ValueError):
    """The aggregate rows do not cover the full rate product."""


@dataclass(frozen=True)
class HeatmapSpec:
    csv_path: str | Path
    output_path: str | Path
    x_label: str | None = None
    y_label: str | None = None
    x_kind: str | None = None
    y_kind: str | None = None
    vmin: float = 0.0
    vmax: float = 1.0


@dataclass
class HeatmapRender:
    """What ended up in the figure; returned so callers can verify it."""

    output_path: Path
    x_rates: list[float]
    y_rates: list[float]
    accuracy: np.ndarray  # shape (len(y_rates), len(x_rates)), NaN where TokenLimit
    token_limited: np.ndarray  # boolean, same shape
    title: str = ""
    cell_count: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        self.cell_count = int(self.accuracy.size)


def read_aggregate_cells(csv_path: str | Path):
    """Aggregate cell values keyed by (x_rate, y_rate), plus axis metadata."""
    path = Path(csv_path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        columns = set(reader.fieldnames or [])
        missing = REQUIRED_COLUMNS - columns
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        cells: dict[tuple[float, float], str] = {}
        x_kinds: set[str] = set()
        y_kinds: set[str] = set()
        titles: set[str] = set()
        for row in reader:
            if row["seed"] != "ALL":
                continue
            try:
                key = (float(row["x_rate"]), float(row["y_rate"]))
            except ValueError as exc:
                raise SchemaError(f"{path}: bad rate in row {row}") from exc
            cells[key] = row["accuracy"]
            x_kinds.add(row["x_kind"])
            y_kinds.add(row["y_kind"])
            titles.add(f"{row['dataset']} / {row['mode']}")
    if not cells:
        raise SchemaError(f"{path}: no aggregate (seed=ALL) rows")
    if len(x_kinds) != 1 or len(y_kinds) != 1:
        raise SchemaError(f"{path}: mixed axis kinds {x_kinds} x {y_kinds}")
    return cells, x_kinds.pop(), y_kinds.pop(), " | ".join(sorted(titles))


def render_heatmap(spec: HeatmapSpec) -> HeatmapRender:
    """Render the grid to ``spec.output_path`` and return what was drawn."""
    cells, x_kind, y_kind, title = read_aggregate_cells(spec.csv_path)
    if spec.x_kind is not None and spec.x_kind != x_kind:
        raise SchemaError(f"CSV x axis is {x_kind!r}, expected {spec.x_kind!r}")
    if spec.y_kind is not None and spec.y_kind != y_kind:
        raise SchemaError(f"CSV y axis is {y_kind!r}, expected {spec.y_kind!r}")
    x_rates = sorted({x for x, _ in cells})
    y_rates = sorted({y for _, y in cells})
    missing = [(x, y) for x in x_rates for y in y_rates if (x, y) not in cells]
    if missing:
        raise IncompleteGridError(f"missing aggregate cells: {missing[:5]}")

    accuracy = np.full((len(y_rates), len(x_rates)), np.nan)
    limited = np.zeros_like(accuracy, dtype=bool)
    for (x, y), value in cells.items():
        row, col = y_rates.index(y), x_rates.index(x)
        if value == TOKEN_LIMIT:
            limited[row, col] = True
        else:
            try:
                accuracy[row, col] = float(value)
            except ValueError as exc:
                raise SchemaError(f"bad accuracy value {value!r}") from exc

    figure, axes = plt.subplots(
        figsize=(1.2 * len(x_rates) + 2.2, 1.0 * len(y_rates) + 1.8)
    )
    masked = np.ma.masked_invalid(accuracy)
    mesh = axes.imshow(
        masked,
        origin="lower",
        cmap="viridis",
        vmin=spec.vmin,
        vmax=spec.vmax,
        aspect="auto",
    )
    for row in range(len(y_rates)):
        for col in range(len(x_rates)):
            if limited[row, col]:
                axes.add_patch(
                    plt.Rectangle(
                        (col - 0.5, row - 0.5), 1, 1,
                        facecolor="lightgray", hatch="//", edgecolor="dimgray",
                    )
                )
                axes.text(col, row, "TL", ha="center", va="center", fontsize=9)
            else:
                value = accuracy[row, col]
                shade = "white" if value < (spec.vmin + spec.vmax) / 2 else "black"
                axes.text(
                    col, row, f"{100 * value:.1f}",
                    ha="center", va="center", fontsize=8, color=shade,
                )
    axes.set_xticks(range(len(x_rates)), [f"{r:g}" for r in x_rates])
    axes.set_yticks(range(len(y_rates)), [f"{r:g}" for r in y_rates])
    axes.set_xlabel(spec.x_label or x_kind)
    axes.set_ylabel(spec.y_label or y_kind)
    axes.set_title(title, fontsize=9)
    figure.colorbar(mesh, ax=axes, label="accuracy")
    figure.tight_layout()
    output = Path(spec.output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(output, dpi=150)
    plt.close(figure)
    return HeatmapRender(
        output_path=output,
        x_rates=x_rates,
        y_rates=y_rates,
        accuracy=accuracy,
        token_limited=limited,
        title=title,
    )
