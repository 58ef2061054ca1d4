"""Results tables (modes x datasets) from runner results CSVs.

Cells show ``mean±std`` in percent to two decimals, taken from the
``seed=ALL`` aggregate rows. Per dataset column the best mean is bold and
the runner-up underlined; when the best is tied every tied cell is bold and
nothing is underlined. Markdown and LaTeX output share the same selection
logic.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .common import TOKEN_LIMIT, SchemaError

REQUIRED_COLUMNS = {"dataset", "mode", "seed", "accuracy", "stddev"}


def read_aggregates(csv_path: str | Path):
    """(modes in first-seen order, datasets in first-seen order, cell map)."""
    path = Path(csv_path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        columns = set(reader.fieldnames or [])
        missing = REQUIRED_COLUMNS - columns
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        modes: list[str] = []
        datasets: list[str] = []
        cells: dict[tuple[str, str], tuple[float | None, float]] = {}
        for row in reader:
            if row["seed"] != "ALL":
                continue
            mode, dataset = row["mode"], row["dataset"]
            if mode not in modes:
                modes.append(mode)
            if dataset not in datasets:
                datasets.append(dataset)
            if row["accuracy"] == TOKEN_LIMIT:
                cells[(mode, dataset)] = (None, 0.0)
                continue
            try:
                mean = float(row["accuracy"])
                std = float(row["stddev"]) if row["stddev"] else 0.0
            except ValueError as exc:
                raise SchemaError(f"{path}: bad aggregate row {row}") from exc
            cells[(mode, dataset)] = (mean, std)
    if not cells:
        raise SchemaError(f"{path}: no aggregate (seed=ALL) rows")
    return modes, datasets, cells


def _column_ranks(modes, cells, dataset):
    """(bold set, underline set) of mode names for one dataset column."""
    scored = [
        (mode, cells[(mode, dataset)][0])
        for mode in modes
        if (mode, dataset) in cells and cells[(mode, dataset)][0] is not None
    ]
    if not scored:
        return set(), set()
    best = max(value for _, value in scored)
    bold = {mode for mode, value in scored if value == best}
    if len(bold) > 1:
        return bold, set()
    rest = [value for _, value in scored if value != best]
    if not rest:
        return bold, set()
    second = max(rest)
    underline = {mode for mode, value in scored if value == second}
    return bold, underline


def _cell_text(cells, mode, dataset):
    if (mode, dataset) not in cells:
        return ""
    mean, std = cells[(mode, dataset)]
    if mean is None:
        return TOKEN_LIMIT
    return f"{100 * mean:.2f}±{100 * std:.2f}"


def render_table(csv_path: str | Path, fmt: str = "markdown") -> str:
    """Render the per-(mode, dataset) aggregate table as markdown or LaTeX."""
    if fmt not in ("markdown", "latex"):
        raise ValueError(f"unknown table format: {fmt!r}")
    modes, datasets, cells = read_aggregates(csv_path)
    emphasis = {dataset: _column_ranks(modes, cells, dataset) for dataset in datasets}

    def decorate(text, mode, dataset):
        if not text or text == TOKEN_LIMIT:
            return text
        bold, underline = emphasis[dataset]
        if mode in bold:
            return f"**{text}**" if fmt == "markdown" else rf"\textbf{{{text}}}"
        if mode in underline:
            return f"<u>{text}</u>" if fmt == "markdown" else rf"\underline{{{text}}}"
        return text

    rows = [
        [mode] + [decorate(_cell_text(cells, mode, d), mode, d) for d in datasets]
        for mode in modes
    ]
    if fmt == "markdown":
        lines = [
            "| mode | " + " | ".join(datasets) + " |",
            "| --- |" + " --- |" * len(datasets),
        ]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    lines = [
        r"\begin{tabular}{l" + "c" * len(datasets) + "}",
        r"\toprule",
        "mode & " + " & ".join(datasets) + r" \\",
        r"\midrule",
    ]
    lines += [" & ".join(row) + r" \\" for row in rows]
    lines += [r"\bottomrule", r"\end{tabular}"]
    return "\n".join(lines) + "\n"
