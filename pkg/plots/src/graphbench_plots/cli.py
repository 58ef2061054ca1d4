"""graphbench-plots: render heatmaps and tables from graphbench CSV outputs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .heatmap import HeatmapSpec, render_heatmap
from .table import render_table


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="graphbench-plots")
    commands = parser.add_subparsers(dest="command", required=True)

    heatmap = commands.add_parser("heatmap", help="render an ablation grid CSV")
    heatmap.add_argument("--csv", required=True)
    heatmap.add_argument("--out", required=True, help="output image path (png, pdf, ...)")
    heatmap.add_argument("--x-label")
    heatmap.add_argument("--y-label")
    heatmap.add_argument("--x-kind", help="fail unless the CSV x axis is this kind")
    heatmap.add_argument("--y-kind", help="fail unless the CSV y axis is this kind")
    heatmap.add_argument("--vmin", type=float, default=0.0)
    heatmap.add_argument("--vmax", type=float, default=1.0)

    table = commands.add_parser("table", help="render a results CSV as a table")
    table.add_argument("--csv", required=True)
    table.add_argument("--out", required=True)
    table.add_argument("--format", choices=["markdown", "latex"], default="markdown")

    args = parser.parse_args(argv)
    if args.command == "heatmap":
        spec = HeatmapSpec(
            csv_path=args.csv,
            output_path=args.out,
            x_label=args.x_label,
            y_label=args.y_label,
            x_kind=args.x_kind,
            y_kind=args.y_kind,
            vmin=args.vmin,
            vmax=args.vmax,
        )
        render = render_heatmap(spec)
        print(f"wrote {render.output_path} ({len(render.x_rates)}x{len(render.y_rates)} cells)")
        return 0
    text = render_table(args.csv, fmt=args.format)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
