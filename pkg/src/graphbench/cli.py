"""Command-line entry points: run, grid, stats, repl."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dsl import QueryParseError, eval_query, parse_query
from .graph import LabelView, load_graph, load_splits, stats
from .runner import (
    ExperimentConfig,
    apply_overrides,
    run_experiment,
    run_grid_experiment,
)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--dataset", help="override dataset path")
    parser.add_argument("--splits", help="override splits path")
    parser.add_argument("--mode", help="override mode kind")
    parser.add_argument("--hops", type=int, help="prompt hop radius (0, 1 or 2)")
    parser.add_argument("--budget-cap", type=int, help="neighbors kept per hop per node")
    parser.add_argument("--max-steps", type=int, help="loop step limit")
    parser.add_argument("--episodes-per-seed", type=int)
    parser.add_argument("--context-limit", type=int)
    parser.add_argument("--output-dir")
    parser.add_argument("--workers", type=int)
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any scalar config key (dots reach nested keys)",
    )


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    named = {
        "dataset": args.dataset,
        "splits": args.splits,
        "mode": args.mode,
        "hops": args.hops,
        "budget_cap": args.budget_cap,
        "max_steps": args.max_steps,
        "episodes_per_seed": args.episodes_per_seed,
        "context_limit": args.context_limit,
        "output_dir": args.output_dir,
        "workers": args.workers,
    }
    overrides = [f"{k}={json.dumps(v)}" for k, v in named.items() if v is not None]
    if args.mode is not None:
        # A mode named on the command line replaces the config's mode list.
        data.pop("modes", None)
    data = apply_overrides(data, overrides + list(args.set))
    return ExperimentConfig.from_dict(data)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    report = run_experiment(config)
    for mode in report.modes:
        print(
            f"{report.dataset} / {mode.mode}: "
            f"{100 * mode.mean_accuracy:.2f}±{100 * mode.stddev:.2f}"
        )
    print(f"outputs written to {config.output_dir}")
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    config = _load_config(args)
    results = run_grid_experiment(config)
    for result in results:
        for (x_rate, y_rate), aggregate in sorted(result.aggregates.items()):
            shown = "TokenLimit" if aggregate.token_limited else f"{aggregate.mean:.4f}"
            print(
                f"{result.mode} {result.x_kind}={x_rate:g} "
                f"{result.y_kind}={y_rate:g}: {shown}"
            )
    print(f"heatmap CSVs written to {Path(config.output_dir) / 'heatmaps'}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    graph = load_graph(args.dataset)
    values = stats(graph)
    print(f"nodes: {graph.node_count}")
    print(f"edges: {graph.edge_count}")
    print(f"classes: {values['class_count']}")
    print(f"avg degree: {values['avg_degree']:.2f}")
    print(f"avg text length: {values['avg_text_length']:.2f}")
    if values["homophily"] is None:
        print("homophily: n/a (unlabeled nodes or no edges)")
    else:
        print(f"homophily: {values['homophily']:.2f}%")
    return 0


def _cmd_repl(args: argparse.Namespace) -> int:
    graph = load_graph(args.dataset)
    if args.splits:
        known_ids, query_ids = load_splits(args.splits)
        labels = LabelView.from_splits(graph, known_ids, query_ids)
    else:
        known = {n: c for n, c in enumerate(graph.labels) if c is not None}
        labels = LabelView(known=known)
    print(f"{graph.node_count} nodes, {graph.edge_count} edges. Ctrl-D to exit.")
    while True:
        try:
            line = input("query> ")
        except EOFError:
            print()
            return 0
        if not line.strip():
            continue
        try:
            ast = parse_query(line)
        except QueryParseError as exc:
            print(f"parse error: {exc}")
            continue
        print(eval_query(graph, labels, ast, render_cap=args.render_cap))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="graphbench")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run an experiment config")
    _add_config_arguments(run_parser)
    run_parser.set_defaults(fn=_cmd_run)

    grid_parser = commands.add_parser("grid", help="run a perturbation grid")
    _add_config_arguments(grid_parser)
    grid_parser.set_defaults(fn=_cmd_grid)

    stats_parser = commands.add_parser("stats", help="dataset statistics")
    stats_parser.add_argument("--dataset", required=True)
    stats_parser.set_defaults(fn=_cmd_stats)

    repl_parser = commands.add_parser("repl", help="interactive query console")
    repl_parser.add_argument("--dataset", required=True)
    repl_parser.add_argument("--splits")
    repl_parser.add_argument("--render-cap", type=int, default=4000)
    repl_parser.set_defaults(fn=_cmd_repl)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
