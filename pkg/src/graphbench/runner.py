"""Experiment orchestration: configs, sampling, dispatch, and reports.

One config describes one dataset plus one or more modes. For every seed a
fresh query-node sample is drawn, episodes run through the configured
backend, and accuracy aggregates into a results CSV (machine-readable,
fractions) and a markdown report (percentages). Transcripts of episodes with
turns are persisted as JSONL, one turn per line, for audit.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .ablation import run_grid, sample_stddev
from .backend import Backend, HttpBackend, ScriptedBackend, ScriptedPolicy, load_policy
from .dispatch import (
    EpisodeSettings,
    ModeSpec,
    accuracy,
    parse_mode_spec,
    run_episodes,
    status_counts,
)
from .episodes import (
    ANSWERED,
    BACKEND_ERROR,
    PARSE_FAILURE,
    STEP_LIMIT,
    TOKEN_LIMIT,
    Episode,
)
from .graph import LabelView, load_graph, load_splits
from .seeding import derive_rng
from .tokens import CHARS_DIV_4, TokenBudget

log = logging.getLogger(__name__)

DEFAULT_SEEDS = [0, 1, 2, 3, 4]
DEFAULT_EPISODES_PER_SEED = 1000

RESULTS_CSV_COLUMNS = [
    "dataset",
    "mode",
    "seed",
    "accuracy",
    "n",
    "answered",
    "token_limit",
    "parse_failure",
    "step_limit",
    "backend_error",
    "tokens_in",
    "tokens_out",
    "stddev",
]


@dataclass
class ExperimentConfig:
    dataset: str
    splits: str
    modes: list[ModeSpec]
    backend: dict = field(default_factory=lambda: {"kind": "scripted"})
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    episodes_per_seed: int = DEFAULT_EPISODES_PER_SEED
    output_dir: str = "out"
    context_limit: int = 128_000
    counting_mode: str = CHARS_DIV_4
    model_name: str = ""
    max_output_tokens: int = 1024
    observation_cap: int = 4000
    render_cap: int = 4000
    workers: int = 8
    save_transcripts: bool = True
    dataset_name: str = ""
    # grid-only settings
    x_kind: str | None = None
    x_rates: list[float] = field(default_factory=list)
    y_kind: str | None = None
    y_rates: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.modes:
            raise ValueError("config needs at least one mode")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be non-empty and distinct")
        if self.episodes_per_seed < 1:
            raise ValueError("episodes_per_seed must be at least 1")
        if not self.dataset_name:
            self.dataset_name = Path(self.dataset).stem

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "modes" in data:
            modes = [parse_mode_spec(m) for m in data.pop("modes")]
        else:
            spec = {
                "mode": data.pop("mode"),
                "hops": data.pop("hops", 2),
                "budget_cap": data.pop("budget_cap", None),
                "max_steps": data.pop("max_steps", 20),
            }
            modes = [parse_mode_spec(spec)]
        return cls(modes=modes, **data)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def budget(self) -> TokenBudget:
        return TokenBudget(context_limit=self.context_limit, counting_mode=self.counting_mode)

    def settings(self) -> EpisodeSettings:
        return EpisodeSettings(
            budget=self.budget(),
            observation_cap=self.observation_cap,
            render_cap=self.render_cap,
            model_name=self.model_name,
            max_output_tokens=self.max_output_tokens,
            workers=self.workers,
        )


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key=value`` overrides (dots reach into nested objects)."""
    result = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override must look like key=value: {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = result
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return result


def make_backend_factory(backend_spec: dict, counting_mode: str = CHARS_DIV_4):
    """Build a per-episode backend factory from a backend config block.

    Scripted backends get a fresh instance per episode keyed by (seed, node);
    the HTTP backend is shared, since it is stateless behind its permit pool.
    """
    kind = backend_spec.get("kind", "scripted")
    if kind == "scripted":
        if "policy_file" in backend_spec:
            policy = load_policy(backend_spec["policy_file"])
        elif "policy" in backend_spec and isinstance(backend_spec["policy"], ScriptedPolicy):
            policy = backend_spec["policy"]
        else:
            policy = ScriptedPolicy(default=backend_spec.get("default"))
        return lambda episode_key: ScriptedBackend(
            policy, episode_key, counting_mode=counting_mode
        )
    if kind == "http":
        shared = HttpBackend(
            endpoint_url=backend_spec["endpoint_url"],
            model_name=backend_spec.get("model_name", ""),
            api_key_env=backend_spec.get("api_key_env", "GRAPHBENCH_API_KEY"),
            retries=backend_spec.get("retries", 3),
            timeout=backend_spec.get("timeout", 60.0),
            permits=backend_spec.get("permits", 8),
            counting_mode=counting_mode,
        )
        return lambda episode_key: shared
    raise ValueError(f"unknown backend kind: {kind!r}")


def sample_query_nodes(labels: LabelView, n: int, seed: int) -> list[int]:
    """Uniform sample without replacement, capped at the query-set size,
    returned in ascending order."""
    pool = sorted(labels.query_set)
    if not pool:
        raise ValueError("query set is empty")
    rng = derive_rng("query-sample", seed)
    if n >= len(pool):
        return pool
    return sorted(rng.sample(pool, n))


@dataclass
class ModeReport:
    mode: str
    mean_accuracy: float
    stddev: float
    per_seed: dict[int, float]
    counts: dict[str, int]
    tokens_in: int
    tokens_out: int
    wall_clock: float


@dataclass
class Report:
    dataset: str
    modes: list[ModeReport]


def _write_transcripts(
    directory: Path, mode_label: str, seed: int, episodes: Sequence[Episode]
) -> None:
    target_dir = directory / mode_label / f"seed{seed}"
    written = False
    for episode in episodes:
        if not episode.turns:
            continue
        if not written:
            target_dir.mkdir(parents=True, exist_ok=True)
            written = True
        path = target_dir / f"node{episode.target}.jsonl"
        with path.open("w", encoding="utf-8") as handle:
            for turn in episode.turns:
                handle.write(json.dumps({"role": turn.role, "text": turn.text}) + "\n")


def run_experiment(config: ExperimentConfig) -> Report:
    """Run every (mode, seed) block and write results.csv plus report.md."""
    graph = load_graph(config.dataset)
    known_ids, query_ids = load_splits(config.splits)
    labels = LabelView.from_splits(graph, known_ids, query_ids)
    settings = config.settings()
    backend_factory = make_backend_factory(config.backend, config.counting_mode)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    transcripts_dir = output_dir / "transcripts"

    rows: list[list] = []
    reports: list[ModeReport] = []
    for spec in config.modes:
        started = time.monotonic()
        per_seed_accuracy: dict[int, float] = {}
        merged_counts = {status: 0 for status in (ANSWERED, TOKEN_LIMIT, PARSE_FAILURE, STEP_LIMIT, BACKEND_ERROR)}
        tokens_in = 0
        tokens_out = 0
        for seed in config.seeds:
            nodes = sample_query_nodes(labels, config.episodes_per_seed, seed)
            episodes = run_episodes(
                spec, graph, labels, nodes, seed,
                backend_factory if spec.needs_backend else None,
                settings,
            )
            seed_accuracy = accuracy(episodes, graph)
            per_seed_accuracy[seed] = seed_accuracy
            counts = status_counts(episodes)
            for status, value in counts.items():
                merged_counts[status] += value
            tokens_in += sum(e.tokens_in for e in episodes)
            tokens_out += sum(e.tokens_out for e in episodes)
            if config.save_transcripts:
                _write_transcripts(transcripts_dir, spec.label, seed, episodes)
            rows.append(
                [
                    config.dataset_name,
                    spec.label,
                    seed,
                    f"{seed_accuracy:.6f}",
                    len(episodes),
                    counts[ANSWERED],
                    counts[TOKEN_LIMIT],
                    counts[PARSE_FAILURE],
                    counts[STEP_LIMIT],
                    counts[BACKEND_ERROR],
                    sum(e.tokens_in for e in episodes),
                    sum(e.tokens_out for e in episodes),
                    "",
                ]
            )
        accuracies = list(per_seed_accuracy.values())
        mean = sum(accuracies) / len(accuracies)
        stddev = sample_stddev(accuracies)
        rows.append(
            [
                config.dataset_name,
                spec.label,
                "ALL",
                f"{mean:.6f}",
                sum(merged_counts.values()),
                merged_counts[ANSWERED],
                merged_counts[TOKEN_LIMIT],
                merged_counts[PARSE_FAILURE],
                merged_counts[STEP_LIMIT],
                merged_counts[BACKEND_ERROR],
                tokens_in,
                tokens_out,
                f"{stddev:.6f}",
            ]
        )
        reports.append(
            ModeReport(
                mode=spec.label,
                mean_accuracy=mean,
                stddev=stddev,
                per_seed=per_seed_accuracy,
                counts=merged_counts,
                tokens_in=tokens_in,
                tokens_out=tokens_out,
                wall_clock=time.monotonic() - started,
            )
        )
        log.info(
            "%s / %s: %.2f%% ± %.2f", config.dataset_name, spec.label, 100 * mean, 100 * stddev
        )

    with (output_dir / "results.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULTS_CSV_COLUMNS)
        writer.writerows(rows)
    report = Report(dataset=config.dataset_name, modes=reports)
    (output_dir / "report.md").write_text(render_report(report), encoding="utf-8")
    return report


def render_report(report: Report) -> str:
    lines = [
        f"# Results: {report.dataset}",
        "",
        "| mode | accuracy (%) | answered | token_limit | parse_failure | step_limit | backend_error | tokens in/out | wall clock (s) |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for mode in report.modes:
        lines.append(
            "| {} | {:.2f}±{:.2f} | {} | {} | {} | {} | {} | {}/{} | {:.1f} |".format(
                mode.mode,
                100 * mode.mean_accuracy,
                100 * mode.stddev,
                mode.counts[ANSWERED],
                mode.counts[TOKEN_LIMIT],
                mode.counts[PARSE_FAILURE],
                mode.counts[STEP_LIMIT],
                mode.counts[BACKEND_ERROR],
                mode.tokens_in,
                mode.tokens_out,
                mode.wall_clock,
            )
        )
    lines.append("")
    return "\n".join(lines)


def run_grid_experiment(config: ExperimentConfig):
    """Grid entry point: one GridResult (and heatmap CSV) per configured mode."""
    if config.x_kind is None or config.y_kind is None:
        raise ValueError("grid config needs x_kind/x_rates and y_kind/y_rates")
    graph = load_graph(config.dataset)
    known_ids, query_ids = load_splits(config.splits)
    labels = LabelView.from_splits(graph, known_ids, query_ids)
    settings = config.settings()
    backend_factory = make_backend_factory(config.backend, config.counting_mode)
    output_dir = Path(config.output_dir)
    heatmap_dir = output_dir / "heatmaps"
    heatmap_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for spec in config.modes:
        csv_path = heatmap_dir / f"{config.dataset_name}_{spec.label}.csv"
        results.append(
            run_grid(
                graph,
                labels,
                spec,
                config.x_kind,
                config.x_rates,
                config.y_kind,
                config.y_rates,
                config.seeds,
                config.episodes_per_seed,
                backend_factory if spec.needs_backend else None,
                settings,
                dataset_name=config.dataset_name,
                csv_path=csv_path,
                counting_mode=config.counting_mode,
            )
        )
    return results
