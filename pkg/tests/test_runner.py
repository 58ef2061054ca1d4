from __future__ import annotations

import json
from pathlib import Path

import pytest

from graphbench.dispatch import ModeSpec, parse_mode_spec
from graphbench.graph import LabelView
from graphbench.runner import (
    ExperimentConfig,
    apply_overrides,
    run_experiment,
    sample_query_nodes,
)

from conftest import FIXTURES


def test_sample_caps_at_query_size():
    labels = LabelView(known={}, query_set=frozenset({4, 1, 9}))
    assert sample_query_nodes(labels, 1000, seed=0) == [1, 4, 9]


def test_sample_deterministic_and_sorted():
    labels = LabelView(known={}, query_set=frozenset(range(50)))
    first = sample_query_nodes(labels, 10, seed=3)
    assert first == sample_query_nodes(labels, 10, seed=3)
    assert first == sorted(first)
    assert first != sample_query_nodes(labels, 10, seed=4)


def test_sample_rejects_empty():
    with pytest.raises(ValueError, match="query set is empty"):
        sample_query_nodes(LabelView(known={}), 5, seed=0)


def test_sample_uniform_inclusion_rate():
    labels = LabelView(known={}, query_set=frozenset(range(10)))
    hits = [0] * 10
    trials = 10_000
    for seed in range(trials):
        for node in sample_query_nodes(labels, 5, seed=seed):
            hits[node] += 1
    for count in hits:
        assert abs(count / trials - 0.5) < 0.02


def _config(tmp_path: Path, modes, **extra) -> ExperimentConfig:
    settings = dict(
        dataset=str(FIXTURES / "homophilic.jsonl"),
        splits=str(FIXTURES / "homophilic_splits.json"),
        modes=modes,
        backend={"kind": "scripted", "default": "Answer: 0"},
        seeds=[0, 1, 2],
        episodes_per_seed=10,
        output_dir=str(tmp_path / "out"),
        workers=1,
    )
    settings.update(extra)
    return ExperimentConfig(**settings)


def test_majority_equals_query_frequency(tmp_path):
    # homophilic: known classes tie 5 vs 5, so the modal class is 0; exactly
    # one of the two query nodes carries label 0.
    config = _config(tmp_path, [ModeSpec(kind="majority")])
    report = run_experiment(config)
    assert report.modes[0].mean_accuracy == 0.5
    assert report.modes[0].stddev == 0.0
    assert set(report.modes[0].per_seed.values()) == {0.5}


def test_status_counts_sum_to_episode_total(tmp_path):
    config = _config(tmp_path, [ModeSpec(kind="majority"), ModeSpec(kind="random")])
    report = run_experiment(config)
    for mode in report.modes:
        assert sum(mode.counts.values()) == 2 * 3  # |Q| x seeds


def test_results_csv_byte_exact_rerun(tmp_path):
    outputs = []
    for run in range(2):
        config = _config(
            tmp_path,
            [ModeSpec(kind="code"), ModeSpec(kind="prompt", hops=1)],
            backend={
                "kind": "scripted",
                "policy_file": str(_write_policy(tmp_path / f"p{run}.json")),
            },
            output_dir=str(tmp_path / f"out{run}"),
        )
        run_experiment(config)
        outputs.append((tmp_path / f"out{run}" / "results.csv").read_bytes())
    assert outputs[0] == outputs[1]


def _write_policy(path: Path) -> Path:
    path.write_text(
        json.dumps(
            {
                "rules": [
                    {"contains": "Columns:", "responder": "code-1hop-modal"},
                    {"responder": "prompt-1hop-modal"},
                ]
            }
        )
    )
    return path


def test_mean_invariant_under_seed_order(tmp_path):
    forward = _config(tmp_path, [ModeSpec(kind="random")], seeds=[0, 1, 2])
    backward = _config(
        tmp_path, [ModeSpec(kind="random")], seeds=[2, 1, 0], output_dir=str(tmp_path / "out2")
    )
    assert (
        run_experiment(forward).modes[0].mean_accuracy
        == run_experiment(backward).modes[0].mean_accuracy
    )


def test_transcripts_written_for_backend_modes(tmp_path):
    config = _config(tmp_path, [ModeSpec(kind="prompt", hops=1)])
    run_experiment(config)
    transcripts = list((tmp_path / "out" / "transcripts").rglob("*.jsonl"))
    assert transcripts
    first = transcripts[0].read_text().strip().splitlines()
    turn = json.loads(first[0])
    assert set(turn) == {"role", "text"}


def test_report_markdown_layout(tmp_path):
    config = _config(tmp_path, [ModeSpec(kind="majority"), ModeSpec(kind="random")])
    run_experiment(config)
    text = (tmp_path / "out" / "report.md").read_text()
    assert text.startswith("# Results: homophilic")
    assert "| majority |" in text
    assert "| random |" in text


def test_config_from_file_with_overrides(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "dataset": str(FIXTURES / "homophilic.jsonl"),
                "splits": str(FIXTURES / "homophilic_splits.json"),
                "mode": "prompt",
                "hops": 2,
                "budget_cap": 1,
                "backend": {"kind": "scripted", "default": "Answer: 0"},
                "seeds": [0],
                "episodes_per_seed": 2,
                "output_dir": str(tmp_path / "out"),
            }
        )
    )
    data = json.loads(config_path.read_text())
    data = apply_overrides(data, ["episodes_per_seed=5", "backend.default=hello"])
    config = ExperimentConfig.from_dict(data)
    assert config.episodes_per_seed == 5
    assert config.backend["default"] == "hello"
    assert config.modes[0] == ModeSpec(kind="prompt", hops=2, budget_cap=1)


def test_parse_mode_spec_labels():
    assert parse_mode_spec({"mode": "prompt", "hops": 0}).label == "prompt-0hop"
    assert parse_mode_spec({"mode": "prompt", "hops": 2, "budget_cap": 3}).label == "prompt-2hop-budget3"
    assert parse_mode_spec("tool-plus").label == "tool-plus"
    with pytest.raises(ValueError):
        parse_mode_spec({"mode": "nonsense"})


def test_config_validation(tmp_path):
    with pytest.raises(ValueError, match="seeds"):
        _config(tmp_path, [ModeSpec(kind="random")], seeds=[1, 1])
    with pytest.raises(ValueError, match="episodes_per_seed"):
        _config(tmp_path, [ModeSpec(kind="random")], episodes_per_seed=0)
    with pytest.raises(ValueError, match="at least one mode"):
        _config(tmp_path, [])
