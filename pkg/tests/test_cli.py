from __future__ import annotations

import json

import pytest

from graphbench.cli import main

from conftest import FIXTURES


def test_stats_command(capsys):
    assert main(["stats", "--dataset", str(FIXTURES / "five_node.jsonl")]) == 0
    out = capsys.readouterr().out
    assert "nodes: 5" in out
    assert "avg degree: 1.60" in out
    assert "homophily: 50.00%" in out


def test_run_command_with_overrides(tmp_path, capsys):
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "dataset": str(FIXTURES / "homophilic.jsonl"),
                "splits": str(FIXTURES / "homophilic_splits.json"),
                "mode": "majority",
                "seeds": [0, 1],
                "episodes_per_seed": 2,
                "output_dir": str(tmp_path / "out"),
            }
        )
    )
    code = main(
        [
            "run",
            "--config",
            str(config_path),
            "--mode",
            "random",
            "--set",
            "seeds=[0]",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "homophilic / random:" in out
    assert (tmp_path / "out" / "results.csv").exists()
    assert (tmp_path / "out" / "report.md").exists()


def test_repl_evaluates_queries(tmp_path, capsys, monkeypatch):
    lines = iter(["neighbors(0)", "label(1)", "df.loc[3]", ""])

    def fake_input(prompt=""):
        try:
            return next(lines)
        except StopIteration:
            raise EOFError

    monkeypatch.setattr("builtins.input", fake_input)
    assert main(["repl", "--dataset", str(FIXTURES / "five_node.jsonl")]) == 0
    out = capsys.readouterr().out
    assert "[1, 2]" in out
    assert "parse error: unknown identifier df" in out


def test_unknown_mode_rejected(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "dataset": str(FIXTURES / "homophilic.jsonl"),
                "splits": str(FIXTURES / "homophilic_splits.json"),
                "mode": "telepathy",
                "output_dir": str(tmp_path / "out"),
            }
        )
    )
    with pytest.raises(ValueError, match="unknown mode"):
        main(["run", "--config", str(config_path)])
