from __future__ import annotations

import csv
import random
from pathlib import Path

import numpy as np
import pytest

from graphbench_plots.cli import main
from graphbench_plots.heatmap import (
    HeatmapSpec,
    IncompleteGridError,
    SchemaError,
    render_heatmap,
)
from graphbench_plots.table import render_table

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_heatmap_2x2_cells_and_token_limit(tmp_path):
    out = tmp_path / "grid.png"
    render = render_heatmap(HeatmapSpec(csv_path=FIXTURES / "grid_2x2.csv", output_path=out))
    assert out.exists()
    assert out.read_bytes()[:8] == PNG_MAGIC
    assert render.cell_count == 4
    assert render.x_rates == [0.0, 1.0]
    assert render.y_rates == [0.0, 1.0]
    assert render.token_limited.sum() == 1
    assert render.token_limited[0, 1]  # x=1, y=0 is the TokenLimit cell
    assert np.isnan(render.accuracy[0, 1])
    assert render.accuracy[0, 0] == pytest.approx(0.85)
    assert render.accuracy[1, 1] == pytest.approx(0.35)


def test_heatmap_identity_grid_single_cell(tmp_path):
    out = tmp_path / "identity.png"
    render = render_heatmap(
        HeatmapSpec(csv_path=FIXTURES / "grid_identity.csv", output_path=out)
    )
    assert out.exists()
    assert render.cell_count == 1
    assert render.accuracy[0, 0] == pytest.approx(0.75)
    assert not render.token_limited.any()


def test_heatmap_row_order_irrelevant(tmp_path):
    rows = (FIXTURES / "grid_2x2.csv").read_text().strip().splitlines()
    header, body = rows[0], rows[1:]
    random.Random(0).shuffle(body)
    shuffled = tmp_path / "shuffled.csv"
    shuffled.write_text("\n".join([header] + body) + "\n")
    base = render_heatmap(
        HeatmapSpec(csv_path=FIXTURES / "grid_2x2.csv", output_path=tmp_path / "a.png")
    )
    other = render_heatmap(HeatmapSpec(csv_path=shuffled, output_path=tmp_path / "b.png"))
    assert np.array_equal(base.accuracy, other.accuracy, equal_nan=True)
    assert np.array_equal(base.token_limited, other.token_limited)


def test_heatmap_axis_kind_check(tmp_path):
    with pytest.raises(SchemaError, match="expected"):
        render_heatmap(
            HeatmapSpec(
                csv_path=FIXTURES / "grid_2x2.csv",
                output_path=tmp_path / "x.png",
                x_kind="label_deletion",
            )
        )


def test_heatmap_incomplete_grid(tmp_path):
    broken = tmp_path / "broken.csv"
    rows = (FIXTURES / "grid_2x2.csv").read_text().strip().splitlines()
    kept = [r for r in rows if not (",1,feature_truncation,1,ALL," in r)]
    broken.write_text("\n".join(kept) + "\n")
    with pytest.raises(IncompleteGridError):
        render_heatmap(HeatmapSpec(csv_path=broken, output_path=tmp_path / "x.png"))


def test_heatmap_schema_mismatch(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("foo,bar\n1,2\n")
    with pytest.raises(SchemaError, match="missing columns"):
        render_heatmap(HeatmapSpec(csv_path=bad, output_path=tmp_path / "x.png"))


def test_table_two_modes_first_bold(tmp_path):
    path = tmp_path / "results.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            "dataset,mode,seed,accuracy,n,answered,token_limit,parse_failure,step_limit,backend_error,tokens_in,tokens_out,stddev".split(",")
        )
        writer.writerow(["d", "a", "ALL", "0.80", "10", "10", "0", "0", "0", "0", "0", "0", "0.01"])
        writer.writerow(["d", "b", "ALL", "0.70", "10", "10", "0", "0", "0", "0", "0", "0", "0.01"])
    text = render_table(path)
    assert "| a | **80.00±1.00** |" in text
    assert "| b | <u>70.00±1.00</u> |" in text


def test_table_tie_bolds_both(tmp_path):
    path = tmp_path / "results.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            "dataset,mode,seed,accuracy,n,answered,token_limit,parse_failure,step_limit,backend_error,tokens_in,tokens_out,stddev".split(",")
        )
        writer.writerow(["d", "a", "ALL", "0.75", "10", "10", "0", "0", "0", "0", "0", "0", "0.02"])
        writer.writerow(["d", "b", "ALL", "0.75", "10", "10", "0", "0", "0", "0", "0", "0", "0.01"])
    text = render_table(path)
    assert "**75.00±2.00**" in text
    assert "**75.00±1.00**" in text
    assert "<u>" not in text


def test_table_matches_golden():
    expected = (GOLDENS / "table_multi.md").read_text(encoding="utf-8")
    assert render_table(FIXTURES / "results_multi.csv") == expected


def test_table_schema_mismatch(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(SchemaError):
        render_table(bad)


def test_cli_heatmap_and_table(tmp_path, capsys):
    image = tmp_path / "figure.png"
    assert main(["heatmap", "--csv", str(FIXTURES / "grid_2x2.csv"), "--out", str(image)]) == 0
    assert image.exists()
    assert "2x2 cells" in capsys.readouterr().out

    table = tmp_path / "table.md"
    assert main(["table", "--csv", str(FIXTURES / "results_multi.csv"), "--out", str(table)]) == 0
    assert table.read_text(encoding="utf-8") == (GOLDENS / "table_multi.md").read_text(encoding="utf-8")
