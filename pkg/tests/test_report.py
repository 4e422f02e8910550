"""Report collection, CSV emission, and figure rendering."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from driversmith.report import collect, render_report, write_csv


def synth_campaign(root: Path, n_iters: int = 4) -> Path:
    statdir = root / "stats"
    statdir.mkdir(parents=True)
    covered = 0
    for i in range(1, n_iters + 1):
        covered += 7
        row = {
            "iteration": i,
            "combination": ["tc_create", "tc_feed"],
            "candidates": 3,
            "admitted": [f"s{i}"] if i % 2 else [],
            "new_branches": 7,
            "covered_branches": covered,
            "spent": f"0.00{i}",
            "energies": {"tc_feed": 1.0 / i, "tc_pick": 0.5},
        }
        (statdir / f"iter_{i}.json").write_text(json.dumps(row))
    outcomes = [
        {"failed_stage": None, "iteration": 1, "passed": True, "program": "pA"},
        {"failed_stage": "syntax", "iteration": 1, "passed": False, "program": "pB"},
        {"failed_stage": "execution", "iteration": 2, "passed": False, "program": "pC"},
        {"failed_stage": "execution", "iteration": 3, "passed": False, "program": "pD"},
        {"failed_stage": "coverage", "iteration": 4, "passed": False, "program": "pE"},
    ]
    with (statdir / "outcomes.jsonl").open("w") as f:
        for rec in outcomes:
            f.write(json.dumps(rec) + "\n")
    return root


def test_collect_orders_iterations_numerically(tmp_path: Path):
    camp = synth_campaign(tmp_path / "camp", n_iters=12)
    data = collect(camp)
    assert [r["iteration"] for r in data.rows] == list(range(1, 13))


def test_collect_aggregates_rejections_by_stage(tmp_path: Path):
    data = collect(synth_campaign(tmp_path / "camp"))
    assert data.rejections == {"passed": 1, "syntax": 1, "execution": 2, "coverage": 1}


def test_collect_tracks_energy_series(tmp_path: Path):
    data = collect(synth_campaign(tmp_path / "camp"))
    series = data.energies["tc_feed"]
    assert series[0] == (1, 1.0)
    assert len(series) == 4


def test_collect_empty_dir_yields_empty_data(tmp_path: Path):
    data = collect(tmp_path)
    assert data.rows == [] and data.rejections == {}


def test_write_csv_one_row_per_iteration(tmp_path: Path):
    data = collect(synth_campaign(tmp_path / "camp"))
    out = write_csv(data, tmp_path / "out.csv")
    with out.open() as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert rows[0]["combination"] == "tc_create tc_feed"
    assert rows[0]["admitted"] == "1"
    assert rows[-1]["covered_branches"] == "28"


def test_render_report_writes_csv_and_figures(tmp_path: Path):
    camp = synth_campaign(tmp_path / "camp")
    outdir = tmp_path / "report"
    written = render_report([camp], outdir)
    names = {p.name for p in written}
    assert "camp.csv" in names
    assert "coverage.png" in names
    assert f"energy_camp.png" in names
    assert f"rejections_camp.png" in names
    for p in written:
        assert p.exists() and p.stat().st_size > 0
    # PNG magic on every figure
    for p in written:
        if p.suffix == ".png":
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_render_report_overlays_multiple_campaigns(tmp_path: Path):
    a = synth_campaign(tmp_path / "alpha")
    b = synth_campaign(tmp_path / "beta")
    outdir = tmp_path / "report"
    written = render_report([a, b], outdir, labels=["guided", "blind"])
    names = {p.name for p in written}
    assert "guided.csv" in names and "blind.csv" in names
    assert "coverage.png" in names  # one shared overlay figure
