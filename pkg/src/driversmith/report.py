"""Campaign reporting: delimited summaries plus rendered figures.

Reads the per-iteration stat files and outcome log a campaign leaves in its
working directory and produces a CSV next to a set of PNG charts: coverage
growth, per-API energy trajectories, and a histogram of which pipeline
stage rejected candidates. Multiple campaign directories can be overlaid
for comparison (e.g. a guided run against a blind one).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


@dataclass
class CampaignData:
    label: str
    rows: list[dict] = field(default_factory=list)
    rejections: dict[str, int] = field(default_factory=dict)
    energies: dict[str, list[tuple[int, float]]] = field(default_factory=dict)


def collect(campaign_dir: str | Path, label: str = "") -> CampaignData:
    campaign_dir = Path(campaign_dir)
    data = CampaignData(label=label or campaign_dir.name)
    statdir = campaign_dir / "stats"
    if statdir.exists():
        files = sorted(
            statdir.glob("iter_*.json"), key=lambda p: int(p.stem.split("_")[1])
        )
        for p in files:
            row = json.loads(p.read_text())
            data.rows.append(row)
            for api, energy in row.get("energies", {}).items():
                data.energies.setdefault(api, []).append((row["iteration"], energy))
        outcomes = statdir / "outcomes.jsonl"
        if outcomes.exists():
            for line in outcomes.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec.get("passed"):
                    key = "passed"
                else:
                    key = rec.get("failed_stage") or "unknown"
                data.rejections[key] = data.rejections.get(key, 0) + 1
    return data


def write_csv(data: CampaignData, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fields = [
        "iteration",
        "combination",
        "candidates",
        "admitted",
        "new_branches",
        "covered_branches",
        "spent",
    ]
    with out_path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields)
        w.writeheader()
        for row in data.rows:
            w.writerow(
                {
                    "iteration": row["iteration"],
                    "combination": " ".join(row.get("combination", [])),
                    "candidates": row.get("candidates", 0),
                    "admitted": len(row.get("admitted", [])),
                    "new_branches": row.get("new_branches", 0),
                    "covered_branches": row.get("covered_branches", 0),
                    "spent": row.get("spent", ""),
                }
            )
    return out_path


def coverage_figure(datas: list[CampaignData], out_path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for data in datas:
        xs = [r["iteration"] for r in data.rows]
        ys = [r["covered_branches"] for r in data.rows]
        ax.plot(xs, ys, marker="o", markersize=3, label=data.label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("covered branches")
    ax.set_title("Coverage growth")
    if len(datas) > 1 or (datas and datas[0].label):
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def energy_figure(data: CampaignData, out_path: Path, top_n: int = 8) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    def spread(series: list[tuple[int, float]]) -> float:
        vals = [v for _, v in series]
        return max(vals) - min(vals) if vals else 0.0

    chosen = sorted(data.energies.items(), key=lambda kv: spread(kv[1]), reverse=True)[:top_n]
    for api, series in sorted(chosen):
        xs = [i for i, _ in series]
        ys = [v for _, v in series]
        ax.plot(xs, ys, label=api)
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    ax.set_title(f"API energy trajectories ({data.label})")
    if chosen:
        ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def rejection_figure(data: CampaignData, out_path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    order = ["passed", "syntax", "execution", "fuzzing", "coverage", "unknown"]
    keys = [k for k in order if k in data.rejections]
    keys += [k for k in sorted(data.rejections) if k not in keys]
    values = [data.rejections[k] for k in keys]
    ax.bar(range(len(keys)), values, color=["#4a7" if k == "passed" else "#c66" for k in keys])
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=20)
    ax.set_ylabel("programs")
    ax.set_title(f"Pipeline outcomes ({data.label})")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def render_report(campaign_dirs: list[str | Path], out_dir: str | Path, labels: list[str] | None = None):
    """CSV + figures for one or more campaigns; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    datas = []
    for i, d in enumerate(campaign_dirs):
        label = labels[i] if labels and i < len(labels) else ""
        datas.append(collect(d, label))
    written: list[Path] = []
    for data in datas:
        written.append(write_csv(data, out_dir / f"{data.label}.csv"))
    written.append(coverage_figure(datas, out_dir / "coverage.png"))
    for data in datas:
        if data.energies:
            written.append(energy_figure(data, out_dir / f"energy_{data.label}.png"))
        if data.rejections:
            written.append(rejection_figure(data, out_dir / f"rejections_{data.label}.png"))
    return written
