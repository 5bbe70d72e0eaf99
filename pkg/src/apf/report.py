"""Convergence reports: CSV tables plus matplotlib figures written side by side."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .avr import MissionReport  # noqa: E402

CYCLE_COLUMNS = ("t", "tick", "uncertainty", "steps", "receipts", "delta_facts", "confirms", "timeouts", "allowed", "failures")
SWEEP_COLUMNS = ("scenario", "planner", "seed", "verdict", "t", "cycles", "confirms", "monotone", "curve")


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    planner: str
    seed: int
    verdict: str
    t: int | None
    cycles: int
    confirms: int
    monotone: bool
    curve: tuple[int, ...]


def cycle_rows(report: MissionReport) -> list[dict[str, object]]:
    rows = [{"t": 0, "tick": "", "uncertainty": report.curve[0], "steps": 0, "receipts": 0, "delta_facts": 0, "confirms": 0, "timeouts": 0, "allowed": "", "failures": ""}]
    for c in report.cycles:
        rows.append(
            {
                "t": c.t,
                "tick": c.tick,
                "uncertainty": c.uncertainty,
                "steps": len(c.spec.steps),
                "receipts": len(c.receipts),
                "delta_facts": len(c.delta),
                "confirms": c.confirm_round_trips,
                "timeouts": len(c.timeouts),
                "allowed": c.verdict.allowed,
                "failures": " | ".join(c.failures),
            }
        )
    return rows


def write_csv(path: str | Path, columns: Sequence[str], rows: Sequence[dict[str, object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
    return path


def plot_curves(path: str | Path, curves: Sequence[Sequence[int]], title: str, labels: Sequence[str] | None = None) -> Path:
    """Step plot of uncertainty per cycle; many curves get a mean overlay."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=100)
    many = len(curves) > 5
    for i, curve in enumerate(curves):
        label = None if many or labels is None else labels[i]
        ax.step(range(len(curve)), curve, where="post", alpha=0.25 if many else 0.9, color="tab:blue" if many else None, label=label)
    if many:
        width = max(len(c) for c in curves)
        padded = np.array([list(c) + [c[-1]] * (width - len(c)) for c in curves], dtype=float)
        ax.step(range(width), padded.mean(axis=0), where="post", color="black", linewidth=2, label=f"mean of {len(curves)} runs")
    ax.set_xlabel("cycle t")
    ax.set_ylabel("uncertainty U_t")
    ax.set_title(title)
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    if many or labels:
        ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def write_mission_report(report: MissionReport, out_dir: str | Path, stem: str = "mission") -> tuple[Path, Path]:
    out = Path(out_dir)
    csv_path = write_csv(out / f"{stem}.csv", CYCLE_COLUMNS, cycle_rows(report))
    png_path = plot_curves(out / f"{stem}.png", [report.curve], f"{report.mission}: {report.verdict}", [report.planner or "run"])
    return csv_path, png_path


def sweep_row(scenario: str, report: MissionReport) -> SweepRow:
    curve = tuple(report.curve)
    return SweepRow(
        scenario,
        report.planner,
        report.seed,
        report.verdict.kind,
        report.verdict.t,
        len(report.cycles),
        report.confirm_round_trips,
        all(a >= b for a, b in zip(curve, curve[1:])),
        curve,
    )


def write_sweep(rows: Sequence[SweepRow], out_dir: str | Path, stem: str = "sweep") -> tuple[Path, Path]:
    out = Path(out_dir)
    csv_path = write_csv(
        out / f"{stem}.csv",
        SWEEP_COLUMNS,
        [
            {
                "scenario": r.scenario, "planner": r.planner, "seed": r.seed, "verdict": r.verdict, "t": r.t,
                "cycles": r.cycles, "confirms": r.confirms, "monotone": r.monotone, "curve": " ".join(map(str, r.curve)),
            }
            for r in rows
        ],
    )
    title = ", ".join(sorted({f"{r.scenario}/{r.planner}" for r in rows})) or "sweep"
    png_path = plot_curves(out / f"{stem}.png", [r.curve for r in rows], title)
    return csv_path, png_path
