"""Command-line interface.

Exit codes:
  0  success (run: Satisfied; lint: clean or advisories only)
  1  usage error or unreadable input
  2  run ended Exhausted
  3  run ended Blocked
  4  AJD validation failed (lint, diagram)
  5  trace violates the schema (replay, report)
  6  replay diverged from the recorded verdict or curve
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .ajd import AjdSpec, lint_ajd, load_ajd, validate_ajd
from .avr import MissionReport, run_mission
from .diagram import export_apf_diagram
from .errors import AjdError, ApfError, FixtureParseError, LedgerError, TraceSchemaError
from .ledger import KnowledgeLedger, load_ledger, save_ledger
from .report import CYCLE_COLUMNS, plot_curves, sweep_row, write_csv, write_mission_report, write_sweep
from .scenarios import build_scenario, inject_fault, load_faults, make_planner
from .trace import read_trace, replay, write_trace

EXIT_OK, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_BLOCKED, EXIT_INVALID, EXIT_SCHEMA, EXIT_DIVERGED = 0, 1, 2, 3, 4, 5, 6
VERDICT_EXIT = {"Satisfied": EXIT_OK, "Exhausted": EXIT_EXHAUSTED, "Blocked": EXIT_BLOCKED}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    planner: str = "rule"
    seed: int = 42
    max_cycles: int = 10
    verify: bool = True
    ajd: str | None = None
    faults: str | None = None
    trace_out: str | None = None
    ledger_in: str | None = None
    ledger_out: str | None = None
    report_dir: str | None = None

    def __post_init__(self) -> None:
        if self.max_cycles < 0:
            raise ValueError("--max-cycles must be >= 0")
        for p in (self.ajd, self.faults, self.ledger_in):
            if p is not None and not Path(p).is_file():
                raise ValueError(f"no such file: {p}")


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _print_report(report: MissionReport) -> None:
    flag = " (open loop: verification disabled)" if report.open_loop else ""
    print(f"mission {report.mission}: {report.verdict}{flag}")
    print("U curve: " + " -> ".join(map(str, report.curve)))
    for c in report.cycles:
        steps = ", ".join(str(s) for s in c.spec.steps) or "-"
        facts = ", ".join(str(f.claim) for f in c.delta.facts) or "-"
        status = "executed" if c.executed else ("blocked" if not c.verdict.allowed else "not executed")
        print(f"  t={c.t} tick={c.tick} U={c.uncertainty} {status}: {steps}")
        for q in c.clarifications:
            print(f"      asked {q.approver} for {q.slot}: {q.value if q.value is not None else q.reason}")
        print(f"      +K: {facts}")
        for f in c.failures:
            print(f"      ! {f}")
    if report.open_loop:
        print(f"mismatch audit: {len(report.mismatches)} entr{'y' if len(report.mismatches) == 1 else 'ies'}")
        for m in report.mismatches:
            print(f"  - {m}")


def cmd_run(config: RunConfig) -> int:
    try:
        scenario = build_scenario(config.scenario, config.seed)
    except FixtureParseError as exc:
        _err(str(exc))
        return EXIT_USAGE
    world, ajd = scenario
    try:
        if config.ajd is not None:
            ajd = load_ajd(config.ajd)
            report = validate_ajd(ajd)
            if not report.ok:
                _err("AJD invalid: " + "; ".join(map(str, report.violations)))
                return EXIT_USAGE
        if config.faults is not None:
            for fault in load_faults(config.faults):
                inject_fault(world, fault)
        ledger = load_ledger(config.ledger_in) if config.ledger_in else KnowledgeLedger()
        planner = make_planner(config.planner, scenario.fixture)
    except (ApfError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE

    report = run_mission(ajd, world, planner, config.seed, config.max_cycles, ledger=ledger, verify=config.verify)
    _print_report(report)
    if config.trace_out:
        write_trace(report, ajd, config.trace_out)
        print(f"trace written to {config.trace_out}")
    if config.ledger_out:
        save_ledger(report.ledger, config.ledger_out)
    if config.report_dir:
        csv_path, png_path = write_mission_report(report, config.report_dir)
        print(f"report written to {csv_path} and {png_path}")
    return VERDICT_EXIT[report.verdict.kind]


def _load_for_check(path: str) -> AjdSpec | int:
    try:
        return load_ajd(path)
    except OSError as exc:
        _err(f"cannot read {path}: {exc}")
        return EXIT_USAGE
    except AjdError as exc:
        print(f"{type(exc).__name__}: {exc}")
        return EXIT_INVALID


def cmd_lint(path: str) -> int:
    spec = _load_for_check(path)
    if isinstance(spec, int):
        return spec
    report = validate_ajd(spec)
    for v in report.violations:
        print(f"violation {v}")
    for a in lint_ajd(spec):
        print(f"warning {a}")
    if not report.ok:
        return EXIT_INVALID
    print(f"{path}: ok")
    return EXIT_OK


def cmd_diagram(path: str, out: str | None) -> int:
    spec = _load_for_check(path)
    if isinstance(spec, int):
        return spec
    report = validate_ajd(spec)
    if not report.ok:
        for v in report.violations:
            print(f"violation {v}")
        return EXIT_INVALID
    dot = export_apf_diagram(spec)
    if out is None:
        sys.stdout.write(dot)
    else:
        Path(out).write_text(dot, encoding="utf-8")
    return EXIT_OK


def _read_text(path: str) -> str | None:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        _err(f"cannot read {path}: {exc}")
        return None


def cmd_replay(path: str) -> int:
    text = _read_text(path)
    if text is None:
        return EXIT_USAGE
    try:
        result = replay(text)
    except TraceSchemaError as exc:
        print(f"schema error: {exc}")
        return EXIT_SCHEMA
    print(f"replayed: {result.verdict}")
    print("U curve: " + " -> ".join(map(str, result.curve)))
    if not result.equivalent:
        print(f"recorded: {result.recorded_verdict}, curve {' -> '.join(map(str, result.recorded_curve))}")
        print("replay diverges from the recorded report")
        return EXIT_DIVERGED
    print("replay matches the recorded report")
    return EXIT_OK


def cmd_report(path: str, out_dir: str) -> int:
    """Render a trace as a per-cycle CSV and an uncertainty plot."""
    text = _read_text(path)
    if text is None:
        return EXIT_USAGE
    try:
        records = read_trace(text)
    except TraceSchemaError as exc:
        print(f"schema error: {exc}")
        return EXIT_SCHEMA
    verdict = records[-1]
    curve = list(verdict["curve"])
    rows = [{"t": 0, "uncertainty": curve[0]}]
    for rec in records:
        if rec["kind"] != "cycle":
            continue
        rows.append(
            {
                "t": rec["t"],
                "tick": rec.get("tick", ""),
                "uncertainty": rec["u"],
                "steps": len(rec.get("spec", {}).get("steps", [])),
                "receipts": len(rec.get("receipts", [])),
                "delta_facts": len(rec["delta"]),
                "confirms": len(rec.get("confirms", [])) + len(rec.get("clarifications", [])),
                "timeouts": len(rec.get("timeouts", [])),
                "allowed": rec["allowed"],
                "failures": " | ".join(rec.get("failures", [])),
            }
        )
    stem = Path(path).stem
    csv_path = write_csv(Path(out_dir) / f"{stem}.csv", CYCLE_COLUMNS, rows)
    title = f"{records[0]['mission']}: {verdict['verdict']}"
    png_path = plot_curves(Path(out_dir) / f"{stem}.png", [curve], title, [records[0].get("planner") or "run"])
    print(f"wrote {csv_path}")
    print(f"wrote {png_path}")
    return EXIT_OK


def cmd_sweep(scenario: str, planner: str, seeds: int, first_seed: int, max_cycles: int, out_dir: str, verify: bool) -> int:
    rows = []
    for seed in range(first_seed, first_seed + seeds):
        try:
            sc = build_scenario(scenario, seed)
        except FixtureParseError as exc:
            _err(str(exc))
            return EXIT_USAGE
        world, ajd = sc
        report = run_mission(ajd, world, make_planner(planner, sc.fixture), seed, max_cycles, verify=verify)
        rows.append(sweep_row(Path(scenario).stem.split(".")[0], report))
    csv_path, png_path = write_sweep(rows, out_dir, f"sweep_{Path(scenario).stem.split('.')[0]}_{planner}")
    satisfied = sum(1 for r in rows if r.verdict == "Satisfied")
    print(f"{satisfied}/{len(rows)} runs Satisfied; monotone in {sum(r.monotone for r in rows)}/{len(rows)}")
    print(f"wrote {csv_path}")
    print(f"wrote {png_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apf", description="Run, lint, draw and audit agentic job descriptions.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a mission in a simulated workplace")
    run.add_argument("--scenario", default="travel", help="bundled scenario name or fixture path (default: travel)")
    run.add_argument("--ajd", help="AJD file overriding the scenario's bundled contract")
    run.add_argument("--planner", choices=("rule", "stochastic"), default="rule")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--max-cycles", type=int, default=10)
    run.add_argument("--no-verify", action="store_true", help="disable callback/confirm channels (open loop)")
    run.add_argument("--faults", help="JSON fault schedule to inject")
    run.add_argument("--trace-out", help="write the NDJSON trace here")
    run.add_argument("--ledger-in", help="start from an exported ledger (carry knowledge between runs)")
    run.add_argument("--ledger-out", help="export the final ledger here")
    run.add_argument("--report-dir", help="also write a per-cycle CSV and uncertainty plot here")

    lint = sub.add_parser("lint", help="validate and lint an AJD")
    lint.add_argument("path")

    diagram = sub.add_parser("diagram", help="export the problem-frame diagram as DOT")
    diagram.add_argument("path")
    diagram.add_argument("-o", "--out")

    rep = sub.add_parser("replay", help="recompute verdict and curve from a trace")
    rep.add_argument("path")

    report = sub.add_parser("report", help="render a trace as CSV plus a PNG plot")
    report.add_argument("path")
    report.add_argument("--out", default="reports")

    sweep = sub.add_parser("sweep", help="run many seeds and plot every uncertainty curve")
    sweep.add_argument("--scenario", default="travel")
    sweep.add_argument("--planner", choices=("rule", "stochastic"), default="stochastic")
    sweep.add_argument("--seeds", type=int, default=100)
    sweep.add_argument("--first-seed", type=int, default=0)
    sweep.add_argument("--max-cycles", type=int, default=20)
    sweep.add_argument("--no-verify", action="store_true")
    sweep.add_argument("--out", default="reports")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command == "run":
        try:
            config = RunConfig(
                scenario=args.scenario,
                planner=args.planner,
                seed=args.seed,
                max_cycles=args.max_cycles,
                verify=not args.no_verify,
                ajd=args.ajd,
                faults=args.faults,
                trace_out=args.trace_out,
                ledger_in=args.ledger_in,
                ledger_out=args.ledger_out,
                report_dir=args.report_dir,
            )
        except ValueError as exc:
            _err(str(exc))
            return EXIT_USAGE
        return cmd_run(config)
    if args.command == "lint":
        return cmd_lint(args.path)
    if args.command == "diagram":
        return cmd_diagram(args.path, args.out)
    if args.command == "replay":
        return cmd_replay(args.path)
    if args.command == "report":
        return cmd_report(args.path, args.out)
    if args.seeds < 1 or args.max_cycles < 0:
        _err("--seeds must be >= 1 and --max-cycles >= 0")
        return EXIT_USAGE
    return cmd_sweep(args.scenario, args.planner, args.seeds, args.first_seed, args.max_cycles, args.out, not args.no_verify)


if __name__ == "__main__":
    raise SystemExit(main())
