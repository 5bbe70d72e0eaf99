from __future__ import annotations

import csv
import json

import pytest

from apf.avr import run_mission
from apf.cli import main
from apf.errors import TraceSchemaError
from apf.scenarios import FIXTURES, build_scenario, make_planner
from apf.trace import dump_trace, read_trace, replay
from helpers import TRAVEL_AJD, load_json

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _write(tmp_path, name: str, data) -> str:
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def _trace(name="travel", seed=42, planner="rule", budget=10) -> str:
    world, ajd = build_scenario(name, seed)
    report = run_mission(ajd, world, make_planner(planner, world.fixture), seed, budget)
    return dump_trace(report, ajd)


# -- run ---------------------------------------------------------------------------------


def test_run_travel_reference(capsys):
    assert main(["run", "--scenario", "travel", "--seed", "42"]) == 0
    out = capsys.readouterr().out
    assert "Satisfied at t=3" in out
    assert "6 -> 4 -> 1 -> 0" in out
    assert "mismatch audit" not in out


def test_run_with_no_cycles_is_exhausted(capsys):
    assert main(["run", "--max-cycles", "0"]) == 2
    assert "Exhausted" in capsys.readouterr().out


def test_open_loop_run_prints_mismatches(tmp_path, capsys):
    faults = _write(tmp_path, "f.json", [{"kind": "VoucherDrop", "tick": 0}])
    code = main(["run", "--no-verify", "--faults", faults])
    out = capsys.readouterr().out
    assert code == 0
    assert "open loop" in out
    assert "mismatch audit:" in out
    assert "0 entries" not in out


def test_run_rejects_bad_inputs(capsys):
    assert main(["run", "--scenario", "nowhere"]) == 1
    assert main(["run", "--planner", "oracle"]) == 1
    assert main(["run", "--max-cycles", "-1"]) == 1


def test_run_writes_trace_ledger_and_report(tmp_path, capsys):
    trace, ledger, rep = tmp_path / "t.ndjson", tmp_path / "k.ndjson", tmp_path / "rep"
    assert main(["run", "--trace-out", str(trace), "--ledger-out", str(ledger), "--report-dir", str(rep)]) == 0
    assert trace.exists() and ledger.exists()
    assert (rep / "mission.png").read_bytes()[:8] == PNG_MAGIC
    rows = list(csv.DictReader((rep / "mission.csv").open()))
    assert [int(r["uncertainty"]) for r in rows] == [6, 4, 1, 0]
    capsys.readouterr()
    assert main(["run", "--ledger-in", str(ledger)]) == 0
    assert "mission m2: Satisfied" in capsys.readouterr().out


# -- lint and diagram --------------------------------------------------------------------


def test_lint_bundled_contract(capsys):
    assert main(["lint", str(TRAVEL_AJD)]) == 0
    assert "ok" in capsys.readouterr().out


def test_lint_missing_evaluation(tmp_path, capsys):
    raw = load_json(TRAVEL_AJD)
    del raw["evaluation"]
    assert main(["lint", _write(tmp_path, "a.json", raw)]) == 4
    assert "evaluation" in capsys.readouterr().out


def test_lint_warns_on_open_scope(tmp_path, capsys):
    raw = load_json(TRAVEL_AJD)
    raw["scope"]["negative_constraints"] = []
    assert main(["lint", _write(tmp_path, "a.json", raw)]) == 0
    assert "ScopeCreepRisk" in capsys.readouterr().out


def test_lint_unreadable_file(tmp_path, capsys):
    assert main(["lint", str(tmp_path / "missing.json")]) == 1
    assert main(["lint", _write(tmp_path, "bad.json", "{")]) == 4


def test_diagram_matches_golden(tmp_path, capsys):
    out = tmp_path / "t.dot"
    assert main(["diagram", str(TRAVEL_AJD), "-o", str(out)]) == 0
    assert out.read_text() == (FIXTURES / "travel.dot").read_text()
    assert main(["diagram", str(TRAVEL_AJD)]) == 0
    assert capsys.readouterr().out == (FIXTURES / "travel.dot").read_text()


def test_diagram_of_invalid_contract(tmp_path, capsys):
    raw = load_json(TRAVEL_AJD)
    raw["mission"]["predicates"] = []
    assert main(["diagram", _write(tmp_path, "a.json", raw)]) == 4


# -- trace and replay --------------------------------------------------------------------


def test_replay_matches_recorded_run(tmp_path, capsys):
    path = _write(tmp_path, "t.ndjson", _trace())
    assert main(["replay", path]) == 0
    out = capsys.readouterr().out
    assert "Satisfied at t=3" in out and "matches" in out


@pytest.mark.parametrize("name", ["travel", "industrial"])
def test_replay_is_equivalent_for_stochastic_runs(name):
    for seed in range(5):
        result = replay(_trace(name, seed, "stochastic", 20))
        assert result.equivalent


def test_replay_detects_tampering(tmp_path, capsys):
    lines = _trace().splitlines()
    verdict = json.loads(lines[-1])
    verdict["curve"] = [6, 5, 1, 0]
    lines[-1] = json.dumps(verdict)
    assert main(["replay", _write(tmp_path, "t.ndjson", "\n".join(lines))]) == 6


def test_empty_trace(tmp_path, capsys):
    assert main(["replay", _write(tmp_path, "t.ndjson", "")]) == 5
    assert "empty trace" in capsys.readouterr().out


def test_truncated_trace_names_a_line(tmp_path, capsys):
    lines = _trace().splitlines()
    text = "\n".join(lines[:-1])
    assert main(["replay", _write(tmp_path, "t.ndjson", text)]) == 5
    assert f"line {len(lines)}" in capsys.readouterr().out
    with pytest.raises(TraceSchemaError) as exc:
        read_trace("\n".join(lines[:2] + ["{not json"]))
    assert exc.value.line == 3


def test_trace_header_is_checked():
    lines = _trace().splitlines()
    header = json.loads(lines[0])
    header["schema_version"] = 99
    with pytest.raises(TraceSchemaError):
        read_trace("\n".join([json.dumps(header)] + lines[1:]))
    with pytest.raises(TraceSchemaError):
        read_trace("\n".join(lines[1:]))


# -- report and sweep --------------------------------------------------------------------


def test_report_renders_csv_and_png(tmp_path, capsys):
    path = _write(tmp_path, "run.ndjson", _trace())
    out = tmp_path / "r"
    assert main(["report", path, "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "run.csv").open()))
    assert [r["uncertainty"] for r in rows] == ["6", "4", "1", "0"]
    assert (out / "run.png").read_bytes()[:8] == PNG_MAGIC


def test_sweep_writes_one_row_per_seed(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["sweep", "--scenario", "industrial", "--seeds", "4", "--out", str(out)]) == 0
    assert "4/4 runs Satisfied" in capsys.readouterr().out
    csvs = list(out.glob("*.csv"))
    assert len(csvs) == 1
    assert len(list(csv.DictReader(csvs[0].open()))) == 4
    assert next(out.glob("*.png")).read_bytes()[:8] == PNG_MAGIC


def test_sweep_argument_checks(capsys):
    assert main(["sweep", "--seeds", "0"]) == 1
    assert main([]) == 1
    assert main(["--help"]) == 0
