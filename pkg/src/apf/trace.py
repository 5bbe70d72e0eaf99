"""Mission traces: newline-delimited JSON, the system of record for a run.

Layout::

    {"kind": "header", "schema_version": 1, ...}     predicates, slot count, carried facts
    {"kind": "cycle", "t": 1, ...}                    one line per AVR cycle
    {"kind": "blocked", "t": 4, "reason": "..."}      only when planning was impossible
    {"kind": "verdict", "verdict": "Satisfied", ...}  the recorded outcome

:func:`replay` recomputes the uncertainty curve and verdict from the
delta facts and slot counts alone, then compares them with the recorded
verdict line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

from .ajd import AjdSpec
from .avr import MissionReport, MissionVerdict
from .errors import TraceSchemaError
from .facts import Fact, matches
from .ledger import VerifiedFact
from .world import Receipt

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "trace_records", "write_trace", "dump_trace", "read_trace", "replay", "ReplayResult"]


def _fact(f: VerifiedFact) -> dict[str, Any]:
    return {"id": f.id, "claim": list(f.claim), "holds": f.holds, "supersedes": f.supersedes, "evidence": list(f.evidence)}


def _receipt(r: Receipt) -> dict[str, Any]:
    return {"action": r.action_id, "domain": r.domain, "verb": r.verb, "status": r.status.value, "correlation": r.correlation, "tick": r.tick, "reason": r.reason}


def trace_records(report: MissionReport, ajd: AjdSpec) -> list[dict[str, Any]]:
    carried = report.ledger.facts[: report.initial_facts]
    out: list[dict[str, Any]] = [
        {
            "kind": "header",
            "schema_version": SCHEMA_VERSION,
            "ajd": ajd.meta.name,
            "mission": report.mission,
            "seed": report.seed,
            "planner": report.planner,
            "budget": report.budget,
            "open_loop": report.open_loop,
            "event": report.event.payload if report.event else None,
            "predicates": [{"id": p.id, "claim": list(p.claim)} for p in ajd.mission.predicates],
            "mandatory_slots": len(ajd.mandatory_slots),
            "carried_facts": [_fact(f) for f in carried],
        }
    ]
    for c in report.cycles:
        out.append(
            {
                "kind": "cycle",
                "t": c.t,
                "tick": c.tick,
                "spec": c.spec.to_dict(),
                "allowed": c.verdict.allowed,
                "scope": str(c.verdict),
                "receipts": [_receipt(r) for r in c.receipts],
                "delta": [_fact(f) for f in c.delta.facts],
                "unbound": len(c.spec.unbound()),
                "unbound_at_plan": list(c.unbound),
                "clarifications": [{"slot": q.slot, "approver": q.approver, "value": q.value} for q in c.clarifications],
                "confirms": [
                    {"id": r.id, "channel": r.channel, "approver": r.approver, "executor": r.executor, "verdict": r.verdict.value, "reason": r.reason, "requested": r.requested, "tick": r.tick}
                    for r in c.confirms
                ],
                "timeouts": [{"channel": x.channel, "correlation": x.correlation, "waited": x.waited} for x in c.timeouts],
                "failures": list(c.failures),
                "u": c.uncertainty,
            }
        )
    v = report.verdict
    if v.kind == "Blocked" and (not report.cycles or report.cycles[-1].t != v.t):
        out.append({"kind": "blocked", "t": v.t, "reason": v.reason})
    out.append({"kind": "verdict", "verdict": v.kind, "t": v.t, "reason": v.reason, "curve": list(report.curve)})
    return out


def dump_trace(report: MissionReport, ajd: AjdSpec) -> str:
    return "".join(json.dumps(r, sort_keys=True, default=str) + "\n" for r in trace_records(report, ajd))


def write_trace(report: MissionReport, ajd: AjdSpec, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dump_trace(report, ajd), encoding="utf-8")
    report.trace_ref = str(path)
    return path


def _need(rec: Mapping[str, Any], keys: Iterable[str], line: int) -> None:
    missing = [k for k in keys if k not in rec]
    if missing:
        raise TraceSchemaError(f"{rec.get('kind', '?')} record lacks {', '.join(missing)}", line)


def read_trace(text: str) -> list[dict[str, Any]]:
    """Parse and schema-check a trace; raises :class:`TraceSchemaError` with a line number."""
    lines = text.splitlines()
    if not any(l.strip() for l in lines):
        raise TraceSchemaError("empty trace", 1)
    records: list[dict[str, Any]] = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceSchemaError(f"not a JSON record ({exc.msg})", n) from None
        if not isinstance(rec, dict) or "kind" not in rec:
            raise TraceSchemaError("record must be an object with a kind", n)
        kind = rec["kind"]
        if not records:
            if kind != "header":
                raise TraceSchemaError("first record must be the header", n)
            _need(rec, ("schema_version", "mission", "budget", "predicates", "mandatory_slots", "carried_facts"), n)
            if rec["schema_version"] != SCHEMA_VERSION:
                raise TraceSchemaError(f"unsupported schema_version {rec['schema_version']!r}", n)
        elif kind == "cycle":
            _need(rec, ("t", "allowed", "delta", "unbound", "u"), n)
        elif kind == "blocked":
            _need(rec, ("t", "reason"), n)
        elif kind == "verdict":
            _need(rec, ("verdict", "t", "curve"), n)
        else:
            raise TraceSchemaError(f"unknown record kind {kind!r}", n)
        if records and records[-1]["kind"] == "verdict":
            raise TraceSchemaError("records after the verdict", n)
        rec["_line"] = n
        records.append(rec)
    if records[-1]["kind"] != "verdict":
        raise TraceSchemaError("trace ends without a verdict record (truncated?)", len(lines) + 1)
    return records


@dataclass(frozen=True)
class ReplayResult:
    verdict: MissionVerdict
    curve: tuple[int, ...]
    recorded_verdict: MissionVerdict
    recorded_curve: tuple[int, ...]

    @property
    def equivalent(self) -> bool:
        return self.verdict == self.recorded_verdict and self.curve == self.recorded_curve


def _current(facts: list[Mapping[str, Any]]) -> list[Fact]:
    latest: dict[Fact, Mapping[str, Any]] = {}
    hidden: set[str] = set()
    for f in facts:
        claim = Fact(*f["claim"])
        if f.get("supersedes"):
            hidden.add(f["supersedes"])
        latest.pop(claim, None)
        latest[claim] = f
    return [c for c, f in latest.items() if f.get("holds", True) and f.get("id") not in hidden]


def replay(text: str) -> ReplayResult:
    records = read_trace(text)
    header = records[0]
    mission = header["mission"]
    patterns = [tuple(p["claim"]) for p in header["predicates"]]
    facts: list[Mapping[str, Any]] = list(header["carried_facts"])

    def unmet() -> int:
        held = _current(facts)
        return sum(1 for p in patterns if not any(matches(p, c, {"mission": mission}) for c in held))

    u0 = unmet()
    curve = [u0 + (header["mandatory_slots"] if u0 else 0)]
    verdict = MissionVerdict("Exhausted", header["budget"])
    last_cycle: Mapping[str, Any] | None = None
    if header["budget"] > 0 and u0 == 0:
        verdict = MissionVerdict("Satisfied", 0)
    for rec in records[1:]:
        if rec["kind"] == "cycle":
            facts.extend(rec["delta"])
            n = unmet()
            curve.append(n + int(rec["unbound"]))
            last_cycle = rec
            if n == 0:
                verdict = MissionVerdict("Satisfied", rec["t"])
        elif rec["kind"] == "blocked":
            verdict = MissionVerdict("Blocked", rec["t"], rec["reason"])
    recorded = records[-1]
    if verdict.kind == "Exhausted" and last_cycle is not None and not last_cycle["allowed"]:
        if int(last_cycle.get("unbound", 0)) == 0 and not last_cycle.get("unbound_at_plan"):
            verdict = MissionVerdict("Blocked", header["budget"], last_cycle.get("scope", ""))
    if verdict.kind == "Exhausted":
        # the engine records why a run ended without cycles; that reason is not derivable
        verdict = MissionVerdict("Exhausted", header["budget"], recorded.get("reason", "") if last_cycle is None else "")
    return ReplayResult(
        verdict,
        tuple(curve),
        MissionVerdict(recorded["verdict"], recorded["t"], recorded.get("reason", "")),
        tuple(recorded["curve"]),
    )
