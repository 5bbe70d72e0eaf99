"""The knowledge base: append-only verified facts plus assetized trajectories.

Nothing is ever removed. A newer fact may carry ``supersedes`` pointing at an
older one; reads take the most recent entry per claim triple, and an entry
with ``holds=False`` retracts the claim without erasing its history.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

from .ajd import AjdSpec
from .errors import IncompleteTrajectory, UncertifiedFact
from .facts import Fact, matches
from .performer import ContextBundle, ContextFact, ExecutionSpec, SlotBinding, TriggerEvent, keywords
from .world import ActionInstance, Receipt, ReceiptStatus, WorldState, observe

if TYPE_CHECKING:
    from .verification import Evidence

__all__ = [
    "VerifiedFact",
    "EvidenceEntry",
    "KnowledgeDelta",
    "Outcome",
    "Trajectory",
    "KnowledgeLedger",
    "LedgerAdvisory",
    "refine",
    "retrieve_context",
    "assetize",
    "trajectory_tags",
    "lint_ledger",
    "export_ledger",
    "import_ledger",
]


@dataclass(frozen=True)
class VerifiedFact:
    claim: Fact
    evidence: tuple[str, ...]
    cycle: int = 0
    tags: frozenset[str] = frozenset()
    holds: bool = True
    supersedes: str | None = None
    id: str = ""
    mission: str = ""
    _evidence: tuple["Evidence", ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class EvidenceEntry:
    """Serializable view of one channel record, keyed by its ref.

    A single record (one approval, one callback) may support several claims;
    ``claims`` lists every claim it was cited for.
    """

    ref: str
    kind: str
    claims: tuple[Fact, ...]
    channel: str
    detail: Mapping[str, Any] = field(default_factory=dict)

    def supports(self, claim: Sequence[str]) -> bool:
        return Fact(*claim) in self.claims

    @classmethod
    def of(cls, ev: "Evidence") -> "EvidenceEntry":
        rec = ev.record
        detail: dict[str, Any] = {"tick": getattr(rec, "tick", None)}
        for name in ("correlation", "approver", "executor", "verdict", "reason", "digest", "action_id", "status"):
            if hasattr(rec, name):
                value = getattr(rec, name)
                detail[name] = getattr(value, "value", value)
        return cls(ev.ref, ev.kind, (Fact(*ev.claim),), ev.channel, detail)


@dataclass(frozen=True)
class KnowledgeDelta:
    facts: tuple[VerifiedFact, ...] = ()
    cycle: int = 0

    def __len__(self) -> int:
        return len(self.facts)

    def claims(self) -> list[Fact]:
        return [f.claim for f in self.facts]


@dataclass(frozen=True)
class Outcome:
    status: str  # "satisfied" | "failed"
    reason: str = ""

    @classmethod
    def ok(cls) -> "Outcome":
        return cls("satisfied")

    @classmethod
    def failed(cls, reason: str) -> "Outcome":
        return cls("failed", reason)

    def __str__(self) -> str:
        return "Satisfied" if self.status == "satisfied" else f"Failed({self.reason})"


@dataclass(frozen=True)
class Trajectory:
    mission: str
    cycle: int
    event: TriggerEvent
    spec: ExecutionSpec
    receipts: tuple[Receipt, ...]
    delta: KnowledgeDelta
    outcome: Outcome | None
    tags: frozenset[str] = frozenset()
    id: str = ""

    @property
    def succeeded(self) -> bool:
        return self.outcome is not None and self.outcome.status == "satisfied"

    def content_key(self) -> str:
        return json.dumps(
            [self.mission, self.cycle, self.event.payload, self.spec.to_dict(), str(self.outcome), sorted(self.tags)],
            sort_keys=True,
            default=str,
        )


@dataclass(frozen=True)
class KnowledgeLedger:
    facts: tuple[VerifiedFact, ...] = ()
    trajectories: tuple[Trajectory, ...] = ()
    cycle: int = 0
    evidence: Mapping[str, EvidenceEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.facts)

    def current(self) -> list[VerifiedFact]:
        """Latest entry per claim triple, with retracted claims dropped (recency wins)."""
        latest: dict[Fact, VerifiedFact] = {}
        hidden: set[str] = set()
        for f in self.facts:
            if f.supersedes:
                hidden.add(f.supersedes)
            latest.pop(f.claim, None)
            latest[f.claim] = f
        return [f for f in latest.values() if f.holds and f.id not in hidden]

    def entails(self, pattern: Sequence[str], bindings: Mapping[str, object] | None = None) -> VerifiedFact | None:
        for f in reversed(self.current()):
            if matches(tuple(pattern), f.claim, bindings):  # type: ignore[arg-type]
                return f
        return None

    def fact(self, fact_id: str) -> VerifiedFact | None:
        return next((f for f in self.facts if f.id == fact_id), None)

    @property
    def missions(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for t in self.trajectories:
            seen.setdefault(t.mission, None)
        return tuple(seen)

    def next_mission_id(self) -> str:
        return f"m{len(self.missions) + 1}"


# -- operations ------------------------------------------------------------------------


def refine(ledger: KnowledgeLedger, delta: KnowledgeDelta) -> KnowledgeLedger:
    """K_{t+1} = K_t plus the delta, with ids and cycle stamps assigned."""
    if not delta.facts:
        return ledger
    evidence = dict(ledger.evidence)
    added = []
    n = len(ledger.facts)
    for f in delta.facts:
        if not f.evidence:
            raise UncertifiedFact(f"{f.claim} carries no evidence")
        for ev in f._evidence:
            if Fact(*ev.claim) != f.claim:
                raise UncertifiedFact(f"evidence {ev.ref} supports {ev.claim}, not {f.claim}")
            entry = EvidenceEntry.of(ev)
            known = evidence.get(ev.ref)
            if known is not None:
                entry = replace(known, claims=known.claims + tuple(c for c in entry.claims if c not in known.claims))
            evidence[ev.ref] = entry
        n += 1
        added.append(replace(f, id=f"K{n}", cycle=delta.cycle))
    return KnowledgeLedger(ledger.facts + tuple(added), ledger.trajectories, max(ledger.cycle, delta.cycle), evidence)


def _source_facts(world: WorldState, domain: str, filters: frozenset[str], words: frozenset[str]) -> list[ContextFact]:
    if domain not in world.domains:
        return []
    out = []
    for lf in observe(world, domain).facts:
        hit = lf.tags & words
        if not hit or (filters and not lf.tags & filters):
            continue
        out.append(ContextFact(lf.fact, domain, sorted(hit)[0], lf.id))
    return out


def retrieve_context(
    ledger: KnowledgeLedger,
    world: WorldState,
    event: TriggerEvent,
    ajd: AjdSpec,
    mission: str = "m1",
    cycle: int = 0,
) -> ContextBundle:
    """Assemble what the planner may see: tagged lexical facts, ledger facts, remembered trajectories.

    A lexical fact is retrieved when its tags meet the event keywords and,
    if the source declares filter tags, meet those filters too.
    """
    words = keywords(event.payload)
    contexts: list[ContextFact] = []
    for src in ajd.operational_context.contexts:
        contexts.extend(_source_facts(world, src.domain, src.tags, words))
    for f in ledger.current():
        contexts.append(ContextFact(f.claim, "ledger", "", f.id))
    memory: list[Trajectory] = []
    mem = ajd.operational_context.memory
    if mem is not None and mem.tags:
        wanted = words & mem.tags
        memory = [t for t in ledger.trajectories if t.tags & wanted]
    return ContextBundle(
        contexts=tuple(contexts),
        memory=tuple(memory),
        capabilities=ajd.operational_context.capabilities,
        authorities=ajd.scope.authorities,
        negative_constraints=ajd.scope.negative_constraints,
        mission=mission,
        cycle=cycle,
    )


def _stem(domain_id: str) -> str:
    return domain_id.split("_", 1)[0].lower()


def trajectory_tags(trajectory: Trajectory, vocabulary: Iterable[str] | None = None) -> frozenset[str]:
    """Event keywords plus stems of touched domain ids, kept to the memory tag vocabulary."""
    raw = set(keywords(trajectory.event.payload))
    raw |= {_stem(s.domain) for s in trajectory.spec.steps}
    if vocabulary is not None:
        raw &= {str(v).lower() for v in vocabulary}
    return frozenset(raw)


def assetize(ledger: KnowledgeLedger, trajectory: Trajectory, vocabulary: Iterable[str] | None = None) -> KnowledgeLedger:
    if trajectory.outcome is None:
        raise IncompleteTrajectory(f"trajectory for {trajectory.spec.id} has no outcome yet")
    stored = replace(
        trajectory,
        tags=trajectory_tags(trajectory, vocabulary),
        id=f"T{len(ledger.trajectories) + 1}",
    )
    return replace(ledger, trajectories=ledger.trajectories + (stored,))


@dataclass(frozen=True, order=True)
class LedgerAdvisory:
    code: str
    subject: str
    message: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.message}"


def lint_ledger(ledger: KnowledgeLedger) -> list[LedgerAdvisory]:
    out = []
    seen: dict[str, str] = {}
    for t in ledger.trajectories:
        key = t.content_key()
        if key in seen:
            out.append(LedgerAdvisory("DuplicateTrajectory", t.id, f"same content as {seen[key]}"))
        else:
            seen[key] = t.id
    ids = {f.id for f in ledger.facts}
    for f in ledger.facts:
        for ref in f.evidence:
            entry = ledger.evidence.get(ref)
            if entry is None:
                out.append(LedgerAdvisory("DanglingEvidence", f.id, f"evidence {ref} does not resolve"))
            elif not entry.supports(f.claim):
                out.append(LedgerAdvisory("EvidenceClaimMismatch", f.id, f"evidence {ref} was not cited for {f.claim}"))
        if f.supersedes and f.supersedes not in ids:
            out.append(LedgerAdvisory("DanglingSupersedes", f.id, f"supersedes unknown fact {f.supersedes}"))
    return sorted(out)


# -- export / import ----------------------------------------------------------------------

LEDGER_SCHEMA = 1


def _fact_out(f: VerifiedFact) -> dict[str, Any]:
    return {
        "type": "fact",
        "id": f.id,
        "claim": list(f.claim),
        "evidence": list(f.evidence),
        "cycle": f.cycle,
        "tags": sorted(f.tags),
        "holds": f.holds,
        "supersedes": f.supersedes,
        "mission": f.mission,
    }


def _receipt_out(r: Receipt) -> dict[str, Any]:
    return {
        "action_id": r.action_id,
        "domain": r.domain,
        "verb": r.verb,
        "status": r.status.value,
        "correlation": r.correlation,
        "tick": r.tick,
        "result": dict(r.result),
        "reason": r.reason,
    }


def _trajectory_out(t: Trajectory) -> dict[str, Any]:
    return {
        "type": "trajectory",
        "id": t.id,
        "mission": t.mission,
        "cycle": t.cycle,
        "event": {"id": t.event.id, "source": t.event.source, "payload": t.event.payload, "tick": t.event.tick},
        "spec": t.spec.to_dict(),
        "receipts": [_receipt_out(r) for r in t.receipts],
        "delta": [f.id for f in t.delta.facts],
        "outcome": {"status": t.outcome.status, "reason": t.outcome.reason} if t.outcome else None,
        "tags": sorted(t.tags),
    }


def export_ledger(ledger: KnowledgeLedger) -> str:
    lines = [json.dumps({"type": "header", "schema_version": LEDGER_SCHEMA, "cycle": ledger.cycle})]
    for ref in sorted(ledger.evidence):
        e = ledger.evidence[ref]
        lines.append(
            json.dumps(
                {"type": "evidence", "ref": e.ref, "kind": e.kind, "claims": [list(c) for c in e.claims], "channel": e.channel, "detail": dict(e.detail)},
                sort_keys=True,
                default=str,
            )
        )
    lines.extend(json.dumps(_fact_out(f), sort_keys=True) for f in ledger.facts)
    lines.extend(json.dumps(_trajectory_out(t), sort_keys=True, default=str) for t in ledger.trajectories)
    return "\n".join(lines) + "\n"


def _spec_in(raw: Mapping[str, Any]) -> ExecutionSpec:
    return ExecutionSpec(
        id=raw["id"],
        cycle=int(raw["cycle"]),
        steps=tuple(ActionInstance(s["verb"], s["domain"], dict(s["params"]), s["id"]) for s in raw["steps"]),
        mandatory_slots={
            k: SlotBinding(v["value"], tuple(v["grounding"])) for k, v in raw["mandatory_slots"].items()
        },
        mission=raw["mission"],
        planner=raw.get("planner", ""),
    )


def import_ledger(text: str) -> KnowledgeLedger:
    from .errors import LedgerError

    facts: list[VerifiedFact] = []
    trajectories: list[Trajectory] = []
    evidence: dict[str, EvidenceEntry] = {}
    cycle = 0
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["type"]
            if kind == "header":
                if rec.get("schema_version") != LEDGER_SCHEMA:
                    raise LedgerError(f"line {n}: unsupported ledger schema {rec.get('schema_version')!r}")
                cycle = int(rec.get("cycle", 0))
            elif kind == "evidence":
                evidence[rec["ref"]] = EvidenceEntry(
                    rec["ref"], rec["kind"], tuple(Fact(*c) for c in rec["claims"]), rec["channel"], rec["detail"]
                )
            elif kind == "fact":
                facts.append(
                    VerifiedFact(
                        Fact(*rec["claim"]), tuple(rec["evidence"]), rec["cycle"], frozenset(rec["tags"]),
                        rec["holds"], rec["supersedes"], rec["id"], rec.get("mission", ""),
                    )
                )
            elif kind == "trajectory":
                by_id = {f.id: f for f in facts}
                ev = rec["event"]
                out = rec["outcome"]
                trajectories.append(
                    Trajectory(
                        mission=rec["mission"],
                        cycle=rec["cycle"],
                        event=TriggerEvent(ev["id"], ev["source"], ev["payload"], ev["tick"]),
                        spec=_spec_in(rec["spec"]),
                        receipts=tuple(
                            Receipt(
                                r["action_id"], r["domain"], r["verb"], ReceiptStatus(r["status"]), r["correlation"],
                                r["tick"], r["result"], r["reason"],
                            )
                            for r in rec["receipts"]
                        ),
                        delta=KnowledgeDelta(tuple(by_id[i] for i in rec["delta"] if i in by_id), rec["cycle"]),
                        outcome=Outcome(out["status"], out["reason"]) if out else None,
                        tags=frozenset(rec["tags"]),
                        id=rec["id"],
                    )
                )
            else:
                raise LedgerError(f"line {n}: unknown record type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise LedgerError(f"line {n}: malformed ledger record ({exc})") from exc
    return KnowledgeLedger(tuple(facts), tuple(trajectories), cycle, evidence)


def save_ledger(ledger: KnowledgeLedger, path: str | Path) -> None:
    Path(path).write_text(export_ledger(ledger), encoding="utf-8")


def load_ledger(path: str | Path) -> KnowledgeLedger:
    return import_ledger(Path(path).read_text(encoding="utf-8"))
