"""The Act-Verify-Refine engine.

One call to :func:`run_mission` drives a single trigger event through up to
``budget`` cycles. Each cycle re-retrieves context from the refined ledger,
asks the planner for an execution spec, refuses to act while a mandatory
slot is unbound or the guardrail blocks the plan, then verifies every
claimed effect through the channels the evaluation method declares. Only
certified facts reach the ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

from .ajd import AjdSpec, CallbackMode, CallbackSpec, ConfirmSpec, covering_channels
from .errors import ApproverUnavailable, DomainFault, NoCapabilityCoversIntent
from .facts import Fact, instantiate, substitute
from .ledger import (
    KnowledgeDelta,
    KnowledgeLedger,
    Outcome,
    Trajectory,
    VerifiedFact,
    assetize,
    refine,
    retrieve_context,
)
from .performer import (
    USER_SUPPLIED,
    ExecutionSpec,
    Planner,
    ScopeVerdict,
    SlotBinding,
    TriggerEvent,
    bind_slot,
    check_scope,
    inject,
)
from .verification import (
    CallbackEvent,
    ConfirmRecord,
    Evidence,
    Insufficient,
    Proposal,
    Timeout,
    await_callback,
    certify,
    certify_rejection,
    poll_implicit,
    render_query,
    request_confirm,
)
from .world import EventKind, Receipt, ReceiptStatus, WorldState, affect, step_world

__all__ = [
    "Clarification",
    "CycleRecord",
    "MissionVerdict",
    "MissionReport",
    "Satisfaction",
    "Mismatch",
    "run_mission",
    "uncertainty",
    "check_satisfaction",
    "detect_mismatch",
]


@dataclass(frozen=True)
class Clarification:
    slot: str
    approver: str
    value: str | None
    record: ConfirmRecord | None = None
    reason: str = ""


@dataclass(frozen=True)
class CycleRecord:
    t: int
    tick: int
    spec: ExecutionSpec
    verdict: ScopeVerdict
    receipts: tuple[Receipt, ...]
    delta: KnowledgeDelta
    uncertainty: int
    unbound: tuple[str, ...] = ()
    clarifications: tuple[Clarification, ...] = ()
    confirms: tuple[ConfirmRecord, ...] = ()
    timeouts: tuple[Timeout, ...] = ()
    failures: tuple[str, ...] = ()
    open_loop: bool = False

    @property
    def executed(self) -> bool:
        return bool(self.receipts)

    @property
    def confirm_round_trips(self) -> int:
        return len(self.confirms) + sum(1 for c in self.clarifications if c.record is not None)


@dataclass(frozen=True)
class MissionVerdict:
    kind: str  # "Satisfied" | "Exhausted" | "Blocked"
    t: int | None = None
    reason: str = ""

    def __str__(self) -> str:
        if self.kind == "Satisfied":
            return f"Satisfied at t={self.t}"
        if self.kind == "Exhausted":
            return f"Exhausted(budget T={self.t})"
        return f"Blocked({self.reason})"


@dataclass
class MissionReport:
    mission: str
    cycles: list[CycleRecord]
    verdict: MissionVerdict
    curve: list[int]
    ledger: KnowledgeLedger
    event: TriggerEvent | None = None
    open_loop: bool = False
    supersedes: int = 0
    seed: int = 0
    planner: str = ""
    budget: int = 0
    trace_ref: str | None = None
    initial_facts: int = 0
    mismatches: list["Mismatch"] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.verdict.kind == "Satisfied"

    @property
    def confirm_round_trips(self) -> int:
        return sum(c.confirm_round_trips for c in self.cycles)


@dataclass(frozen=True)
class Satisfaction:
    satisfied: bool
    entailment: Mapping[str, str | None]  # predicate id -> witnessing fact id

    def __bool__(self) -> bool:
        return self.satisfied

    @property
    def unmet(self) -> list[str]:
        return [pid for pid, fid in self.entailment.items() if fid is None]


@dataclass(frozen=True)
class Mismatch:
    fact: str
    claim: Fact
    channel: str
    reason: str

    def __str__(self) -> str:
        return f"{self.fact} {self.claim} via {self.channel}: {self.reason}"


# -- measurement ---------------------------------------------------------------------------


def check_satisfaction(ajd: AjdSpec, ledger: KnowledgeLedger, mission: str = "m1") -> Satisfaction:
    """Every predicate pattern must be matched by a current verified fact."""
    out: dict[str, str | None] = {}
    for pred in ajd.mission.predicates:
        f = ledger.entails(pred.claim, {"mission": mission})
        out[pred.id] = f.id if f is not None else None
    return Satisfaction(all(v is not None for v in out.values()), out)


def uncertainty(ajd: AjdSpec, ledger: KnowledgeLedger, spec: ExecutionSpec | None = None, mission: str = "m1") -> int:
    """Unmet predicates plus unbound mandatory slots.

    With no spec yet, every mandatory slot the contract declares counts as
    unbound, unless nothing is left to do.
    """
    unmet = len(check_satisfaction(ajd, ledger, mission).unmet)
    if spec is None:
        slots = len(ajd.mandatory_slots) if unmet else 0
    else:
        slots = len(spec.unbound())
    return unmet + slots


def detect_mismatch(world: WorldState, ledger: KnowledgeLedger, ajd: AjdSpec | None = None) -> list[Mismatch]:
    """Compare what the ledger believes against the world (oracle access).

    Callback-backed facts are checked against the event log or the live
    predicate; assumed facts are checked against every channel that should
    have covered them.
    """
    out: list[Mismatch] = []
    approved = {
        ev.payload.get("bid")
        for ev in world.events(EventKind.BID_RESOLVED)
        if ev.payload.get("verdict") == "accepted"
    }
    emitted = {ev.correlation for ev in world.events(EventKind.CALLBACK_EMITTED)}
    applied = {ev.payload.get("action") for ev in world.events(EventKind.EFFECT_APPLIED)}
    specs = {ch.id: ch for ch in ajd.evaluation.channels()} if ajd is not None else {}
    for f in ledger.current():
        bindings = {"mission": f.claim.subject}
        for ref in f.evidence:
            entry = ledger.evidence.get(ref)
            if entry is None:
                out.append(Mismatch(f.id, f.claim, "?", f"evidence {ref} is not on record"))
                continue
            d = entry.detail
            if entry.kind == "callback":
                ch = specs.get(entry.channel)
                if isinstance(ch, CallbackSpec) and ch.mode is CallbackMode.IMPLICIT:
                    if not poll_implicit(world, ch.channel, render_query(ch.match, bindings)):
                        out.append(Mismatch(f.id, f.claim, ch.id, "side effect no longer observable"))
                elif d.get("correlation") not in emitted:
                    out.append(Mismatch(f.id, f.claim, entry.channel, "no emission with this correlation"))
            elif entry.kind == "confirm":
                bid = str(entry.ref).split(":", 1)[-1]
                if d.get("verdict") == "approved" and bid not in approved:
                    out.append(Mismatch(f.id, f.claim, entry.channel, "approval not found in world log"))
            elif entry.kind == "assumed":
                if d.get("action_id") not in applied:
                    out.append(Mismatch(f.id, f.claim, "assumed", "asserted effect never occurred"))
                if ajd is None:
                    continue
                for ch in covering_channels(ajd, tuple(f.claim)):
                    if isinstance(ch, CallbackSpec):
                        if ch.mode is CallbackMode.IMPLICIT:
                            ok = bool(poll_implicit(world, ch.channel, render_query(ch.match, bindings)))
                        else:
                            ok = d.get("correlation") in emitted
                        if not ok:
                            out.append(Mismatch(f.id, f.claim, ch.id, "world shows no such effect"))
                    else:
                        out.append(Mismatch(f.id, f.claim, ch.id, "value never confirmed by approver"))
    return out


# -- the loop ------------------------------------------------------------------------------


def _await_trigger(world: WorldState, handled: set[str]) -> TriggerEvent | None:
    """Wait for a trigger raised strictly before the current tick (edge-to-central latency)."""
    for _ in range(world.idle_limit + 1):
        for ev in world.triggers:
            if ev.id not in handled and ev.tick < world.tick:
                return ev
        step_world(world)
    return None


def _align(world: WorldState, at_least_one: bool) -> None:
    if at_least_one:
        step_world(world)
    k = max(1, world.slow_period)
    while world.tick % k:
        step_world(world)


def _claims_for(ajd: AjdSpec, receipt: Receipt, params: Mapping[str, Any], mission: str) -> list[Fact]:
    cap = next((c for c in ajd.operational_context.capabilities if c.tool == receipt.verb and c.domain == receipt.domain), None)
    if cap is None:
        return []
    bindings = {"mission": mission, "correlation": receipt.correlation}
    bindings.update({f"param.{k}": v for k, v in params.items()})
    bindings.update({f"result.{k}": v for k, v in receipt.result.items()})
    return [Fact(*instantiate(p, bindings)) for p in cap.produces]


def _proposal_fields(
    schema: Sequence[str],
    spec: ExecutionSpec,
    claims: Sequence[Fact],
    ledger: KnowledgeLedger,
    mission: str,
    receipts: Sequence[Receipt],
) -> dict[str, Any]:
    pool: dict[str, Any] = {}
    for f in ledger.current():
        if f.claim.subject == mission:
            pool[f.claim.relation] = f.claim.object
    for c in claims:
        pool[c.relation] = c.object
    for r in receipts:
        pool.update(r.result)
    for step in spec.steps:
        pool.update({k: v for k, v in step.params.items() if k != "mission"})
    for name, b in spec.mandatory_slots.items():
        if b.bound:
            pool[name] = b.value
    return {name: pool[name] for name in schema if name in pool}


def _clarify(
    ajd: AjdSpec,
    world: WorldState,
    spec: ExecutionSpec,
    executor: str,
    cycle: int,
) -> tuple[ExecutionSpec, list[Clarification], list[VerifiedFact], list[str]]:
    """Ask a biddable domain for each unbound slot that declares one to ask."""
    clarifications: list[Clarification] = []
    facts: list[VerifiedFact] = []
    failures: list[str] = []
    asks: dict[str, str] = {}
    for cap in ajd.operational_context.capabilities:
        for p in cap.parameters:
            if p.mandatory and p.ask and p.name not in asks:
                asks[p.name] = p.ask
    for slot in spec.unbound():
        approver = asks.get(slot)
        if approver is None:
            failures.append(f"slot {slot} unbound and no one to ask")
            continue
        proposal = Proposal("query", {"slots": [slot]}, f"please state your {slot}")
        try:
            rec = request_confirm(world, approver, proposal, executor, channel=f"query:{slot}")
        except ApproverUnavailable as exc:
            clarifications.append(Clarification(slot, approver, None, None, str(exc)))
            failures.append(f"slot {slot}: {exc}")
            continue
        value = rec.answer.get(slot) if rec.approved else None
        for key, answer in sorted(rec.answer.items()):
            claim = Fact(approver, f"prefers_{key}", str(answer))
            for ch in covering_channels(ajd, tuple(claim)):
                if isinstance(ch, ConfirmSpec) and ch.approver == approver:
                    ev = Evidence("confirm", claim, ch.id, replace(rec, channel=ch.id))
                    vf = certify([ev], claim, ajd, cycle)
                    if not isinstance(vf, Insufficient):
                        facts.append(vf)
                    break
        if value is None:
            failures.append(f"slot {slot}: {approver} gave no answer ({rec.reason})")
        else:
            spec = bind_slot(spec, slot, value, USER_SUPPLIED)
        clarifications.append(Clarification(slot, approver, None if value is None else str(value), rec, rec.reason))
    return spec, clarifications, facts, failures


def run_mission(
    ajd: AjdSpec,
    world: WorldState,
    planner: Planner,
    seed: int,
    budget: int,
    ledger: KnowledgeLedger | None = None,
    verify: bool = True,
    mission: str | None = None,
) -> MissionReport:
    """Drive one mission to Satisfied, Exhausted or Blocked."""
    ledger = ledger if ledger is not None else KnowledgeLedger()
    mission = mission or ledger.next_mission_id()
    executor = ajd.scope.machine_id
    memory = ajd.operational_context.memory
    vocabulary = memory.tags if memory is not None and memory.tags else None
    curve = [uncertainty(ajd, ledger, None, mission)]
    report = MissionReport(
        mission, [], MissionVerdict("Exhausted", budget), curve, ledger,
        open_loop=not verify, seed=seed, planner=getattr(planner, "name", ""), budget=budget,
        initial_facts=len(ledger.facts),
    )
    if budget <= 0:
        return report
    if check_satisfaction(ajd, ledger, mission):
        report.verdict = MissionVerdict("Satisfied", 0)
        return report
    event = _await_trigger(world, set())
    if event is None:
        report.verdict = MissionVerdict("Exhausted", budget, "no trigger event arrived")
        return report
    report.event = event
    _align(world, at_least_one=False)

    for t in range(1, budget + 1):
        if t > 1:
            _align(world, at_least_one=True)
        tick = world.tick
        context = retrieve_context(ledger, world, event, ajd, mission, t)
        try:
            spec = inject(event, context, planner, seed)
        except NoCapabilityCoversIntent as exc:
            report.verdict = MissionVerdict("Blocked", t, str(exc))
            break

        unbound = tuple(spec.unbound())
        clarifications: list[Clarification] = []
        facts: list[VerifiedFact] = []
        failures: list[str] = []
        receipts: list[Receipt] = []
        confirms: list[ConfirmRecord] = []
        timeouts: list[Timeout] = []
        verdict = check_scope(spec, ajd.scope, ajd.operational_context.capabilities)

        if unbound:
            spec, clarifications, facts, failures = _clarify(ajd, world, spec, executor, t)
            verdict = check_scope(spec, ajd.scope, ajd.operational_context.capabilities)
        elif not verdict.allowed:
            failures.append(str(verdict))
        else:
            claims: list[tuple[Fact, Receipt]] = []
            for step in spec.resolved_steps(ajd.operational_context.capabilities):
                try:
                    r = affect(world, step.domain, step)
                except DomainFault as exc:
                    r = Receipt(step.id, step.domain, step.verb, ReceiptStatus.REJECTED, "", world.tick, {}, str(exc))
                receipts.append(r)
                if r.status is ReceiptStatus.REJECTED:
                    failures.append(f"{step} rejected: {r.reason}")
                    continue
                claims.extend((c, r) for c in _claims_for(ajd, r, step.params, mission))
            if verify:
                f2, c2, t2, fail2 = _verify(ajd, world, ledger, spec, claims, receipts, mission, executor, t)
                facts += f2
                confirms += c2
                timeouts += t2
                failures += fail2
            else:
                for claim, r in claims:
                    ev = Evidence("assumed", claim, "assumed", r)
                    facts.append(VerifiedFact(claim, (ev.ref,), t, _evidence=(ev,)))

        facts = [replace(f, mission=mission) for f in facts]
        ledger = refine(ledger, KnowledgeDelta(tuple(facts), t))
        delta = KnowledgeDelta(ledger.facts[len(ledger.facts) - len(facts):], t)
        outcome = Outcome.failed("; ".join(failures)) if failures else Outcome.ok()
        ledger = assetize(
            ledger,
            Trajectory(mission, t, event, spec, tuple(receipts), delta, outcome),
            vocabulary,
        )
        u = uncertainty(ajd, ledger, spec, mission)
        curve.append(u)
        report.cycles.append(
            CycleRecord(
                t, tick, spec, verdict, tuple(receipts), delta, u, unbound, tuple(clarifications),
                tuple(confirms), tuple(timeouts), tuple(failures), not verify,
            )
        )
        report.ledger = ledger
        if check_satisfaction(ajd, ledger, mission):
            report.verdict = MissionVerdict("Satisfied", t)
            break
    else:
        last = report.cycles[-1] if report.cycles else None
        if last is not None and not last.verdict.allowed and not last.unbound:
            report.verdict = MissionVerdict("Blocked", budget, str(last.verdict))

    report.ledger = ledger
    report.supersedes = sum(1 for f in ledger.facts if f.supersedes)
    if not verify:
        report.mismatches = detect_mismatch(world, ledger, ajd)
    return report


def _verify(
    ajd: AjdSpec,
    world: WorldState,
    ledger: KnowledgeLedger,
    spec: ExecutionSpec,
    claims: Sequence[tuple[Fact, Receipt]],
    receipts: Sequence[Receipt],
    mission: str,
    executor: str,
    cycle: int,
) -> tuple[list[VerifiedFact], list[ConfirmRecord], list[Timeout], list[str]]:
    evidence: dict[Fact, list[Evidence]] = {}
    waited: dict[tuple[str, str], CallbackEvent | Timeout] = {}
    timeouts: list[Timeout] = []
    failures: list[str] = []
    blocked: set[Fact] = set()
    bindings = {"mission": mission}

    for claim, r in claims:
        evidence.setdefault(claim, [])
        for ch in covering_channels(ajd, tuple(claim)):
            if not isinstance(ch, CallbackSpec):
                continue
            key = (ch.id, r.correlation if ch.mode is CallbackMode.EXPLICIT else "")
            if key not in waited:
                waited[key] = await_callback(world, ch, r.correlation, ch.timeout, bindings)
                if isinstance(waited[key], Timeout):
                    timeouts.append(waited[key])  # type: ignore[arg-type]
            hit = waited[key]
            if isinstance(hit, Timeout):
                blocked.add(claim)
                failures.append(f"{claim}: {ch.id} timed out after {hit.waited} ticks")
            else:
                evidence[claim].append(Evidence("callback", claim, ch.id, hit))

    confirms: list[ConfirmRecord] = []
    rejected: list[VerifiedFact] = []
    for cf in ajd.evaluation.confirms:
        mine = [c for c, _ in claims if c not in blocked and any(ch.id == cf.id for ch in covering_channels(ajd, tuple(c)))]
        mine = list(dict.fromkeys(mine))
        if not mine:
            continue
        fields = _proposal_fields(cf.proposal_schema, spec, mine, ledger, mission, receipts)
        proposal = Proposal(cf.id, fields, "; ".join(str(c) for c in mine))
        try:
            rec = request_confirm(world, cf.approver, proposal, executor, channel=cf.id, budget=cf.timeout)
        except ApproverUnavailable as exc:
            failures.append(f"{cf.id}: {exc}")
            continue
        confirms.append(rec)
        for c in mine:
            if rec.approved:
                evidence[c].append(Evidence("confirm", c, cf.id, rec))
            else:
                rejected.append(certify_rejection(rec, c, cycle))
        if not rec.approved:
            failures.append(f"{cf.id} rejected: {rec.reason}")

    facts: list[VerifiedFact] = []
    for claim, evs in evidence.items():
        vf = certify(evs, claim, ajd, cycle)
        if isinstance(vf, Insufficient):
            if claim not in blocked and not any(f.claim[1] == f"{claim[1]}_rejected" for f in rejected):
                failures.append(f"{claim}: missing {', '.join(vf.missing)}")
            continue
        facts.append(vf)
    return facts + rejected, confirms, timeouts, failures
