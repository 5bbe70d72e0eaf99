"""Shared test utilities: invariant checkers, a fuzz planner, and the acceptance result board."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from apf.ajd import AjdSpec
from apf.avr import MissionReport
from apf.performer import UNBOUND, ContextBundle, ExecutionSpec, SlotBinding, _spawn
from apf.scenarios import FIXTURES
from apf.verification import ConfirmRecord, Insufficient, certify
from apf.world import ActionInstance, TriggerEvent, WorldState

TRAVEL_AJD = FIXTURES / "travel.ajd.json"
INDUSTRIAL_AJD = FIXTURES / "industrial.ajd.json"
TRAVEL_WORLD = FIXTURES / "travel.world.json"
INDUSTRIAL_WORLD = FIXTURES / "industrial.world.json"

# every ConfirmRecord constructed during the session, as (approver, executor)
CONFIRM_LOG: list[tuple[str, str]] = []

# criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[n] = (passed, detail)
    print(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {detail}")


def load_json(path: Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- invariants --------------------------------------------------------------------------


def hoare_violations(report: MissionReport, ajd: AjdSpec) -> list[str]:
    """Every way a report breaks the execution contract or the certification rule."""
    out: list[str] = []
    prefix = report.ledger.facts[: report.initial_facts]
    seen = len(prefix)
    for c in report.cycles:
        if c.receipts:
            if not c.verdict.allowed:
                out.append(f"t={c.t}: executed under {c.verdict}")
            if c.spec.unbound() or c.unbound:
                out.append(f"t={c.t}: executed with unbound slots {c.spec.unbound() or list(c.unbound)}")
        for f in c.delta.facts:
            if not f.evidence or not f._evidence:
                out.append(f"t={c.t}: {f.claim} has no evidence")
                continue
            if any(tuple(ev.claim) != tuple(f.claim) for ev in f._evidence):
                out.append(f"t={c.t}: {f.claim} carries evidence for another claim")
            if report.open_loop:
                continue
            if f.claim.relation.endswith("_rejected"):
                if not all(isinstance(ev.record, ConfirmRecord) and not ev.record.approved for ev in f._evidence):
                    out.append(f"t={c.t}: failure fact {f.claim} lacks a rejected confirm")
            elif isinstance(certify(list(f._evidence), f.claim, ajd), Insufficient):
                out.append(f"t={c.t}: {f.claim} entered the ledger uncertified")
        for t in c.timeouts:
            for f in c.delta.facts:
                if any(ref.startswith(f"callback:{t.channel}@") and ref.endswith(f":{t.correlation}") for ref in f.evidence):
                    out.append(f"t={c.t}: timeout on {t.channel} still produced {f.claim}")
        seen += len(c.delta)
    if report.ledger.facts[: report.initial_facts] != prefix or len(report.ledger.facts) != seen:
        out.append("ledger is not the carried ledger plus the cycle deltas")
    for f in report.ledger.facts:
        for ref in f.evidence:
            if ref not in report.ledger.evidence:
                out.append(f"{f.id}: evidence {ref} does not resolve")
    return out


def governance_violations(report: MissionReport, world: WorldState) -> list[str]:
    out = []
    for c in report.cycles:
        for rec in c.confirms:
            if rec.approver == rec.executor:
                out.append(f"{rec.id} approved by its own executor")
        for q in c.clarifications:
            if q.record is not None and q.record.approver == q.record.executor:
                out.append(f"{q.record.id} answered by its own executor")
    for bid in world.bids.values():
        if bid.executor == bid.domain:
            out.append(f"bid {bid.id} sent by {bid.executor} to itself")
    return out


def monotone(curve) -> bool:
    return all(a >= b for a, b in zip(curve, curve[1:]))


# -- fuzz planner ------------------------------------------------------------------------


@dataclass
class FuzzPlanner:
    """Emits arbitrary specs drawn from the injected capabilities.

    Parameters and slot values are random, slots are sometimes left unbound,
    and ``force`` makes every spec include a step matching a negative
    constraint with all slots bound, so only the guardrail can stop it.
    """

    seed: int
    force: bool = False
    bind_rate: float = 0.7
    name: str = "fuzz"
    forced: list[ActionInstance] = field(default_factory=list)

    def _rng(self, event: TriggerEvent, context: ContextBundle, seed: int) -> np.random.Generator:
        return _spawn(self.seed * 7919 + seed, "fuzz", context.mission, context.cycle, event.id)

    def _value(self, rng: np.random.Generator, values, context: ContextBundle) -> str:
        pool = list(values or ()) + [cf.fact.object for cf in context.contexts][:6] + ["zzz"]
        return str(pool[int(rng.integers(len(pool)))])

    def _forbidden(self, rng: np.random.Generator, context: ContextBundle) -> ActionInstance:
        neg = context.negative_constraints[int(rng.integers(len(context.negative_constraints)))]
        params: dict[str, Any] = {"mission": context.mission}
        for name, constraint in neg.params.items():
            if isinstance(constraint, dict) and "in" in constraint:
                options = list(constraint["in"])
                params[name] = options[int(rng.integers(len(options)))]
            elif isinstance(constraint, dict) and constraint.get("absent"):
                continue
            else:
                params[name] = constraint
        return ActionInstance(neg.verb, neg.domain, params)

    def plan(self, event: TriggerEvent, context: ContextBundle, seed: int) -> ExecutionSpec:
        rng = self._rng(event, context, seed)
        caps = list(context.capabilities)
        steps: list[ActionInstance] = []
        slots: dict[str, SlotBinding] = {}
        for _ in range(int(rng.integers(0, 5))):
            cap = caps[int(rng.integers(len(caps)))]
            params: dict[str, Any] = {"mission": context.mission}
            for p in cap.parameters:
                if p.mandatory:
                    if p.name not in slots:
                        bind = self.force or rng.random() < self.bind_rate
                        slots[p.name] = SlotBinding(self._value(rng, p.values, context), ("fuzz",)) if bind else UNBOUND
                elif rng.random() < 0.6:
                    params[p.name] = self._value(rng, p.values, context)
            steps.append(ActionInstance(cap.tool, cap.domain, params))
        if self.force:
            bad = self._forbidden(rng, context)
            cap = context.capability(bad.verb)
            for p in cap.parameters if cap is not None else ():
                if p.mandatory and not slots.get(p.name, UNBOUND).bound:
                    slots[p.name] = SlotBinding(self._value(rng, p.values, context), ("fuzz",))
            steps.insert(int(rng.integers(len(steps) + 1)), bad)
            self.forced.append(bad)
        spec_id = f"{context.mission}-F{context.cycle}"
        steps = [ActionInstance(s.verb, s.domain, s.params, f"{spec_id}.{k}") for k, s in enumerate(steps)]
        return ExecutionSpec(spec_id, context.cycle, tuple(steps), slots, context.mission, self.name)
