"""Stand-ins for the stochastic machine and the guardrail in front of it.

A planner turns a trigger event plus an injected :class:`ContextBundle` into an
:class:`ExecutionSpec`. Planners never guess a mandatory slot: a slot is bound
only from a context fact, a remembered trajectory, or a user answer, and a
spec with any unbound mandatory slot cannot execute.
"""

from __future__ import annotations

import math
import re
import zlib
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Protocol, Sequence

import numpy as np

from .ajd import ActionPattern, CapabilitySpec, ParamSpec, ScopeDecl
from .errors import AlreadyBound, NoCapabilityCoversIntent, UnknownSlot
from .facts import Fact
from .world import ActionInstance, TriggerEvent

if TYPE_CHECKING:
    from .ledger import Trajectory

__all__ = [
    "ContextFact",
    "ContextBundle",
    "SlotBinding",
    "ExecutionSpec",
    "Offense",
    "ScopeVerdict",
    "Playbook",
    "Task",
    "Planner",
    "RulePlanner",
    "SeededStochasticPlanner",
    "USER_SUPPLIED",
    "TriggerEvent",
    "keywords",
    "inject",
    "check_scope",
    "bind_slot",
]

USER_SUPPLIED = "user-supplied"

_WORD = re.compile(r"[a-z0-9_]+")


def keywords(text: str) -> frozenset[str]:
    return frozenset(_WORD.findall(text.lower()))


@dataclass(frozen=True)
class ContextFact:
    fact: Fact
    source: str  # lexical domain id, or "ledger"
    tag: str
    ref: str


@dataclass(frozen=True)
class ContextBundle:
    contexts: tuple[ContextFact, ...]
    memory: tuple["Trajectory", ...]
    capabilities: tuple[CapabilitySpec, ...]
    authorities: tuple[ActionPattern, ...] = ()
    negative_constraints: tuple[ActionPattern, ...] = ()
    mission: str = "m1"
    cycle: int = 0

    def facts(self, relation: str | None = None) -> Iterable[ContextFact]:
        for cf in self.contexts:
            if relation is None or cf.fact.relation == relation:
                yield cf

    def achieved(self, relation: str) -> bool:
        return any(
            cf.source == "ledger" and cf.fact.subject == self.mission and cf.fact.relation == relation
            for cf in self.contexts
        )

    def capability(self, tool: str) -> CapabilitySpec | None:
        for c in self.capabilities:
            if c.tool == tool:
                return c
        return None


@dataclass(frozen=True)
class SlotBinding:
    value: str | None = None
    grounding: tuple[str, ...] = ()

    @property
    def bound(self) -> bool:
        return self.value is not None

    @property
    def user_supplied(self) -> bool:
        return USER_SUPPLIED in self.grounding


UNBOUND = SlotBinding()


@dataclass(frozen=True)
class ExecutionSpec:
    id: str
    cycle: int
    steps: tuple[ActionInstance, ...]
    mandatory_slots: Mapping[str, SlotBinding] = field(default_factory=dict)
    mission: str = "m1"
    planner: str = ""
    support: float = 1.0

    def unbound(self) -> list[str]:
        return sorted(name for name, b in self.mandatory_slots.items() if not b.bound)

    def resolved_steps(self, capabilities: Sequence[CapabilitySpec] = ()) -> tuple[ActionInstance, ...]:
        """Steps with bound slot values filled in for their mandatory parameters."""
        caps = {c.tool: c for c in capabilities}
        out = []
        for step in self.steps:
            params = dict(step.params)
            cap = caps.get(step.verb)
            names = cap.mandatory if cap is not None else tuple(self.mandatory_slots)
            for name in names:
                b = self.mandatory_slots.get(name)
                if b is not None and b.bound and name not in params:
                    params[name] = b.value
            out.append(replace(step, params=params))
        return tuple(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "cycle": self.cycle,
            "mission": self.mission,
            "planner": self.planner,
            "steps": [{"id": s.id, "verb": s.verb, "domain": s.domain, "params": dict(s.params)} for s in self.steps],
            "mandatory_slots": {
                k: {"value": b.value, "grounding": list(b.grounding)} for k, b in sorted(self.mandatory_slots.items())
            },
        }


# -- guardrail -------------------------------------------------------------------------


@dataclass(frozen=True)
class Offense:
    index: int
    step: ActionInstance
    constraint: str
    kind: str  # "forbidden" | "unauthorized"


@dataclass(frozen=True)
class ScopeVerdict:
    offenses: tuple[Offense, ...] = ()

    @property
    def allowed(self) -> bool:
        return not self.offenses

    def __str__(self) -> str:
        if self.allowed:
            return "Allowed"
        return "Blocked: " + "; ".join(f"{o.step} [{o.kind}: {o.constraint}]" for o in self.offenses)


def check_scope(spec: ExecutionSpec, scope: ScopeDecl, capabilities: Sequence[CapabilitySpec] = ()) -> ScopeVerdict:
    """Deny-overrides: a step matching any negative constraint is blocked even if authorized."""
    offenses = []
    for i, step in enumerate(spec.resolved_steps(capabilities)):
        denied = [n for n in scope.negative_constraints if n.matches(step.verb, step.domain, step.params)]
        if denied:
            offenses.extend(Offense(i, step, str(n), "forbidden") for n in denied)
        elif not any(a.matches(step.verb, step.domain, step.params) for a in scope.authorities):
            offenses.append(Offense(i, step, "no matching authority", "unauthorized"))
    return ScopeVerdict(tuple(offenses))


def bind_slot(spec: ExecutionSpec, slot: str, value: Any, grounding: str) -> ExecutionSpec:
    if slot not in spec.mandatory_slots:
        raise UnknownSlot(slot)
    if spec.mandatory_slots[slot].bound:
        raise AlreadyBound(slot)
    slots = dict(spec.mandatory_slots)
    slots[slot] = SlotBinding(str(value), (grounding,))
    return replace(spec, mandatory_slots=slots)


# -- playbooks --------------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    intent: str
    tool: str
    achieves: str | None = None
    after: tuple[str, ...] = ()
    with_tool: str | None = None  # companion step, planned only alongside this tool


@dataclass(frozen=True)
class Playbook:
    """Keyword-to-intent table plus an ordered task list; shipped with each scenario."""

    intents: Mapping[str, frozenset[str]]
    tasks: tuple[Task, ...]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "Playbook":
        return cls(
            intents={k: frozenset(str(w).lower() for w in v) for k, v in raw.get("intents", {}).items()},
            tasks=tuple(
                Task(
                    intent=str(t["intent"]),
                    tool=str(t["tool"]),
                    achieves=t.get("achieves"),
                    after=tuple(t.get("after", ())),
                    with_tool=t.get("with"),
                )
                for t in raw.get("tasks", ())
            ),
        )

    def intents_for(self, event: TriggerEvent) -> list[str]:
        words = keywords(event.payload)
        return [name for name, kw in self.intents.items() if kw & words]


@dataclass(frozen=True)
class Candidate:
    value: str
    refs: tuple[str, ...]


def _slot_candidates(
    param: ParamSpec,
    event: TriggerEvent,
    context: ContextBundle,
    bound: Mapping[str, SlotBinding],
    tool: str,
) -> list[Candidate]:
    """Grounded values for one parameter, in context order; never invented."""
    found: dict[str, list[str]] = {}
    g = param.ground
    if g is not None:
        words = keywords(event.payload)
        groups: dict[str, dict[str, list[str]]] = {}
        for cf in context.facts(g.relation):
            subj = cf.fact.subject
            if g.subject == "{mission}":
                if subj != context.mission:
                    continue
            elif g.subject == "{keyword}":
                if subj.lower() not in words:
                    continue
            elif g.subject.startswith("{slot:"):
                other = bound.get(g.subject[6:-1])
                if other is None or not other.bound or subj != other.value:
                    continue
            elif g.subject != "*" and subj != g.subject:
                continue
            groups.setdefault(subj if g.subject == "{keyword}" else "", {}).setdefault(cf.fact.object, []).append(cf.ref)
        if groups:
            keys = list(groups.values())
            common = [v for v in keys[0] if all(v in other for other in keys[1:])]
            for v in common:
                found[v] = [r for grp in keys for r in grp.get(v, [])]
        if g.exclude is not None:
            for cf in context.facts(g.exclude):
                if cf.fact.subject == context.mission:
                    found.pop(cf.fact.object, None)

    remembered: dict[str, list[str]] = {}
    for traj in context.memory:
        if not traj.succeeded:
            continue
        b = traj.spec.mandatory_slots.get(param.name)
        if b is not None and b.bound:
            remembered.setdefault(b.value, []).append(traj.id)
            continue
        for step in traj.spec.steps:
            if step.verb == tool and param.name in step.params:
                remembered.setdefault(str(step.params[param.name]), []).append(traj.id)

    if found:
        preferred = [v for v in found if v in remembered]
        order = preferred + [v for v in found if v not in remembered]
        out = [Candidate(v, tuple(found[v]) + tuple(remembered.get(v, ()))) for v in order]
    else:
        out = [Candidate(v, tuple(refs)) for v, refs in remembered.items()]
    if param.values is not None:
        out = [c for c in out if c.value in param.values]
    return out


class Planner(Protocol):
    name: str

    def plan(self, event: TriggerEvent, context: ContextBundle, seed: int) -> ExecutionSpec: ...


@dataclass
class _Draft:
    steps: list[tuple[str, CapabilitySpec]]
    optional: list[int]  # indices of companion steps


class _PlaybookPlanner:
    name = "base"

    def __init__(self, playbook: Playbook):
        self.playbook = playbook

    def _draft(self, event: TriggerEvent, context: ContextBundle) -> _Draft:
        if not context.capabilities:
            raise NoCapabilityCoversIntent("no capabilities were injected")
        intents = set(self.playbook.intents_for(event))
        tasks = [t for t in self.playbook.tasks if t.intent in intents and context.capability(t.tool)]
        if not intents or not tasks:
            raise NoCapabilityCoversIntent(f"no capability covers intent of {event.payload!r}")
        chosen = []
        for t in tasks:
            if t.with_tool is not None:
                continue
            if t.achieves and context.achieved(t.achieves):
                continue
            if all(context.achieved(a) for a in t.after):
                chosen.append(t)
        tools = {t.tool for t in chosen}
        companions = [t for t in tasks if t.with_tool in tools]
        ordered = [t for t in tasks if t in chosen or t in companions]
        steps = [(t.tool, context.capability(t.tool)) for t in ordered]
        optional = [i for i, t in enumerate(ordered) if t in companions]
        return _Draft(steps, optional)  # type: ignore[arg-type]

    def _choose(self, candidates: list[Candidate], rng: np.random.Generator | None) -> Candidate:
        if rng is None or len(candidates) == 1:
            return candidates[0]
        return candidates[int(rng.integers(len(candidates)))]

    def _build(
        self,
        event: TriggerEvent,
        context: ContextBundle,
        draft: _Draft,
        rng: np.random.Generator | None,
    ) -> ExecutionSpec:
        include = [True] * len(draft.steps)
        if rng is not None:
            for i in draft.optional:
                include[i] = bool(rng.integers(2))
        slots: dict[str, SlotBinding] = {}
        support = 1.0
        actions = []
        for i, (tool, cap) in enumerate(draft.steps):
            for p in cap.parameters:
                if p.mandatory and p.name not in slots:
                    cands = _slot_candidates(p, event, context, slots, tool)
                    if cands:
                        c = self._choose(cands, rng)
                        slots[p.name] = SlotBinding(c.value, c.refs)
                        support *= len(cands)
                    else:
                        slots[p.name] = UNBOUND
                        support *= len(p.values) if p.values else math.inf
            if not include[i]:
                continue
            params: dict[str, Any] = {"mission": context.mission}
            for p in cap.parameters:
                if p.mandatory:
                    continue
                cands = _slot_candidates(p, event, context, slots, tool)
                if cands:
                    params[p.name] = self._choose(cands, rng).value
                    support *= len(cands)
                elif rng is not None and p.values:
                    params[p.name] = p.values[int(rng.integers(len(p.values)))]
                    support *= len(p.values)
                elif p.default is not None:
                    params[p.name] = p.default
            actions.append(ActionInstance(tool, cap.domain, params))
        support *= 2 ** len(draft.optional) if rng is not None else 1
        spec_id = f"{context.mission}-S{context.cycle}"
        actions = [replace(a, id=f"{spec_id}.{k}") for k, a in enumerate(actions)]
        return ExecutionSpec(spec_id, context.cycle, tuple(actions), slots, context.mission, self.name, support)


class RulePlanner(_PlaybookPlanner):
    """Table-driven and fully deterministic: first grounded candidate, every companion step."""

    name = "rule"

    def plan(self, event: TriggerEvent, context: ContextBundle, seed: int) -> ExecutionSpec:
        return self._build(event, context, self._draft(event, context), None)


def _spawn(seed: int, *keys: object) -> np.random.Generator:
    key = tuple(zlib.crc32(str(k).encode()) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


class SeededStochasticPlanner(_PlaybookPlanner):
    """Samples uniformly from the context-filtered candidate set.

    Randomness comes from a seed sequence split on (mission, cycle, event), so
    the same inputs always give the same plan, and different cycles draw from
    independent streams.
    """

    name = "stochastic"

    def plan(self, event: TriggerEvent, context: ContextBundle, seed: int) -> ExecutionSpec:
        rng = _spawn(seed, context.mission, context.cycle, event.id)
        return self._build(event, context, self._draft(event, context), rng)

    def support(self, event: TriggerEvent, context: ContextBundle) -> float:
        """Size of the candidate-plan set for this event and context."""
        return self.plan(event, context, 0).support


def inject(event: TriggerEvent, context: ContextBundle, planner: Planner, seed: int) -> ExecutionSpec:
    """Concretize an event into an execution spec, enforcing capability closure."""
    if not context.capabilities:
        raise NoCapabilityCoversIntent("no capabilities were injected")
    spec = planner.plan(event, context, seed)
    tools = {(c.tool, c.domain) for c in context.capabilities}
    for step in spec.steps:
        if (step.verb, step.domain) not in tools:
            raise AssertionError(f"planner {planner.name} emitted {step} outside the injected capabilities")
    return spec
