"""The simulated workplace.

A :class:`WorldState` holds one :class:`DomainState` per domain and an
append-only event log. Time is a discrete tick counter advanced only by
:func:`step_world`. Lexical domains hold facts, causal domains hold scalar
state variables and a verb table, biddable domains hold a queue of bids that
their scripted policy resolves after a response delay.

The world is single-writer: ``affect`` and ``step_world`` mutate it in place;
``snapshot`` returns an immutable copy for comparison and hand-off.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .ajd import DomainKind, constraint_holds
from .errors import (
    DomainFault,
    LexicalTarget,
    PastTick,
    UnknownDomain,
    UnknownVariable,
    UnknownVerb,
)
from .facts import Fact, substitute


class EventKind(str, Enum):
    EFFECT_APPLIED = "effect_applied"
    ACTION_REJECTED = "action_rejected"
    BID_ENQUEUED = "bid_enqueued"
    BID_RESOLVED = "bid_resolved"
    CALLBACK_EMITTED = "callback_emitted"
    FAULT_FIRED = "fault_fired"
    REFLEX_ACTION = "reflex_action"
    TRIGGER_RAISED = "trigger_raised"


@dataclass(frozen=True)
class WorldEvent:
    seq: int
    tick: int
    domain: str
    kind: EventKind
    payload: Mapping[str, Any]

    @property
    def correlation(self) -> str | None:
        return self.payload.get("correlation")


@dataclass(frozen=True)
class LexicalFact:
    id: str
    fact: Fact
    tags: frozenset[str]


@dataclass(frozen=True)
class ActionInstance:
    verb: str
    domain: str
    params: Mapping[str, Any] = field(default_factory=dict)
    id: str = ""

    def __str__(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.verb}({self.domain}{', ' + args if args else ''})"


class ReceiptStatus(str, Enum):
    ACCEPTED = "accepted"
    DEFERRED = "deferred"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Receipt:
    action_id: str
    domain: str
    verb: str
    status: ReceiptStatus
    correlation: str
    tick: int
    result: Mapping[str, Any] = field(default_factory=dict)
    reason: str = ""


@dataclass(frozen=True)
class TriggerEvent:
    id: str
    source: str
    payload: str
    tick: int

    def __post_init__(self) -> None:
        if not self.payload.strip():
            raise ValueError("trigger payload must be non-empty")


@dataclass(frozen=True)
class Observation:
    domain: str
    tick: int
    values: Mapping[str, Any] = field(default_factory=dict)
    facts: tuple[LexicalFact, ...] = ()


class BidStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REFUSED = "refused"


@dataclass
class Bid:
    id: str
    domain: str
    kind: str
    fields: Mapping[str, Any]
    summary: str
    digest: str
    executor: str
    enqueued: int
    due: int
    correlation: str
    status: BidStatus = BidStatus.PENDING
    reason: str = ""
    answer: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FaultSpec:
    kind: str  # VoucherDrop | PriceSurge | SensorSpike | ApproverReject | DomainOutage
    tick: int
    params: Mapping[str, Any] = field(default_factory=dict)


FAULT_KINDS = frozenset({"VoucherDrop", "PriceSurge", "SensorSpike", "ApproverReject", "DomainOutage"})


# -- domain models (static, from fixtures) ------------------------------------------------


@dataclass(frozen=True)
class EmitDef:
    to: str
    delay: int
    message: str


@dataclass(frozen=True)
class VerbDef:
    name: str
    guard: tuple[Mapping[str, Any], ...] = ()
    set: Mapping[str, Any] = field(default_factory=dict)
    add: Mapping[str, float] = field(default_factory=dict)
    emit: tuple[EmitDef, ...] = ()
    result: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Dynamics:
    """Mean-reverting noisy drift of one variable toward a target."""

    var: str
    base: float
    noise: float = 0.0
    revert: float = 0.5
    off_value: float | None = None
    when: Mapping[str, Any] = field(default_factory=dict)  # {var: constraint}


@dataclass(frozen=True)
class Rule:
    """One approval condition on a proposal field or a world variable (``domain.var``)."""

    field: str | None = None
    var: str | None = None
    constraint: Any = None
    eq_var: str | None = None
    reason: str = ""


@dataclass(frozen=True)
class Policy:
    response_delay: int = 1
    rules: Mapping[str, tuple[Rule, ...]] = field(default_factory=dict)  # bid kind -> rules, "*" default
    answers: Mapping[str, Any] = field(default_factory=dict)  # reply profile for "query" bids
    on_approve: Mapping[str, tuple[Mapping[str, Any], ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class DomainModel:
    id: str
    kind: DomainKind
    verbs: Mapping[str, VerbDef] = field(default_factory=dict)
    dynamics: tuple[Dynamics, ...] = ()
    inbox: bool = False
    policy: Policy | None = None


@dataclass
class DomainState:
    id: str
    kind: DomainKind
    model: DomainModel
    facts: list[LexicalFact] = field(default_factory=list)
    state_vars: dict[str, Any] = field(default_factory=dict)
    pending_bids: list[Bid] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.facts and self.kind is not DomainKind.LEXICAL:
            raise ValueError(f"{self.id}: facts only live on lexical domains")
        if self.state_vars and self.kind is not DomainKind.CAUSAL:
            raise ValueError(f"{self.id}: state variables only live on causal domains")


Hook = Callable[["WorldState"], None]


@dataclass
class WorldState:
    seed: int
    domains: dict[str, DomainState]
    tick: int = 0
    event_log: list[WorldEvent] = field(default_factory=list)
    slow_period: int = 1
    idle_limit: int = 100
    hooks: list[Hook] = field(default_factory=list, repr=False)
    triggers: list[TriggerEvent] = field(default_factory=list)
    faults: list[FaultSpec] = field(default_factory=list)
    bids: dict[str, Bid] = field(default_factory=dict)
    _schedule: list[tuple[int, int, dict[str, Any]]] = field(default_factory=list, repr=False)
    _drops: list[dict[str, Any]] = field(default_factory=list, repr=False)
    _forced_rejects: dict[str, int] = field(default_factory=dict, repr=False)
    _outages: dict[str, int] = field(default_factory=dict, repr=False)
    _holds: dict[tuple[str, str], int] = field(default_factory=dict, repr=False)
    _by_correlation: dict[str, list[WorldEvent]] = field(default_factory=dict, repr=False)
    _counters: dict[str, int] = field(default_factory=dict, repr=False)
    _rng: np.random.Generator | None = field(default=None, repr=False)
    _fired_faults: list[FaultSpec] = field(default_factory=list, repr=False)
    fixture: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self._rng is None:
            self._rng = np.random.default_rng(np.random.SeedSequence(self.seed))

    # -- helpers -------------------------------------------------------------------

    def domain(self, domain_id: str) -> DomainState:
        try:
            return self.domains[domain_id]
        except KeyError:
            raise UnknownDomain(domain_id) from None

    def next_id(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}{n}"

    def log(self, domain: str, kind: EventKind, **payload: Any) -> WorldEvent:
        ev = WorldEvent(len(self.event_log), self.tick, domain, kind, payload)
        self.event_log.append(ev)
        corr = payload.get("correlation")
        if corr is not None:
            self._by_correlation.setdefault(corr, []).append(ev)
        return ev

    def events_for(self, correlation: str) -> list[WorldEvent]:
        return list(self._by_correlation.get(correlation, ()))

    def events(self, kind: EventKind | None = None, since: int = 0) -> Iterable[WorldEvent]:
        for ev in self.event_log[since:]:
            if kind is None or ev.kind is kind:
                yield ev

    def var(self, ref: str) -> Any:
        """Read ``domain.var`` (oracle access)."""
        domain, _, name = ref.partition(".")
        state = self.domain(domain)
        if name not in state.state_vars:
            raise UnknownVariable(ref)
        return state.state_vars[name]

    def raise_trigger(self, source: str, payload: str) -> TriggerEvent:
        ev = TriggerEvent(self.next_id("e"), source, payload, self.tick)
        self.triggers.append(ev)
        self.log(source, EventKind.TRIGGER_RAISED, trigger=ev.id, text=payload)
        return ev

    def snapshot(self) -> dict[str, Any]:
        """Immutable, comparable copy of everything observable in the world."""
        return {
            "tick": self.tick,
            "domains": {
                did: (
                    tuple(d.facts),
                    tuple(sorted((k, v) for k, v in d.state_vars.items())),
                    tuple((b.id, b.status.value) for b in d.pending_bids),
                )
                for did, d in sorted(self.domains.items())
            },
            "log": tuple(self.event_log),
            "triggers": tuple(self.triggers),
        }

    def log_digest(self) -> str:
        h = hashlib.sha256()
        for ev in self.event_log:
            h.update(
                json.dumps([ev.seq, ev.tick, ev.domain, ev.kind.value, ev.payload], sort_keys=True, default=str).encode()
            )
        return h.hexdigest()


# -- templates and conditions --------------------------------------------------------------


def _render(template: Any, bindings: Mapping[str, Any], state: DomainState | None = None) -> Any:
    if isinstance(template, Mapping) and "var" in template and state is not None:
        name = _render(template["var"], bindings)
        if name not in state.state_vars:
            raise UnknownVariable(f"{state.id}.{name}")
        return state.state_vars[name]
    if isinstance(template, str):
        if template.startswith("{") and template.endswith("}") and template.count("{") == 1:
            key = template[1:-1]
            if key in bindings:
                return bindings[key]
        return substitute(template, bindings)
    return template


def _num(value: Any) -> float | None:
    try:
        out = float(value)
    except (TypeError, ValueError):
        return None
    return out if math.isfinite(out) else None


def _rule_holds(rule: Rule, fields: Mapping[str, Any], world: WorldState) -> bool:
    if rule.field is not None:
        present, value = rule.field in fields, fields.get(rule.field)
    elif rule.var is not None:
        try:
            present, value = True, world.var(rule.var)
        except (UnknownVariable, UnknownDomain):
            present, value = False, None
    else:
        return True
    if rule.eq_var is not None:
        try:
            target = world.var(rule.eq_var)
        except (UnknownVariable, UnknownDomain):
            return False
        if not present or str(value) != str(target):
            return False
    if rule.constraint is not None:
        return constraint_holds(rule.constraint, present, value)
    return True


def query_holds(world: WorldState, domain: str, query: Mapping[str, Any]) -> Observation | None:
    """Evaluate a predicate-style query; return the witnessing observation or ``None``.

    Causal predicates take one of two forms::

        {"var": "rpm", "eq": 0}                        # constraint on one variable
        {"prefix": "inbox/", "contains": "voucher:m1"}  # some variable holds a substring
    """
    state = world.domain(domain)
    if state.kind is DomainKind.LEXICAL:
        obs = observe(world, domain, query)
        return obs if obs.facts else None
    if state.kind is DomainKind.BIDDABLE:
        obs = observe(world, domain, query)
        wanted = query.get("status", BidStatus.ACCEPTED.value)
        return obs if obs.values.get("status") == wanted else None
    if "prefix" in query:
        prefix, needle = str(query["prefix"]), str(query.get("contains", ""))
        hits = {
            k: v for k, v in sorted(state.state_vars.items()) if k.startswith(prefix) and needle in str(v)
        }
        return Observation(domain, world.tick, hits) if hits else None
    name = query.get("var")
    if name is None:
        raise UnknownVariable(f"{domain}: query names no variable")
    if name not in state.state_vars:
        raise UnknownVariable(f"{domain}.{name}")
    constraint = {k: v for k, v in query.items() if k != "var"}
    value = state.state_vars[name]
    if constraint_holds(constraint, True, value):
        return Observation(domain, world.tick, {name: value})
    return None


# -- operations -----------------------------------------------------------------------


def observe(world: WorldState, domain: str, query: Mapping[str, Any] | None = None) -> Observation:
    """Read-only view of one domain.

    Lexical queries filter facts by ``subject``/``relation``/``object`` globs and
    ``tags``; causal queries list ``vars`` (or a ``prefix``); biddable queries
    name a ``bid``.
    """
    from fnmatch import fnmatchcase

    query = query or {}
    state = world.domain(domain)
    if state.kind is DomainKind.LEXICAL:
        tags = {str(t).lower() for t in query.get("tags", ())}
        out = []
        for lf in state.facts:
            if tags and not (tags & lf.tags):
                continue
            if not all(
                fnmatchcase(tok, str(query.get(key, "*")))
                for tok, key in zip(lf.fact, ("subject", "relation", "object"))
            ):
                continue
            out.append(lf)
        return Observation(domain, world.tick, facts=tuple(out))
    if state.kind is DomainKind.CAUSAL:
        if "prefix" in query:
            prefix = str(query["prefix"])
            values = {
                k: v
                for k, v in sorted(state.state_vars.items())
                if k.startswith(prefix) and str(query.get("contains", "")) in str(v)
            }
            return Observation(domain, world.tick, values)
        names = query.get("vars")
        if names is None:
            names = [query["var"]] if "var" in query else sorted(state.state_vars)
        values = {}
        for name in names:
            if name not in state.state_vars:
                raise UnknownVariable(f"{domain}.{name}")
            values[name] = state.state_vars[name]
        return Observation(domain, world.tick, values)
    bid_id = query.get("bid")
    if bid_id is None:
        return Observation(domain, world.tick, {"pending": len(state.pending_bids)})
    bid = world.bids.get(bid_id)
    if bid is None or bid.domain != domain:
        raise UnknownVariable(f"{domain}: unknown bid {bid_id!r}")
    return Observation(domain, world.tick, {"bid": bid.id, "status": bid.status.value, "reason": bid.reason, **dict(bid.answer)})


def _digest(fields: Mapping[str, Any]) -> str:
    return hashlib.sha256(json.dumps(dict(fields), sort_keys=True, default=str).encode()).hexdigest()[:16]


def affect(world: WorldState, domain: str, action: ActionInstance) -> Receipt:
    """Apply an action to a causal domain, or bid it to a biddable one."""
    state = world.domain(domain)
    if state.kind is DomainKind.LEXICAL:
        raise LexicalTarget(f"{domain} is lexical; it can be read, not affected")
    until = world._outages.get(domain)
    if until is not None and world.tick < until:
        raise DomainFault(f"{domain} unavailable until tick {until} (injected outage)")

    correlation = world.next_id("c")
    params = dict(action.params)

    if state.kind is DomainKind.BIDDABLE:
        kind = str(params.pop("kind", action.verb))
        executor = str(params.pop("executor", ""))
        summary = str(params.pop("summary", action.verb))
        delay = state.model.policy.response_delay if state.model.policy else 1
        bid = Bid(
            id=world.next_id("b"),
            domain=domain,
            kind=kind,
            fields=params,
            summary=summary,
            digest=_digest(params),
            executor=executor,
            enqueued=world.tick,
            due=world.tick + max(1, delay),
            correlation=correlation,
        )
        state.pending_bids.append(bid)
        world.bids[bid.id] = bid
        world.log(domain, EventKind.BID_ENQUEUED, correlation=correlation, bid=bid.id, bid_kind=kind, action=action.id)
        return Receipt(action.id, domain, action.verb, ReceiptStatus.DEFERRED, correlation, world.tick, {"bid": bid.id})

    verb = state.model.verbs.get(action.verb)
    if verb is None:
        raise UnknownVerb(f"{domain} does not understand {action.verb!r}")
    bindings: dict[str, Any] = {f"param.{k}": v for k, v in params.items()}
    bindings.update({f"var.{k}": v for k, v in state.state_vars.items()})
    bindings["correlation"] = correlation
    bindings["action"] = action.id
    bindings["tick"] = world.tick
    for k in ("mission",):
        if k in params:
            bindings[k] = params[k]

    for g in verb.guard:
        name = _render(g["var"], bindings)
        constraint = {k: v for k, v in g.items() if k not in ("var", "reason")}
        if not constraint_holds(constraint, name in state.state_vars, state.state_vars.get(name)):
            reason = str(g.get("reason", f"guard on {name} failed"))
            world.log(domain, EventKind.ACTION_REJECTED, correlation=correlation, action=action.id, verb=action.verb, reason=reason)
            return Receipt(action.id, domain, action.verb, ReceiptStatus.REJECTED, correlation, world.tick, {}, reason)

    result = {k: _render(v, bindings, state) for k, v in verb.result.items()}
    bindings.update({f"result.{k}": v for k, v in result.items()})
    changes: dict[str, Any] = {}
    for name_t, value_t in verb.set.items():
        name = _render(name_t, bindings)
        changes[name] = _render(value_t, bindings, state)
    for name_t, delta in verb.add.items():
        name = _render(name_t, bindings)
        base = changes.get(name, state.state_vars.get(name, 0))
        changes[name] = _num(base) + float(delta) if _num(base) is not None else float(delta)
        if float(changes[name]).is_integer():
            changes[name] = int(changes[name])
    state.state_vars.update(changes)
    world.log(
        domain,
        EventKind.EFFECT_APPLIED,
        correlation=correlation,
        action=action.id,
        verb=action.verb,
        changes=changes,
    )
    for em in verb.emit:
        _schedule(
            world,
            world.tick + em.delay,
            {
                "to": em.to,
                "message": _render(em.message, bindings),
                "correlation": correlation,
                "source": domain,
                "action": action.id,
            },
        )
    return Receipt(action.id, domain, action.verb, ReceiptStatus.ACCEPTED, correlation, world.tick, result)


def _schedule(world: WorldState, tick: int, emission: dict[str, Any]) -> None:
    n = world.next_id("emit")
    heapq.heappush(world._schedule, (tick, int(n[4:]), emission))


def inject_fault(world: WorldState, fault: FaultSpec) -> WorldState:
    """Schedule a fault; it fires inside the step that reaches its tick."""
    if fault.kind not in FAULT_KINDS:
        raise ValueError(f"unknown fault kind {fault.kind!r}")
    if fault.tick < world.tick:
        raise PastTick(f"fault at tick {fault.tick} but world is at tick {world.tick}")
    world.faults.append(fault)
    world.faults.sort(key=lambda f: f.tick)
    if fault.tick == world.tick:
        _fire_due_faults(world)
    return world


def _fire_due_faults(world: WorldState) -> None:
    due = [f for f in world.faults if f.tick <= world.tick]
    world.faults = [f for f in world.faults if f.tick > world.tick]
    for fault in due:
        _fire(world, fault)


def _fire(world: WorldState, fault: FaultSpec) -> None:
    p = dict(fault.params)
    world._fired_faults.append(fault)
    if fault.kind == "VoucherDrop":
        count = p.get("count")
        world._drops.append(
            {"prefix": str(p.get("prefix", "voucher")), "remaining": math.inf if count is None else int(count)}
        )
        target = str(p.get("domain", "mail_system"))
    elif fault.kind == "PriceSurge":
        target = str(p.get("domain", "hotel_api"))
        state = world.domain(target)
        factor = float(p.get("factor", 1.8))
        for k, v in list(state.state_vars.items()):
            if k.startswith(str(p.get("prefix", "price/"))) and _num(v) is not None:
                state.state_vars[k] = int(round(float(v) * factor))
        news = p.get("news_domain")
        if news is not None:
            lex = world.domain(str(news))
            fact = p.get("fact", ["conference", "price_surge", "true"])
            lex.facts.append(
                LexicalFact(
                    id=f"{news}:surge{len(lex.facts) + 1}",
                    fact=Fact(*[str(x) for x in fact]),
                    tags=frozenset(str(t).lower() for t in p.get("tags", ["surge"])),
                )
            )
    elif fault.kind == "SensorSpike":
        target = str(p.get("domain", "equipment"))
        state = world.domain(target)
        values = dict(p.get("values", {}))
        if "var" in p:
            values[str(p["var"])] = p.get("value")
        hold = int(p.get("hold", 3))
        for name, value in values.items():
            if name not in state.state_vars:
                raise UnknownVariable(f"{target}.{name}")
            state.state_vars[name] = value
            world._holds[(target, name)] = world.tick + hold
    elif fault.kind == "ApproverReject":
        target = str(p.get("domain", "site_manager"))
        world._forced_rejects[target] = world._forced_rejects.get(target, 0) + int(p.get("count", 1))
    else:  # DomainOutage
        target = str(p["domain"])
        world._outages[target] = world.tick + int(p.get("duration", 1))
    world.log(target, EventKind.FAULT_FIRED, fault=fault.kind, params={k: v for k, v in p.items()})


def _apply_dynamics(world: WorldState) -> None:
    for did in sorted(world.domains):
        state = world.domains[did]
        for dyn in state.model.dynamics:
            held = world._holds.get((did, dyn.var))
            if held is not None:
                if world.tick < held:
                    continue
                del world._holds[(did, dyn.var)]
            active = all(
                constraint_holds(c, v in state.state_vars, state.state_vars.get(v)) for v, c in dyn.when.items()
            )
            target = dyn.base if active or dyn.off_value is None else dyn.off_value
            current = _num(state.state_vars.get(dyn.var, target)) or 0.0
            noise = float(world._rng.normal(0.0, dyn.noise)) if dyn.noise and active else 0.0
            state.state_vars[dyn.var] = round(current + dyn.revert * (target - current) + noise, 3)


def _deliver_due(world: WorldState) -> None:
    while world._schedule and world._schedule[0][0] <= world.tick:
        _, _, em = heapq.heappop(world._schedule)
        dropped = False
        for drop in world._drops:
            if drop["remaining"] > 0 and str(em["message"]).startswith(drop["prefix"]):
                drop["remaining"] -= 1
                dropped = True
                break
        if dropped:
            world.log(em["to"], EventKind.FAULT_FIRED, fault="VoucherDrop", dropped=em["message"], correlation=em["correlation"])
            continue
        target = world.domains.get(em["to"])
        if target is not None and target.model.inbox:
            n = sum(1 for k in target.state_vars if k.startswith("inbox/")) + 1
            target.state_vars[f"inbox/{n:03d}"] = em["message"]
        world.log(
            em["to"],
            EventKind.CALLBACK_EMITTED,
            correlation=em["correlation"],
            message=em["message"],
            source=em["source"],
            action=em["action"],
        )


def _resolve_bids(world: WorldState) -> None:
    for did in sorted(world.domains):
        state = world.domains[did]
        if state.kind is not DomainKind.BIDDABLE or not state.pending_bids:
            continue
        keep = []
        for bid in state.pending_bids:
            if bid.due > world.tick:
                keep.append(bid)
                continue
            _resolve(world, state, bid)
        state.pending_bids = keep


def _resolve(world: WorldState, state: DomainState, bid: Bid) -> None:
    policy = state.model.policy or Policy()
    if world._forced_rejects.get(state.id, 0) > 0:
        world._forced_rejects[state.id] -= 1
        bid.status, bid.reason = BidStatus.REFUSED, "scripted rejection"
    elif bid.kind == "query":
        # a person asked about one preference volunteers the whole profile
        bid.answer = dict(policy.answers)
        bid.status = BidStatus.ACCEPTED if bid.answer else BidStatus.REFUSED
        if not bid.answer:
            bid.reason = "nothing to answer"
    else:
        rules = policy.rules.get(bid.kind, policy.rules.get("*", ()))
        failed = next((r for r in rules if not _rule_holds(r, bid.fields, world)), None)
        if failed is None:
            bid.status = BidStatus.ACCEPTED
            for eff in policy.on_approve.get(bid.kind, ()):
                target = world.domain(str(eff["domain"]))
                binds = {f"field.{k}": v for k, v in bid.fields.items()}
                for name_t, value_t in dict(eff.get("set", {})).items():
                    target.state_vars[_render(name_t, binds)] = _render(value_t, binds)
        else:
            bid.status = BidStatus.REFUSED
            bid.reason = failed.reason or "policy condition not met"
    world.log(
        state.id,
        EventKind.BID_RESOLVED,
        correlation=bid.correlation,
        bid=bid.id,
        bid_kind=bid.kind,
        verdict=bid.status.value,
        reason=bid.reason,
        answer=dict(bid.answer),
    )


def step_world(world: WorldState) -> WorldState:
    """Advance one tick: faults, dynamics, tick hooks, due deliveries, bid resolution."""
    world.tick += 1
    _fire_due_faults(world)
    _apply_dynamics(world)
    for hook in world.hooks:
        hook(world)
    _deliver_due(world)
    _resolve_bids(world)
    return world
