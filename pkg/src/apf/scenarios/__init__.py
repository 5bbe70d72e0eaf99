"""Executable workplaces for the two bundled case studies.

A scenario fixture is a JSON document describing every domain of the world
(facts, state variables, verbs, dynamics, approval policies), the trigger
events, an optional embedded fault schedule, the planner playbook, and for
the industrial case the edge reflex rule. It names the AJD it pairs with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

from ..ajd import AjdSpec, DomainKind, load_ajd, validate_ajd
from ..errors import AjdError, FixtureParseError
from ..facts import Fact
from ..performer import Playbook, RulePlanner, SeededStochasticPlanner
from ..world import (
    ActionInstance,
    DomainModel,
    DomainState,
    Dynamics,
    EmitDef,
    EventKind,
    FaultSpec,
    LexicalFact,
    Policy,
    Rule,
    VerbDef,
    WorldState,
    affect,
    inject_fault,
)

__all__ = [
    "FIXTURES",
    "ReflexRule",
    "ReflexAction",
    "Fixture",
    "Scenario",
    "fixture_path",
    "load_fixture",
    "build_world",
    "build_scenario",
    "run_fast_loop",
    "inject_fault",
    "load_faults",
    "make_planner",
]

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    """Resolve a bundled scenario name (``travel``, ``industrial``) or pass a path through."""
    candidate = FIXTURES / f"{name}.world.json"
    return candidate if candidate.exists() else Path(name)


@dataclass(frozen=True)
class ReflexRule:
    performer: str
    domain: str
    var: str
    threshold: float
    running_var: str
    verb: str
    signals: tuple[Mapping[str, Any], ...] = ()


@dataclass(frozen=True)
class ReflexAction:
    tick: int
    performer: str
    domain: str
    verb: str
    reading: float
    trigger: str


@dataclass(frozen=True)
class Fixture:
    name: str
    path: Path
    ajd_path: Path
    raw: Mapping[str, Any]
    playbook: Playbook
    reflex: ReflexRule | None = None
    faults: tuple[FaultSpec, ...] = ()


class Scenario(tuple):
    """``(world, ajd)`` pair that also carries the parsed fixture."""

    fixture: Fixture

    def __new__(cls, world: WorldState, ajd: AjdSpec, fixture: Fixture) -> "Scenario":
        obj = super().__new__(cls, (world, ajd))
        obj.fixture = fixture
        return obj

    @property
    def world(self) -> WorldState:
        return self[0]

    @property
    def ajd(self) -> AjdSpec:
        return self[1]


def _fail(path: Path, message: str) -> FixtureParseError:
    return FixtureParseError(f"{path}: {message}")


def _fault(raw: Any, path: Path) -> FaultSpec:
    try:
        return FaultSpec(str(raw["kind"]), int(raw["tick"]), dict(raw.get("params", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise _fail(path, f"bad fault entry {raw!r} ({exc})") from None


def load_faults(path: str | Path) -> list[FaultSpec]:
    """Read a fault schedule: a JSON list, or an object with a ``faults`` list."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise _fail(path, str(exc)) from None
    if isinstance(raw, Mapping):
        raw = raw.get("faults", [])
    if not isinstance(raw, list):
        raise _fail(path, "fault schedule must be a list")
    return [_fault(f, path) for f in raw]


def load_fixture(path: str | Path) -> Fixture:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise _fail(path, str(exc)) from None
    if not isinstance(raw, Mapping) or "domains" not in raw or "ajd" not in raw:
        raise _fail(path, "fixture needs 'ajd' and 'domains'")
    reflex = None
    if raw.get("reflex"):
        r = raw["reflex"]
        try:
            reflex = ReflexRule(
                performer=str(r["performer"]),
                domain=str(r["domain"]),
                var=str(r["var"]),
                threshold=float(r["threshold"]),
                running_var=str(r.get("running_var", "rpm")),
                verb=str(r.get("verb", "stop")),
                signals=tuple(r.get("signals", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise _fail(path, f"bad reflex rule ({exc})") from None
    return Fixture(
        name=str(raw.get("name", path.stem)),
        path=path,
        ajd_path=(path.parent / str(raw["ajd"])).resolve(),
        raw=raw,
        playbook=Playbook.from_dict(raw.get("playbook", {})),
        reflex=reflex,
        faults=tuple(_fault(f, path) for f in raw.get("faults", [])),
    )


def _verb(name: str, raw: Mapping[str, Any]) -> VerbDef:
    return VerbDef(
        name=name,
        guard=tuple(raw.get("guard", ())),
        set=dict(raw.get("set", {})),
        add={k: float(v) for k, v in raw.get("add", {}).items()},
        emit=tuple(EmitDef(str(e["to"]), int(e.get("delay", 1)), str(e["message"])) for e in raw.get("emit", ())),
        result=dict(raw.get("result", {})),
    )


def _policy(raw: Mapping[str, Any] | None) -> Policy | None:
    if raw is None:
        return None
    return Policy(
        response_delay=int(raw.get("response_delay", 1)),
        rules={
            kind: tuple(
                Rule(
                    field=r.get("field"),
                    var=r.get("var"),
                    constraint=r.get("constraint"),
                    eq_var=r.get("eq_var"),
                    reason=str(r.get("reason", "")),
                )
                for r in rules
            )
            for kind, rules in raw.get("rules", {}).items()
        },
        answers=dict(raw.get("answers", {})),
        on_approve={k: tuple(v) for k, v in raw.get("on_approve", {}).items()},
    )


def _domain(did: str, raw: Mapping[str, Any], path: Path) -> DomainState:
    try:
        kind = DomainKind(str(raw["kind"]).lower())
    except (KeyError, ValueError):
        raise _fail(path, f"domain {did!r} has no valid kind") from None
    model = DomainModel(
        id=did,
        kind=kind,
        verbs={name: _verb(name, v) for name, v in raw.get("verbs", {}).items()},
        dynamics=tuple(
            Dynamics(
                var=str(d["var"]),
                base=float(d["base"]),
                noise=float(d.get("noise", 0.0)),
                revert=float(d.get("revert", 0.5)),
                off_value=None if d.get("off_value") is None else float(d["off_value"]),
                when=dict(d.get("when", {})),
            )
            for d in raw.get("dynamics", ())
        ),
        inbox=bool(raw.get("inbox", False)),
        policy=_policy(raw.get("policy")),
    )
    facts = [
        LexicalFact(str(f["id"]), Fact(*[str(x) for x in f["fact"]]), frozenset(str(t).lower() for t in f.get("tags", ())))
        for f in raw.get("facts", ())
    ]
    try:
        return DomainState(did, kind, model, facts, dict(raw.get("vars", {})))
    except ValueError as exc:
        raise _fail(path, str(exc)) from None


def build_world(fixture: Fixture, seed: int, faults: Sequence[FaultSpec] | None = None) -> WorldState:
    """Fresh world for ``fixture``; ``faults`` replaces the embedded fault schedule when given."""
    domains = {did: _domain(did, d, fixture.path) for did, d in fixture.raw["domains"].items()}
    world = WorldState(
        seed=int(seed),
        domains=domains,
        slow_period=int(fixture.raw.get("slow_period", 1)),
        idle_limit=int(fixture.raw.get("idle_limit", 100)),
        fixture=fixture,
    )
    for trig in fixture.raw.get("triggers", ()):
        from ..world import TriggerEvent

        ev = TriggerEvent(world.next_id("e"), str(trig["source"]), str(trig["payload"]), int(trig.get("tick", 0)))
        world.triggers.append(ev)
        world.log(ev.source, EventKind.TRIGGER_RAISED, trigger=ev.id, text=ev.payload)
    if fixture.reflex is not None:
        world.hooks.append(lambda w, fx=fixture: run_fast_loop(fx, w))
    for fault in fixture.faults if faults is None else faults:
        inject_fault(world, fault)
    return world


def build_scenario(path: str | Path, seed: int, faults: Sequence[FaultSpec] | None = None) -> Scenario:
    """Load a fixture and its AJD, cross-check them, and build a fresh deterministic world."""
    fixture = load_fixture(fixture_path(str(path)))
    try:
        ajd = load_ajd(fixture.ajd_path)
    except (AjdError, OSError) as exc:
        raise _fail(fixture.path, f"bundled AJD invalid: {exc}") from None
    report = validate_ajd(ajd)
    if not report.ok:
        raise _fail(fixture.path, "bundled AJD fails validation: " + "; ".join(map(str, report.violations)))
    declared = {d.id: d.kind for d in ajd.workplace}
    raw_domains = fixture.raw["domains"]
    for did, kind in declared.items():
        if did not in raw_domains:
            raise _fail(fixture.path, f"AJD domain {did!r} has no world model")
        if str(raw_domains[did].get("kind", "")).lower() != kind.value:
            raise _fail(fixture.path, f"domain {did!r} kind differs from the AJD")
    for did in raw_domains:
        if did not in declared:
            raise _fail(fixture.path, f"world domain {did!r} is not declared in the AJD")
    if fixture.reflex is not None and fixture.reflex.domain not in raw_domains:
        raise _fail(fixture.path, f"reflex rule targets unknown domain {fixture.reflex.domain!r}")
    return Scenario(build_world(fixture, seed, faults), ajd, fixture)


def run_fast_loop(fixture: Fixture, world: WorldState) -> ReflexAction | None:
    """Edge reflex: stop the equipment in the same tick a reading crosses the threshold.

    Runs as a tick hook, before any slow-loop work, and never consults the
    central planner. Stopped equipment is left alone.
    """
    rule = fixture.reflex
    if rule is None:
        return None
    state = world.domain(rule.domain)
    reading = float(state.state_vars.get(rule.var, 0.0))
    running = float(state.state_vars.get(rule.running_var, 0.0)) > 0
    if not running or reading <= rule.threshold:
        return None
    action = ActionInstance(rule.verb, rule.domain, {}, world.next_id("reflex"))
    affect(world, rule.domain, action)
    words = ["anomaly"]
    for sig in rule.signals:
        value = state.state_vars.get(str(sig["var"]))
        if value is not None and float(value) > float(sig["gt"]):
            words.append(str(sig["keyword"]))
    payload = f"{' '.join(words)} on {rule.domain}: {rule.var}={reading:g} exceeded {rule.threshold:g}; stopped by reflex"
    if rule.performer in world.domains:
        perf = world.domains[rule.performer]
        perf.state_vars["reflexes"] = int(perf.state_vars.get("reflexes", 0)) + 1
    trigger = world.raise_trigger(rule.performer, payload)
    world.log(rule.performer, EventKind.REFLEX_ACTION, target=rule.domain, verb=rule.verb, reading=reading, trigger=trigger.id)
    return ReflexAction(world.tick, rule.performer, rule.domain, rule.verb, reading, trigger.id)


def make_planner(name: str, fixture: Fixture):
    if name == "rule":
        return RulePlanner(fixture.playbook)
    if name == "stochastic":
        return SeededStochasticPlanner(fixture.playbook)
    raise ValueError(f"unknown planner {name!r}; expected rule or stochastic")
