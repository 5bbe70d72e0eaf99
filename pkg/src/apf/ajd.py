"""Agentic Job Description documents: typed contract, parser, validator, linter.

An AJD is a UTF-8 JSON document with six top-level keys::

    meta, mission, workplace, scope, operational_context, evaluation

``parse_ajd`` checks structure (presence, kinds, references, uniqueness) and
raises on the first problem. ``validate_ajd`` checks the semantic rules and
returns every violation it finds. ``lint_ajd`` returns style advisories.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import (
    DanglingDomainRef,
    DuplicateDomainId,
    MalformedDocument,
    MissingComponent,
    UnknownDomainKind,
)
from .facts import Pattern, as_pattern, overlaps

COMPONENTS = ("mission", "workplace", "scope", "operational_context", "evaluation")
ROLES = frozenset({"context_source", "interaction_target", "verification_channel"})


class DomainKind(str, Enum):
    CAUSAL = "causal"
    BIDDABLE = "biddable"
    LEXICAL = "lexical"


class CallbackMode(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


# -- mission ----------------------------------------------------------------------


@dataclass(frozen=True)
class RequirementPredicate:
    id: str
    domain: str
    claim: Pattern


@dataclass(frozen=True)
class RequirementSpec:
    goal_statement: str
    predicates: tuple[RequirementPredicate, ...]


# -- workplace ----------------------------------------------------------------------


@dataclass(frozen=True)
class DomainDecl:
    id: str
    kind: DomainKind
    roles: frozenset[str] = frozenset()
    description: str = ""


# -- scope ----------------------------------------------------------------------


def constraint_holds(constraint: Any, present: bool, value: Any) -> bool:
    """Evaluate one parameter constraint against a (possibly absent) value.

    A bare scalar means equality. A mapping combines any of ``eq``, ``ne``,
    ``in``, ``not_in``, ``lt``, ``lte``, ``gt``, ``gte``, ``present`` and
    ``absent`` conjunctively. Comparisons against an absent value fail.
    """
    if not isinstance(constraint, Mapping):
        return present and value == constraint
    for op, arg in constraint.items():
        if op == "present":
            ok = present == bool(arg)
        elif op == "absent":
            ok = (not present) == bool(arg)
        elif not present:
            ok = op in ("ne", "not_in")
        elif op == "eq":
            ok = value == arg
        elif op == "ne":
            ok = value != arg
        elif op == "in":
            ok = value in arg
        elif op == "not_in":
            ok = value not in arg
        elif op in ("lt", "lte", "gt", "gte"):
            try:
                v, a = float(value), float(arg)
            except (TypeError, ValueError):
                return False
            ok = {"lt": v < a, "lte": v <= a, "gt": v > a, "gte": v >= a}[op]
        else:
            raise MalformedDocument(f"unknown parameter constraint operator {op!r}")
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class ActionPattern:
    verb: str
    domain: str
    params: Mapping[str, Any] = field(default_factory=dict)
    label: str = ""

    def matches(self, verb: str, domain: str, params: Mapping[str, Any]) -> bool:
        if verb != self.verb or domain != self.domain:
            return False
        return all(
            constraint_holds(c, name in params, params.get(name))
            for name, c in self.params.items()
        )

    def key(self) -> tuple[str, str, str]:
        return (self.verb, self.domain, json.dumps(dict(self.params), sort_keys=True))

    def __str__(self) -> str:
        if self.label:
            return self.label
        return f"{self.verb}({self.domain})"


@dataclass(frozen=True)
class SubPerformer:
    id: str
    identity: str = ""
    authorities: tuple[ActionPattern, ...] = ()


@dataclass(frozen=True)
class ScopeDecl:
    identity: str
    authorities: tuple[ActionPattern, ...]
    negative_constraints: tuple[ActionPattern, ...]
    machine_id: str = "machine"
    sub_performers: tuple[SubPerformer, ...] = ()


# -- operational context --------------------------------------------------------------


@dataclass(frozen=True)
class Grounding:
    """Where a slot value may come from: the object of a context fact.

    ``subject`` is a glob; ``{mission}`` means the running mission id,
    ``{keyword}`` any keyword of the trigger event, ``{slot:NAME}`` the value
    already bound to another slot. Objects of facts ``(mission, exclude, X)``
    are removed from the candidates.
    """

    relation: str
    subject: str = "*"
    exclude: str | None = None


@dataclass(frozen=True)
class ParamSpec:
    name: str
    mandatory: bool = False
    values: tuple[str, ...] | None = None
    default: str | None = None
    ground: Grounding | None = None
    ask: str | None = None


@dataclass(frozen=True)
class CapabilitySpec:
    tool: str
    domain: str
    parameters: tuple[ParamSpec, ...] = ()
    side_effect: bool = True
    produces: tuple[Pattern, ...] = ()

    def param(self, name: str) -> ParamSpec | None:
        for p in self.parameters:
            if p.name == name:
                return p
        return None

    @property
    def mandatory(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters if p.mandatory)


@dataclass(frozen=True)
class ContextSource:
    domain: str
    tags: frozenset[str]


@dataclass(frozen=True)
class MemoryDecl:
    store: str
    tags: frozenset[str]


@dataclass(frozen=True)
class ContextDecl:
    contexts: tuple[ContextSource, ...]
    memory: MemoryDecl | None
    capabilities: tuple[CapabilitySpec, ...]


# -- evaluation ---------------------------------------------------------------------


@dataclass(frozen=True)
class CallbackSpec:
    id: str
    channel: str
    mode: CallbackMode
    match: Mapping[str, Any]
    covers: tuple[Pattern, ...]
    timeout: int = 5


@dataclass(frozen=True)
class ConfirmSpec:
    id: str
    approver: str
    proposal_schema: tuple[str, ...]
    covers: tuple[Pattern, ...]
    timeout: int = 5


@dataclass(frozen=True)
class EvaluationDecl:
    callbacks: tuple[CallbackSpec, ...]
    confirms: tuple[ConfirmSpec, ...]

    def channels(self) -> tuple[CallbackSpec | ConfirmSpec, ...]:
        return self.callbacks + self.confirms


@dataclass(frozen=True)
class Meta:
    name: str
    version: str


@dataclass(frozen=True)
class AjdSpec:
    meta: Meta
    mission: RequirementSpec
    workplace: tuple[DomainDecl, ...]
    scope: ScopeDecl
    operational_context: ContextDecl
    evaluation: EvaluationDecl

    def domain(self, domain_id: str) -> DomainDecl | None:
        for d in self.workplace:
            if d.id == domain_id:
                return d
        return None

    def capability(self, tool: str) -> CapabilitySpec | None:
        for c in self.operational_context.capabilities:
            if c.tool == tool:
                return c
        return None

    @property
    def mandatory_slots(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for cap in self.operational_context.capabilities:
            for name in cap.mandatory:
                seen.setdefault(name)
        return tuple(seen)


# -- parsing ---------------------------------------------------------------------------


def _require(obj: Mapping[str, Any], key: str, path: str) -> Any:
    if not isinstance(obj, Mapping) or key not in obj or obj[key] is None:
        raise MissingComponent(f"{path}.{key}" if path else key)
    return obj[key]


def _list(value: Any, path: str) -> list[Any]:
    if not isinstance(value, list):
        raise MalformedDocument(f"{path} must be a list")
    return value


def _pattern(value: Any, path: str) -> Pattern:
    try:
        return as_pattern(value)
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"{path}: {exc}") from None


def _kind(value: Any) -> DomainKind:
    try:
        return DomainKind(str(value).lower())
    except ValueError:
        raise UnknownDomainKind(value) from None


def _action_pattern(raw: Any, path: str) -> ActionPattern:
    if not isinstance(raw, Mapping):
        raise MalformedDocument(f"{path} must be an object")
    return ActionPattern(
        verb=str(_require(raw, "verb", path)),
        domain=str(_require(raw, "domain", path)),
        params=dict(raw.get("params") or {}),
        label=str(raw.get("label", "")),
    )


def _param(name: str, raw: Any, path: str) -> ParamSpec:
    if not isinstance(raw, Mapping):
        raise MalformedDocument(f"{path} must be an object")
    ground = raw.get("ground")
    values = raw.get("values")
    return ParamSpec(
        name=name,
        mandatory=bool(raw.get("mandatory", False)),
        values=tuple(str(v) for v in values) if values is not None else None,
        default=None if raw.get("default") is None else str(raw["default"]),
        ground=None
        if ground is None
        else Grounding(
            relation=str(_require(ground, "relation", f"{path}.ground")),
            subject=str(ground.get("subject", "*")),
            exclude=None if ground.get("exclude") is None else str(ground["exclude"]),
        ),
        ask=None if raw.get("ask") is None else str(raw["ask"]),
    )


def _capability(raw: Any, path: str) -> CapabilitySpec:
    if not isinstance(raw, Mapping):
        raise MalformedDocument(f"{path} must be an object")
    params = raw.get("parameters") or {}
    if not isinstance(params, Mapping):
        raise MalformedDocument(f"{path}.parameters must be an object")
    return CapabilitySpec(
        tool=str(_require(raw, "tool", path)),
        domain=str(_require(raw, "domain", path)),
        parameters=tuple(_param(k, v, f"{path}.parameters.{k}") for k, v in params.items()),
        side_effect=bool(raw.get("side_effect", True)),
        produces=tuple(
            _pattern(p, f"{path}.produces") for p in _list(raw.get("produces", []), f"{path}.produces")
        ),
    )


def _callback(raw: Any, path: str) -> CallbackSpec:
    try:
        mode = CallbackMode(str(_require(raw, "mode", path)).lower())
    except ValueError:
        raise MalformedDocument(f"{path}.mode must be explicit or implicit") from None
    return CallbackSpec(
        id=str(_require(raw, "id", path)),
        channel=str(_require(raw, "channel", path)),
        mode=mode,
        match=dict(raw.get("match") or {}),
        covers=tuple(_pattern(p, f"{path}.covers") for p in _list(raw.get("covers", []), f"{path}.covers")),
        timeout=int(raw.get("timeout", 5)),
    )


def _confirm(raw: Any, path: str) -> ConfirmSpec:
    return ConfirmSpec(
        id=str(_require(raw, "id", path)),
        approver=str(_require(raw, "approver", path)),
        proposal_schema=tuple(str(s) for s in raw.get("proposal_schema", [])),
        covers=tuple(_pattern(p, f"{path}.covers") for p in _list(raw.get("covers", []), f"{path}.covers")),
        timeout=int(raw.get("timeout", 5)),
    )


def _from_dict(doc: Mapping[str, Any]) -> AjdSpec:
    if not isinstance(doc, Mapping):
        raise MalformedDocument("AJD document must be a JSON object")
    for name in ("meta",) + COMPONENTS:
        _require(doc, name, "")

    meta_raw = doc["meta"]
    meta = Meta(name=str(_require(meta_raw, "name", "meta")), version=str(meta_raw.get("version", "0")))

    mission_raw = doc["mission"]
    predicates_raw = _list(_require(mission_raw, "predicates", "mission"), "mission.predicates")
    if not predicates_raw:
        raise MissingComponent("mission.predicates")
    mission = RequirementSpec(
        goal_statement=str(_require(mission_raw, "goal_statement", "mission")),
        predicates=tuple(
            RequirementPredicate(
                id=str(_require(p, "id", f"mission.predicates[{i}]")),
                domain=str(_require(p, "domain", f"mission.predicates[{i}]")),
                claim=_pattern(_require(p, "claim", f"mission.predicates[{i}]"), f"mission.predicates[{i}].claim"),
            )
            for i, p in enumerate(predicates_raw)
        ),
    )

    workplace_raw = _list(doc["workplace"], "workplace")
    if not workplace_raw:
        raise MissingComponent("workplace")
    workplace = []
    seen: set[str] = set()
    for i, d in enumerate(workplace_raw):
        path = f"workplace[{i}]"
        did = str(_require(d, "id", path))
        if did in seen:
            raise DuplicateDomainId(did)
        seen.add(did)
        roles = frozenset(str(r) for r in d.get("roles", []))
        unknown = roles - ROLES
        if unknown:
            raise MalformedDocument(f"{path}.roles: unknown role(s) {sorted(unknown)}")
        workplace.append(
            DomainDecl(id=did, kind=_kind(_require(d, "kind", path)), roles=roles, description=str(d.get("description", "")))
        )

    scope_raw = doc["scope"]
    scope = ScopeDecl(
        identity=str(_require(scope_raw, "identity", "scope")),
        authorities=tuple(
            _action_pattern(a, f"scope.authorities[{i}]")
            for i, a in enumerate(_list(_require(scope_raw, "authorities", "scope"), "scope.authorities"))
        ),
        negative_constraints=tuple(
            _action_pattern(a, f"scope.negative_constraints[{i}]")
            for i, a in enumerate(_list(scope_raw.get("negative_constraints", []), "scope.negative_constraints"))
        ),
        machine_id=str(scope_raw.get("machine_id", "machine")),
        sub_performers=tuple(
            SubPerformer(
                id=str(_require(s, "id", f"scope.sub_performers[{i}]")),
                identity=str(s.get("identity", "")),
                authorities=tuple(
                    _action_pattern(a, f"scope.sub_performers[{i}].authorities[{j}]")
                    for j, a in enumerate(s.get("authorities", []))
                ),
            )
            for i, s in enumerate(_list(scope_raw.get("sub_performers", []), "scope.sub_performers"))
        ),
    )

    oc_raw = doc["operational_context"]
    memory_raw = oc_raw.get("memory")
    oc = ContextDecl(
        contexts=tuple(
            ContextSource(
                domain=str(_require(c, "domain", f"operational_context.contexts[{i}]")),
                tags=frozenset(str(t).lower() for t in c.get("tags", [])),
            )
            for i, c in enumerate(_list(oc_raw.get("contexts", []), "operational_context.contexts"))
        ),
        memory=None
        if memory_raw is None
        else MemoryDecl(
            store=str(memory_raw.get("store", "trajectories")),
            tags=frozenset(str(t).lower() for t in memory_raw.get("tags", [])),
        ),
        capabilities=tuple(
            _capability(c, f"operational_context.capabilities[{i}]")
            for i, c in enumerate(
                _list(_require(oc_raw, "capabilities", "operational_context"), "operational_context.capabilities")
            )
        ),
    )

    ev_raw = doc["evaluation"]
    evaluation = EvaluationDecl(
        callbacks=tuple(
            _callback(c, f"evaluation.callbacks[{i}]")
            for i, c in enumerate(_list(ev_raw.get("callbacks", []), "evaluation.callbacks"))
        ),
        confirms=tuple(
            _confirm(c, f"evaluation.confirms[{i}]")
            for i, c in enumerate(_list(ev_raw.get("confirms", []), "evaluation.confirms"))
        ),
    )
    if not evaluation.callbacks and not evaluation.confirms:
        raise MissingComponent("evaluation")

    spec = AjdSpec(meta, mission, tuple(workplace), scope, oc, evaluation)
    _check_refs(spec)
    return spec


def domain_refs(spec: AjdSpec) -> Iterable[tuple[str, str]]:
    """Yield ``(domain_id, where)`` for every domain reference outside the workplace."""
    for p in spec.mission.predicates:
        yield p.domain, f"mission.predicates[{p.id}]"
    for a in spec.scope.authorities:
        yield a.domain, "scope.authorities"
    for a in spec.scope.negative_constraints:
        yield a.domain, "scope.negative_constraints"
    for s in spec.scope.sub_performers:
        for a in s.authorities:
            yield a.domain, f"scope.sub_performers[{s.id}]"
    for c in spec.operational_context.contexts:
        yield c.domain, "operational_context.contexts"
    for c in spec.operational_context.capabilities:
        yield c.domain, f"operational_context.capabilities[{c.tool}]"
        for p in c.parameters:
            if p.ask is not None:
                yield p.ask, f"operational_context.capabilities[{c.tool}].{p.name}.ask"
    for cb in spec.evaluation.callbacks:
        yield cb.channel, f"evaluation.callbacks[{cb.id}]"
    for cf in spec.evaluation.confirms:
        yield cf.approver, f"evaluation.confirms[{cf.id}]"


def _check_refs(spec: AjdSpec) -> None:
    known = {d.id for d in spec.workplace}
    for did, where in domain_refs(spec):
        if did not in known:
            raise DanglingDomainRef(did, where)


def parse_ajd(document: bytes | str) -> AjdSpec:
    """Parse an AJD JSON document into an :class:`AjdSpec`."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    return _from_dict(doc)


def load_ajd(path: str | Path) -> AjdSpec:
    return parse_ajd(Path(path).read_bytes())


# -- serialization ---------------------------------------------------------------------


def _pattern_out(p: ActionPattern) -> dict[str, Any]:
    out: dict[str, Any] = {"verb": p.verb, "domain": p.domain, "params": dict(p.params)}
    if p.label:
        out["label"] = p.label
    return out


def _param_out(p: ParamSpec) -> dict[str, Any]:
    out: dict[str, Any] = {"mandatory": p.mandatory}
    if p.values is not None:
        out["values"] = list(p.values)
    if p.default is not None:
        out["default"] = p.default
    if p.ground is not None:
        g: dict[str, Any] = {"relation": p.ground.relation, "subject": p.ground.subject}
        if p.ground.exclude is not None:
            g["exclude"] = p.ground.exclude
        out["ground"] = g
    if p.ask is not None:
        out["ask"] = p.ask
    return out


def to_dict(spec: AjdSpec) -> dict[str, Any]:
    oc = spec.operational_context
    return {
        "meta": {"name": spec.meta.name, "version": spec.meta.version},
        "mission": {
            "goal_statement": spec.mission.goal_statement,
            "predicates": [
                {"id": p.id, "domain": p.domain, "claim": list(p.claim)} for p in spec.mission.predicates
            ],
        },
        "workplace": [
            {"id": d.id, "kind": d.kind.value, "roles": sorted(d.roles), "description": d.description}
            for d in spec.workplace
        ],
        "scope": {
            "machine_id": spec.scope.machine_id,
            "identity": spec.scope.identity,
            "authorities": [_pattern_out(a) for a in spec.scope.authorities],
            "negative_constraints": [_pattern_out(a) for a in spec.scope.negative_constraints],
            "sub_performers": [
                {"id": s.id, "identity": s.identity, "authorities": [_pattern_out(a) for a in s.authorities]}
                for s in spec.scope.sub_performers
            ],
        },
        "operational_context": {
            "contexts": [{"domain": c.domain, "tags": sorted(c.tags)} for c in oc.contexts],
            "memory": None if oc.memory is None else {"store": oc.memory.store, "tags": sorted(oc.memory.tags)},
            "capabilities": [
                {
                    "tool": c.tool,
                    "domain": c.domain,
                    "parameters": {p.name: _param_out(p) for p in c.parameters},
                    "side_effect": c.side_effect,
                    "produces": [list(p) for p in c.produces],
                }
                for c in oc.capabilities
            ],
        },
        "evaluation": {
            "callbacks": [
                {
                    "id": cb.id,
                    "channel": cb.channel,
                    "mode": cb.mode.value,
                    "match": dict(cb.match),
                    "covers": [list(p) for p in cb.covers],
                    "timeout": cb.timeout,
                }
                for cb in spec.evaluation.callbacks
            ],
            "confirms": [
                {
                    "id": cf.id,
                    "approver": cf.approver,
                    "proposal_schema": list(cf.proposal_schema),
                    "covers": [list(p) for p in cf.covers],
                    "timeout": cf.timeout,
                }
                for cf in spec.evaluation.confirms
            ],
        },
    }


def serialize_ajd(spec: AjdSpec) -> bytes:
    return (json.dumps(to_dict(spec), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# -- validation ---------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Violation:
    code: str
    subject: str
    message: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.message}" if self.message else f"{self.code}({self.subject})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def channel_domain(channel: CallbackSpec | ConfirmSpec) -> str:
    return channel.channel if isinstance(channel, CallbackSpec) else channel.approver


def covering_channels(spec: AjdSpec, claim: Pattern, domain: str | None = None) -> list[CallbackSpec | ConfirmSpec]:
    out = []
    for ch in spec.evaluation.channels():
        if domain is not None and channel_domain(ch) != domain:
            continue
        if any(overlaps(cov, claim) for cov in ch.covers):
            out.append(ch)
    return out


def validate_ajd(spec: AjdSpec) -> ValidationReport:
    """Collect every semantic violation; an empty report means the contract is usable."""
    found: set[Violation] = set()
    kinds = {d.id: d.kind for d in spec.workplace}

    counts: dict[str, int] = {}
    for d in spec.workplace:
        counts[d.id] = counts.get(d.id, 0) + 1
    for did, n in counts.items():
        if n > 1:
            found.add(Violation("DuplicateDomainId", did))
    for did, where in domain_refs(spec):
        if did not in kinds:
            found.add(Violation("DanglingDomainRef", did, where))

    for d in spec.workplace:
        if d.kind is DomainKind.LEXICAL and "interaction_target" in d.roles:
            found.add(Violation("LexicalInteractionTarget", d.id, "lexical domains are knowledge sources only"))
        if d.kind is DomainKind.LEXICAL and "verification_channel" in d.roles:
            found.add(Violation("LexicalVerificationChannel", d.id, "a verification channel must be causal or biddable"))

    for cap in spec.operational_context.capabilities:
        if kinds.get(cap.domain) is DomainKind.LEXICAL:
            found.add(Violation("CapabilityOnLexical", cap.tool, f"targets lexical domain {cap.domain}"))
        for p in cap.parameters:
            if p.ask is not None and kinds.get(p.ask) not in (None, DomainKind.BIDDABLE):
                found.add(Violation("AskNotBiddable", f"{cap.tool}.{p.name}", p.ask))
    for src in spec.operational_context.contexts:
        if src.domain in kinds and kinds[src.domain] is not DomainKind.LEXICAL:
            found.add(Violation("ContextNotLexical", src.domain))
    for cb in spec.evaluation.callbacks:
        if kinds.get(cb.channel) is DomainKind.LEXICAL:
            found.add(Violation("LexicalVerificationChannel", cb.channel, f"callback {cb.id}"))
    for cf in spec.evaluation.confirms:
        if cf.approver in kinds and kinds[cf.approver] is not DomainKind.BIDDABLE:
            found.add(Violation("ApproverNotBiddable", cf.approver, f"confirm {cf.id}"))
        if cf.approver == spec.scope.machine_id:
            found.add(Violation("SelfApproval", cf.approver, f"confirm {cf.id}"))
    if not spec.evaluation.callbacks and not spec.evaluation.confirms:
        found.add(Violation("NoEvaluationMethod", "evaluation"))

    negative = {p.key() for p in spec.scope.negative_constraints}
    for a in spec.scope.authorities:
        if a.key() in negative:
            found.add(Violation("PatternConflict", str(a), "pattern is both authorized and forbidden"))

    for pred in spec.mission.predicates:
        if not covering_channels(spec, pred.claim, pred.domain):
            found.add(Violation("UnverifiablePredicate", pred.id, "no callback or confirm can produce this claim"))

    return ValidationReport(tuple(sorted(found)))


# -- lint ---------------------------------------------------------------------------

DEVICE_VERBS = frozenset(
    {
        "stop", "start", "restart", "halt", "shut", "shutdown", "turn", "switch", "press",
        "push", "click", "open", "close", "run", "send", "call", "book", "reboot", "toggle",
    }
)


@dataclass(frozen=True, order=True)
class Advisory:
    code: str
    subject: str
    message: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.message}"


def _leading_word(goal: str) -> str:
    text = re.sub(r"^\s*\[[^\]]*\]\s*", "", goal)
    bracket = re.match(r"^\s*\[([^\]]*)\]", goal)
    words = re.findall(r"[a-zA-Z]+", text) or (re.findall(r"[a-zA-Z]+", bracket.group(1)) if bracket else [])
    return words[0].lower() if words else ""


def lint_ajd(spec: AjdSpec) -> list[Advisory]:
    out: list[Advisory] = []
    lead = _leading_word(spec.mission.goal_statement)
    if lead in DEVICE_VERBS:
        out.append(
            Advisory("HowNotWhat", "mission.goal_statement", f"goal starts with device verb {lead!r}; state the goal, not the action")
        )
    if not spec.scope.negative_constraints:
        out.append(Advisory("ScopeCreepRisk", "scope.negative_constraints", "no negative constraints declared"))
    memory = spec.operational_context.memory
    if memory is None or not memory.tags:
        out.append(Advisory("NoFlywheel", "operational_context.memory", "no memory retrieval filter; trajectories are never reused"))
    if not spec.operational_context.contexts:
        out.append(Advisory("NoContextSources", "operational_context.contexts", "no lexical knowledge sources injected"))
    return sorted(out)
