"""Callback and Confirm channels, and the certification step that turns their output into knowledge.

Callbacks verify facts (did the world change?), Confirms verify value (does a
party other than the executor accept the result?). Waiting is done by
stepping the world, so every channel operation advances simulated time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fnmatch import fnmatchcase
from typing import Any, Mapping, Sequence, Union

from .ajd import AjdSpec, CallbackMode, CallbackSpec, ConfirmSpec, DomainKind, covering_channels
from .errors import ApproverUnavailable, DomainFault, SelfApproval, UnknownVariable
from .facts import Fact, substitute
from .world import (
    ActionInstance,
    BidStatus,
    EventKind,
    Observation,
    Receipt,
    WorldState,
    affect,
    query_holds,
    step_world,
)

__all__ = [
    "CallbackEvent",
    "Timeout",
    "NotSatisfied",
    "Verdict",
    "Proposal",
    "ConfirmRecord",
    "Evidence",
    "Insufficient",
    "await_callback",
    "poll_implicit",
    "request_confirm",
    "certify",
    "certify_rejection",
    "render_query",
]


@dataclass(frozen=True)
class CallbackEvent:
    channel: str
    correlation: str
    mode: CallbackMode
    source: str
    tick: int
    values: Mapping[str, Any] = field(default_factory=dict)
    ref: str = ""  # world event seq for explicit callbacks, observation key for implicit ones

    @property
    def id(self) -> str:
        return f"{self.channel}@{self.tick}:{self.correlation}"


@dataclass(frozen=True)
class Timeout:
    channel: str
    correlation: str
    waited: int

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class NotSatisfied:
    domain: str
    tick: int

    def __bool__(self) -> bool:
        return False


class Verdict(str, Enum):
    APPROVED = "approved"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Proposal:
    kind: str
    fields: Mapping[str, Any]
    summary: str


@dataclass(frozen=True)
class ConfirmRecord:
    id: str
    channel: str
    approver: str
    executor: str
    digest: str
    summary: str
    verdict: Verdict
    requested: int
    tick: int
    reason: str = ""
    bid: str = ""
    correlation: str = ""
    answer: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.approver == self.executor:
            raise SelfApproval(f"{self.executor} cannot approve its own work")

    @property
    def approved(self) -> bool:
        return self.verdict is Verdict.APPROVED


@dataclass(frozen=True)
class Evidence:
    """One channel's support for exactly one claim.

    ``kind`` is ``callback`` or ``confirm``; open-loop runs also record
    ``assumed`` evidence, which carries only the action receipt.
    """

    kind: str
    claim: Fact
    channel: str
    record: Union[CallbackEvent, ConfirmRecord, Receipt]

    @property
    def ref(self) -> str:
        rec = self.record
        if isinstance(rec, Receipt):
            return f"receipt:{rec.action_id}:{rec.correlation}"
        return f"{self.kind}:{rec.id}"


@dataclass(frozen=True)
class Insufficient:
    claim: Fact
    missing: tuple[str, ...]

    def __bool__(self) -> bool:
        return False


def render_query(match: Mapping[str, Any], bindings: Mapping[str, Any]) -> dict[str, Any]:
    return {k: substitute(v, bindings) if isinstance(v, str) else v for k, v in match.items()}


def poll_implicit(world: WorldState, domain: str, predicate: Mapping[str, Any]) -> Observation | NotSatisfied:
    """Check a side-effect predicate against the world right now; never steps time."""
    try:
        obs = query_holds(world, domain, predicate)
    except UnknownVariable:
        obs = None
    return obs if obs is not None else NotSatisfied(domain, world.tick)


def _explicit_hit(world: WorldState, spec: CallbackSpec, correlation: str) -> CallbackEvent | None:
    pattern = str(spec.match.get("message", "*"))
    for ev in world.events_for(correlation):
        if ev.kind is not EventKind.CALLBACK_EMITTED:
            continue
        if spec.channel not in (ev.domain, ev.payload.get("source")):
            continue
        if fnmatchcase(str(ev.payload.get("message", "")), pattern):
            return CallbackEvent(
                spec.id, correlation, CallbackMode.EXPLICIT, str(ev.payload.get("source", ev.domain)), ev.tick,
                {"message": ev.payload.get("message")}, str(ev.seq),
            )
    return None


def await_callback(
    world: WorldState,
    spec: CallbackSpec,
    correlation: str,
    budget: int,
    bindings: Mapping[str, Any] | None = None,
) -> CallbackEvent | Timeout:
    """Wait up to ``budget`` ticks for the channel to report.

    Explicit channels scan the log for an emission carrying ``correlation``;
    implicit channels poll their predicate once per tick.
    """
    if budget <= 0:
        return Timeout(spec.id, correlation, 0)
    query = render_query(spec.match, bindings or {})
    start = world.tick
    while True:
        if spec.mode is CallbackMode.EXPLICIT:
            hit = _explicit_hit(world, spec, correlation)
        else:
            obs = poll_implicit(world, spec.channel, query)
            hit = None
            if obs:
                hit = CallbackEvent(
                    spec.id, correlation, CallbackMode.IMPLICIT, spec.channel, world.tick,
                    dict(obs.values), ",".join(sorted(obs.values)),
                )
        if hit is not None:
            return hit
        if world.tick - start >= budget:
            return Timeout(spec.id, correlation, world.tick - start)
        step_world(world)


def request_confirm(
    world: WorldState,
    approver: str,
    proposal: Proposal,
    executor: str,
    channel: str = "",
    budget: int = 5,
) -> ConfirmRecord:
    """Bid a proposal to an approver and wait for its scripted decision."""
    if approver == executor:
        raise SelfApproval(f"{executor} cannot approve its own work")
    state = world.domains.get(approver)
    if state is None or state.kind is not DomainKind.BIDDABLE:
        raise ApproverUnavailable(f"{approver} is not a biddable domain")
    params = dict(proposal.fields)
    params.update(kind=proposal.kind, executor=executor, summary=proposal.summary)
    try:
        receipt = affect(world, approver, ActionInstance("propose", approver, params, f"{channel or proposal.kind}"))
    except DomainFault as exc:
        raise ApproverUnavailable(str(exc)) from exc
    bid = world.bids[receipt.result["bid"]]
    requested = world.tick
    while bid.status is BidStatus.PENDING:
        if world.tick - requested >= budget:
            raise ApproverUnavailable(f"{approver} did not answer within {budget} ticks")
        step_world(world)
    return ConfirmRecord(
        id=bid.id,
        channel=channel,
        approver=approver,
        executor=executor,
        digest=bid.digest,
        summary=bid.summary,
        verdict=Verdict.APPROVED if bid.status is BidStatus.ACCEPTED else Verdict.REJECTED,
        requested=requested,
        tick=world.tick,
        reason=bid.reason,
        bid=bid.id,
        correlation=bid.correlation,
        answer=dict(bid.answer),
    )


def required_channels(ajd: AjdSpec, claim: Fact) -> tuple[str, ...]:
    return tuple(ch.id for ch in covering_channels(ajd, tuple(claim)))


def certify(
    evidence: Sequence[Evidence],
    claim: Fact,
    ajd: AjdSpec,
    cycle: int = 0,
    tags: frozenset[str] = frozenset(),
    holds: bool = True,
    supersedes: str | None = None,
):
    """Promote a claim to a verified fact once every channel covering it has contributed.

    Coverage is conjunctive. A Confirm counts only when it approved; a claim
    with no covering channel at all can never be certified.
    """
    from .ledger import VerifiedFact

    claim = Fact(*claim)
    needed = required_channels(ajd, claim)
    got = {
        e.channel
        for e in evidence
        if e.claim == claim
        and e.kind in ("callback", "confirm")
        and (not isinstance(e.record, ConfirmRecord) or e.record.approved)
    }
    missing = tuple(ch for ch in needed if ch not in got)
    if not needed or missing:
        return Insufficient(claim, missing or ("<no covering channel>",))
    refs = tuple(e.ref for e in evidence if e.claim == claim and e.channel in needed)
    return VerifiedFact(claim, refs, cycle, tags, holds=holds, supersedes=supersedes, _evidence=tuple(
        e for e in evidence if e.claim == claim and e.channel in needed
    ))


def certify_rejection(record: ConfirmRecord, claim: Fact, cycle: int = 0, tags: frozenset[str] = frozenset()):
    """Record a refusal as knowledge: ``(s, r, o)`` becomes ``(s, r_rejected, o)``."""
    from .ledger import VerifiedFact

    if record.approved:
        raise ValueError("only a rejected confirm can certify a failure")
    failure = Fact(claim[0], f"{claim[1]}_rejected", claim[2])
    ev = Evidence("confirm", failure, record.channel, record)
    return VerifiedFact(failure, (ev.ref,), cycle, tags, _evidence=(ev,))


def channel_spec(ajd: AjdSpec, channel_id: str) -> CallbackSpec | ConfirmSpec | None:
    for ch in ajd.evaluation.channels():
        if ch.id == channel_id:
            return ch
    return None
