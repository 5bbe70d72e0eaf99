from __future__ import annotations

import json
from dataclasses import replace
from fnmatch import fnmatchcase

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apf.avr import check_satisfaction, detect_mismatch, run_mission, uncertainty
from apf.facts import Fact
from apf.ledger import KnowledgeDelta, KnowledgeLedger, VerifiedFact, export_ledger, refine
from apf.performer import UNBOUND, ExecutionSpec, SlotBinding
from apf.scenarios import build_scenario, make_planner
from apf.verification import CallbackEvent, Evidence
from apf.ajd import CallbackMode
from apf.world import EventKind, FaultSpec
from helpers import TRAVEL_AJD, FuzzPlanner, governance_violations, hoare_violations, load_json, monotone


def _run(name="travel", planner="rule", seed=42, budget=10, faults=None, verify=True, ledger=None):
    world, ajd = build_scenario(name, seed, faults)
    report = run_mission(ajd, world, make_planner(planner, world.fixture), seed, budget, ledger=ledger, verify=verify)
    return world, ajd, report


def _certified(claim: Fact) -> VerifiedFact:
    ev = Evidence("callback", claim, "cb", CallbackEvent("cb", "c0", CallbackMode.EXPLICIT, "d", 0))
    return VerifiedFact(claim, (ev.ref,), _evidence=(ev,))


def _oracle_curve(ledger_text: str, raw_ajd: dict, mission: str, unbound_per_cycle: list[int]) -> list[int]:
    """Recompute U per cycle from the exported ledger and the raw contract alone."""
    preds = [p["claim"] for p in raw_ajd["mission"]["predicates"]]
    slots = {n for c in raw_ajd["operational_context"]["capabilities"] for n, p in c["parameters"].items() if p.get("mandatory")}
    facts = [json.loads(l) for l in ledger_text.splitlines() if '"type": "fact"' in l]

    def unmet(upto: int) -> int:
        held = [f["claim"] for f in facts if f["cycle"] <= upto and f["holds"]]
        def hit(p):
            want = [mission if x == "{mission}" else x for x in p]
            return any(all(fnmatchcase(a, b) for a, b in zip(c, want)) for c in held)
        return sum(1 for p in preds if not hit(p))

    curve = [unmet(0) + len(slots)]
    for t, unbound in enumerate(unbound_per_cycle, 1):
        curve.append(unmet(t) + unbound)
    return curve


# -- reference runs ----------------------------------------------------------------------


def test_travel_reference_trace():
    world, ajd, report = _run()
    assert str(report.verdict) == "Satisfied at t=3"
    oracle = _oracle_curve(export_ledger(report.ledger), load_json(TRAVEL_AJD), "m1", [len(c.spec.unbound()) for c in report.cycles])
    assert report.curve == oracle == [6, 4, 1, 0]
    assert all(a > b for a, b in zip(report.curve, report.curve[1:]))
    assert hoare_violations(report, ajd) == []
    assert governance_violations(report, world) == []


def test_zero_budget_records_only_u0():
    world, ajd, report = _run(budget=0)
    assert report.verdict.kind == "Exhausted"
    assert str(report.verdict) == "Exhausted(budget T=0)"
    assert report.cycles == []
    assert report.curve == [6]
    assert world.event_log == [e for e in world.event_log if e.kind is EventKind.TRIGGER_RAISED]


def test_industrial_rule_run():
    world, ajd, report = _run("industrial")
    assert report.satisfied
    assert monotone(report.curve) and report.curve[-1] == 0
    assert hoare_violations(report, ajd) == []
    reflex = next(world.events(EventKind.REFLEX_ACTION)).tick
    asked = min(e.tick for e in world.events(EventKind.BID_ENQUEUED) if e.domain == "site_manager")
    assert reflex < asked
    assert all(c.tick % world.slow_period == 0 for c in report.cycles)


def test_clarification_is_a_confirm_round_trip():
    world, ajd, report = _run()
    first = report.cycles[0]
    assert first.unbound == ("hotel_brand",)
    assert not first.receipts
    assert [q.value for q in first.clarifications] == ["lotte"]
    assert first.confirm_round_trips == 1
    assert report.confirm_round_trips == 2


def test_open_loop_is_flagged_by_mismatch_audit():
    world, ajd, report = _run(verify=False, faults=[FaultSpec("VoucherDrop", 0)])
    assert report.open_loop
    assert check_satisfaction(ajd, report.ledger, report.mission)
    claims = {m.claim.relation for m in report.mismatches}
    assert "booking_complete" in claims
    assert report.mismatches == detect_mismatch(world, report.ledger, ajd)


def test_closed_loop_with_same_fault_never_claims_falsely():
    world, ajd, report = _run(faults=[FaultSpec("VoucherDrop", 0)])
    assert report.verdict.kind == "Exhausted"
    assert detect_mismatch(world, report.ledger, ajd) == []
    assert any(c.timeouts for c in report.cycles)
    assert hoare_violations(report, ajd) == []


def test_closed_loop_retries_a_single_drop():
    world, ajd, report = _run(faults=[FaultSpec("VoucherDrop", 0, {"count": 1})])
    assert report.satisfied
    assert any(s.verb == "resend_voucher" for c in report.cycles for s in c.spec.steps)
    assert detect_mismatch(world, report.ledger, ajd) == []


def test_timeout_never_produces_knowledge_for_its_correlation():
    world, ajd, report = _run(faults=[FaultSpec("VoucherDrop", 0)])
    timed_out = {(t.channel, t.correlation) for c in report.cycles for t in c.timeouts}
    assert timed_out
    for f in report.ledger.facts:
        for ref in f.evidence:
            for channel, corr in timed_out:
                assert not (ref.startswith(f"callback:{channel}@") and ref.endswith(f":{corr}"))


def test_early_stop_means_no_later_effects():
    world, ajd, report = _run()
    executed = {r.action_id for c in report.cycles for r in c.receipts}
    applied = {e.payload["action"] for e in world.events(EventKind.EFFECT_APPLIED)}
    assert applied <= executed
    last = report.cycles[-1].tick
    assert all(e.tick <= world.tick for e in world.events(EventKind.EFFECT_APPLIED))
    assert max(e.tick for e in world.events(EventKind.EFFECT_APPLIED)) <= last + 1


def test_guardrail_block_ends_in_blocked_verdict():
    world, ajd = build_scenario("travel", 42)
    report = run_mission(ajd, world, FuzzPlanner(1, force=True), 42, 3)
    assert report.verdict.kind == "Blocked"
    assert all(not c.receipts for c in report.cycles)
    assert not list(world.events(EventKind.EFFECT_APPLIED))


def test_unplannable_event_is_blocked():
    world, ajd = build_scenario("travel", 42)
    fixture = world.fixture
    world.triggers[0] = replace(world.triggers[0], payload="order me a pizza")
    report = run_mission(ajd, world, make_planner("rule", fixture), 42, 5)
    assert report.verdict.kind == "Blocked"
    assert report.verdict.t == 1


def test_rejected_diagnosis_becomes_failure_knowledge():
    for seed in range(40):
        world, ajd, report = _run("industrial", "stochastic", seed, 20)
        rejected = [f for f in report.ledger.facts if f.claim.relation == "root_cause_rejected"]
        if rejected:
            break
    else:
        pytest.fail("no seed picked a wrong diagnosis")
    assert report.satisfied
    assert hoare_violations(report, ajd) == []
    later = [c for c in report.cycles if c.t > rejected[0].cycle]
    assert all(s.params.get("root_cause") != rejected[0].claim.object for c in later for s in c.spec.steps)


def test_flywheel_second_run_is_cheaper():
    _, ajd, first = _run()
    _, _, second = _run(ledger=first.ledger)
    assert second.mission == "m2"
    assert second.satisfied
    assert second.confirm_round_trips < first.confirm_round_trips or len(second.cycles) < len(first.cycles)


# -- measurement -------------------------------------------------------------------------


def test_fresh_travel_uncertainty_counts_fixture_fields():
    raw = load_json(TRAVEL_AJD)
    n_pred = len(raw["mission"]["predicates"])
    n_slot = len({n for c in raw["operational_context"]["capabilities"] for n, p in c["parameters"].items() if p.get("mandatory")})
    _, ajd = build_scenario("travel", 42)
    assert uncertainty(ajd, KnowledgeLedger()) == n_pred + n_slot == 6


def _travel_ledger(*relations: str) -> KnowledgeLedger:
    facts = tuple(_certified(Fact("m1", r, "x")) for r in relations)
    return refine(KnowledgeLedger(), KnowledgeDelta(facts, 1))


def test_fully_satisfied_ledger_has_zero_uncertainty():
    _, ajd = build_scenario("travel", 42)
    ledger = _travel_ledger("rail_booked", "hotel_booked", "voucher_received", "booking_complete")
    assert check_satisfaction(ajd, ledger)
    assert uncertainty(ajd, ledger) == 0


def test_mid_run_uncertainty_is_remaining_predicates():
    _, ajd = build_scenario("travel", 42)
    ledger = _travel_ledger("rail_booked")
    spec = ExecutionSpec("s", 2, (), {"depart_date": SlotBinding("d", ("r",)), "hotel_brand": SlotBinding("lotte", ("r",))})
    assert uncertainty(ajd, ledger, spec) == 3
    assert uncertainty(ajd, ledger, replace(spec, mandatory_slots={"depart_date": UNBOUND})) == 4


def test_empty_ledger_leaves_every_predicate_unmet():
    _, ajd = build_scenario("travel", 42)
    sat = check_satisfaction(ajd, KnowledgeLedger())
    assert not sat
    assert sat.unmet == [p.id for p in ajd.mission.predicates]


def test_superseding_negation_unmeets_equipment_safe():
    _, ajd = build_scenario("industrial", 42)
    ledger = refine(KnowledgeLedger(), KnowledgeDelta(tuple(_certified(Fact("m1", r, "x")) for r in ("equipment_safe", "root_cause", "parts_ordered")), 1))
    assert check_satisfaction(ajd, ledger)
    negation = replace(_certified(Fact("m1", "equipment_safe", "x")), holds=False, supersedes="K1")
    ledger = refine(ledger, KnowledgeDelta((negation,), 2))
    sat = check_satisfaction(ajd, ledger)
    assert not sat
    assert sat.unmet == ["equipment_safe"]


def test_fresh_world_has_no_mismatch():
    world, ajd = build_scenario("travel", 42)
    assert detect_mismatch(world, KnowledgeLedger(), ajd) == []


# -- properties over seeds ---------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["travel", "industrial"]), st.integers(0, 2**31 - 1))
def test_closed_loop_runs_keep_every_invariant(name, seed):
    world, ajd, report = _run(name, "stochastic", seed, 20)
    assert hoare_violations(report, ajd) == []
    assert governance_violations(report, world) == []
    assert monotone(report.curve)
    if report.satisfied:
        assert detect_mismatch(world, report.ledger, ajd) == []
        assert report.curve[-1] == 0


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 2**31 - 1),
    st.lists(
        st.sampled_from(
            [
                FaultSpec("VoucherDrop", 2, {"count": 1}),
                FaultSpec("PriceSurge", 1, {"factor": 1.2}),
                FaultSpec("DomainOutage", 2, {"domain": "rail_api", "duration": 3}),
                FaultSpec("ApproverReject", 1, {"domain": "user"}),
                FaultSpec("DomainOutage", 1, {"domain": "user", "duration": 2}),
            ]
        ),
        max_size=3,
    ),
)
def test_faulty_travel_runs_never_claim_falsely(seed, faults):
    world, ajd, report = _run("travel", "stochastic", seed, 12, faults=faults)
    assert hoare_violations(report, ajd) == []
    assert governance_violations(report, world) == []
    if report.satisfied:
        assert detect_mismatch(world, report.ledger, ajd) == []
