from __future__ import annotations

import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apf.ajd import (
    CallbackMode,
    DomainKind,
    lint_ajd,
    load_ajd,
    parse_ajd,
    serialize_ajd,
    to_dict,
    validate_ajd,
)
from apf.errors import DanglingDomainRef, DuplicateDomainId, MalformedDocument, MissingComponent, UnknownDomainKind
from helpers import INDUSTRIAL_AJD, TRAVEL_AJD, load_json


def _doc(path=TRAVEL_AJD) -> dict:
    return copy.deepcopy(load_json(path))


def _parse(doc: dict):
    return parse_ajd(json.dumps(doc))


# -- parse -------------------------------------------------------------------------------


def test_travel_fixture_parses_with_goal_label_and_business_class_guard():
    spec = load_ajd(TRAVEL_AJD)
    assert spec.mission.goal_statement.startswith("[Minimize Administrative Effort]")
    labels = [str(n) for n in spec.scope.negative_constraints]
    assert "unauthorized Business class" in labels
    neg = spec.scope.negative_constraints[0]
    assert neg.matches("book_flight", "air_api", {"class": "business"})
    assert not neg.matches("book_flight", "air_api", {"class": "economy"})


def test_industrial_fixture_forbids_restart_and_confirms_with_site_manager():
    spec = load_ajd(INDUSTRIAL_AJD)
    assert spec.mission.goal_statement.startswith("[Optimize Safety and Uptime]")
    assert any(n.verb == "restart" and n.domain == "equipment" for n in spec.scope.negative_constraints)
    assert {c.approver for c in spec.evaluation.confirms} == {"site_manager"}
    assert spec.domain("site_manager").kind is DomainKind.BIDDABLE


def test_empty_predicates_is_missing_component():
    doc = _doc()
    doc["mission"]["predicates"] = []
    with pytest.raises(MissingComponent) as exc:
        _parse(doc)
    assert exc.value.name == "mission.predicates"


@pytest.mark.parametrize("component", ["mission", "workplace", "scope", "operational_context", "evaluation"])
def test_each_component_is_required(component):
    doc = _doc()
    del doc[component]
    with pytest.raises(MissingComponent) as exc:
        _parse(doc)
    assert exc.value.name == component


def test_syntax_error_is_malformed():
    with pytest.raises(MalformedDocument):
        parse_ajd(b"{not json")
    with pytest.raises(MalformedDocument):
        parse_ajd(b"\xff\xfe")


def test_unknown_domain_kind():
    doc = _doc()
    doc["workplace"][0]["kind"] = "telepathic"
    with pytest.raises(UnknownDomainKind) as exc:
        _parse(doc)
    assert exc.value.value == "telepathic"


def test_dangling_domain_ref():
    doc = _doc()
    doc["scope"]["authorities"].append({"verb": "book_car", "domain": "car_api"})
    with pytest.raises(DanglingDomainRef) as exc:
        _parse(doc)
    assert exc.value.domain_id == "car_api"


def test_duplicate_domain_id():
    doc = _doc()
    doc["workplace"].append(dict(doc["workplace"][0]))
    with pytest.raises(DuplicateDomainId):
        _parse(doc)


def test_parse_is_deterministic():
    raw = TRAVEL_AJD.read_bytes()
    assert parse_ajd(raw) == parse_ajd(raw)


# -- round trip --------------------------------------------------------------------------


@pytest.mark.parametrize("path", [TRAVEL_AJD, INDUSTRIAL_AJD])
def test_round_trip_fixpoint_on_fixtures(path):
    spec = load_ajd(path)
    once = serialize_ajd(spec)
    assert parse_ajd(once) == spec
    assert serialize_ajd(parse_ajd(once)) == once


_ident = st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=8).filter(lambda s: s[0] != "_")


@st.composite
def ajd_documents(draw):
    """Small but valid AJD documents: every predicate covered, refs resolved."""
    ids = draw(st.lists(_ident, min_size=2, max_size=6, unique=True))
    kinds = {i: draw(st.sampled_from(["causal", "biddable", "lexical"])) for i in ids}
    ids_approver = [i for i in ids if kinds[i] == "biddable"] or [ids[0]]
    kinds[ids_approver[0]] = "biddable"
    actionable = [i for i in ids if kinds[i] != "lexical"]
    lexical = [i for i in ids if kinds[i] == "lexical"]
    rels = draw(st.lists(_ident, min_size=1, max_size=4, unique=True))
    preds, callbacks, confirms = [], [], []
    for n, rel in enumerate(rels):
        target = draw(st.sampled_from(actionable))
        claim = ["{mission}", rel, "*"]
        preds.append({"id": f"p{n}", "domain": target, "claim": claim})
        if kinds[target] == "biddable":
            confirms.append({"id": f"cf{n}", "approver": target, "proposal_schema": [rel], "covers": [claim], "timeout": 3})
        else:
            mode = draw(st.sampled_from(["explicit", "implicit"]))
            match = {"message": f"{rel}:*"} if mode == "explicit" else {"var": rel, "present": True}
            callbacks.append({"id": f"cb{n}", "channel": target, "mode": mode, "match": match, "covers": [claim], "timeout": 2})
    caps = []
    for n, dom in enumerate(draw(st.lists(st.sampled_from(actionable), max_size=3))):
        params = {}
        if draw(st.booleans()):
            params["slot"] = {"mandatory": True, "values": ["a", "b"], "ground": {"relation": "has_slot"}}
        if draw(st.booleans()):
            params["opt"] = {"default": "x"}
        caps.append({"tool": f"tool{n}", "domain": dom, "parameters": params, "produces": [["{mission}", rels[0], "{correlation}"]]})
    auths = [{"verb": c["tool"], "domain": c["domain"]} for c in caps]
    negs = [{"verb": "forbidden", "domain": actionable[0], "params": {"x": {"in": ["1", "2"]}}}] if draw(st.booleans()) else []
    return {
        "meta": {"name": draw(_ident), "version": "1"},
        "mission": {"goal_statement": draw(st.text(max_size=30)), "predicates": preds},
        "workplace": [{"id": i, "kind": kinds[i], "roles": [], "description": ""} for i in ids],
        "scope": {"identity": "machine under test", "machine_id": "m_under_test", "authorities": auths, "negative_constraints": negs},
        "operational_context": {
            "contexts": [{"domain": d, "tags": ["t"]} for d in lexical],
            "memory": {"store": "trajectories", "tags": draw(st.lists(_ident, max_size=3, unique=True))},
            "capabilities": caps,
        },
        "evaluation": {"callbacks": callbacks, "confirms": confirms},
    }


@settings(max_examples=150, deadline=None)
@given(ajd_documents())
def test_round_trip_property(doc):
    spec = _parse(doc)
    assert parse_ajd(serialize_ajd(spec)) == spec
    assert serialize_ajd(parse_ajd(serialize_ajd(spec))) == serialize_ajd(spec)


@settings(max_examples=100, deadline=None)
@given(ajd_documents(), st.randoms(use_true_random=False))
def test_validation_is_order_insensitive(doc, rnd):
    shuffled = copy.deepcopy(doc)
    rnd.shuffle(shuffled["workplace"])
    assert validate_ajd(_parse(doc)) == validate_ajd(_parse(shuffled))
    assert validate_ajd(_parse(doc)) == validate_ajd(_parse(doc))


# -- validate ----------------------------------------------------------------------------


@pytest.mark.parametrize("path", [TRAVEL_AJD, INDUSTRIAL_AJD])
def test_bundled_fixtures_validate_clean(path):
    assert validate_ajd(load_ajd(path)).violations == ()


def test_uncovered_predicate_is_unverifiable():
    doc = _doc()
    doc["mission"]["predicates"].append({"id": "flight_booked", "domain": "air_api", "claim": ["{mission}", "flight_booked", "*"]})
    report = validate_ajd(_parse(doc))
    assert "UnverifiablePredicate" in report.codes()
    assert any(v.subject == "flight_booked" for v in report.violations)


def test_capability_on_lexical_domain():
    doc = _doc()
    doc["operational_context"]["capabilities"].append({"tool": "rewrite_policy", "domain": "policy_docs", "parameters": {}})
    report = validate_ajd(_parse(doc))
    assert [v.subject for v in report.violations if v.code == "CapabilityOnLexical"] == ["rewrite_policy"]


def test_confirm_by_the_machine_itself_is_flagged():
    doc = _doc(INDUSTRIAL_AJD)
    doc["workplace"].append({"id": "central_supervisor", "kind": "biddable", "roles": []})
    doc["evaluation"]["confirms"][0]["approver"] = "central_supervisor"
    assert "SelfApproval" in validate_ajd(_parse(doc)).codes()


def test_conflicting_authority_and_prohibition():
    doc = _doc()
    neg = dict(doc["scope"]["negative_constraints"][0])
    neg.pop("label", None)
    doc["scope"]["authorities"].append(neg)
    assert "PatternConflict" in validate_ajd(_parse(doc)).codes()


# -- lint --------------------------------------------------------------------------------


def test_lint_flags_missing_guardrails():
    doc = _doc()
    doc["scope"]["negative_constraints"] = []
    assert [a.code for a in lint_ajd(_parse(doc))] == ["ScopeCreepRisk"]


def test_lint_flags_how_phrasing():
    doc = _doc(INDUSTRIAL_AJD)
    doc["mission"]["goal_statement"] = "Stop equipment"
    assert "HowNotWhat" in [a.code for a in lint_ajd(_parse(doc))]


def test_lint_flags_missing_memory_filter():
    doc = _doc()
    del doc["operational_context"]["memory"]
    assert "NoFlywheel" in [a.code for a in lint_ajd(_parse(doc))]


def test_pristine_industrial_fixture_has_no_advisories():
    # independent inspection of the raw document for each rule's trigger condition
    raw = load_json(INDUSTRIAL_AJD)
    goal_words = raw["mission"]["goal_statement"].split("]", 1)[1].split()
    assert goal_words[0].lower() not in {"stop", "start", "restart", "halt", "turn", "switch", "book", "send"}
    assert raw["scope"]["negative_constraints"]
    assert raw["operational_context"]["memory"]["tags"]
    assert raw["operational_context"]["contexts"]
    assert lint_ajd(load_ajd(INDUSTRIAL_AJD)) == []


def test_callback_modes_parse():
    spec = load_ajd(TRAVEL_AJD)
    modes = {c.id: c.mode for c in spec.evaluation.callbacks}
    assert modes["cb_voucher"] is CallbackMode.IMPLICIT
    assert modes["cb_rail"] is CallbackMode.EXPLICIT


def test_to_dict_is_json_serializable():
    for path in (TRAVEL_AJD, INDUSTRIAL_AJD):
        assert json.loads(json.dumps(to_dict(load_ajd(path)))) == to_dict(load_ajd(path))


def test_mandatory_slot_count_matches_raw_fixture():
    raw = load_json(TRAVEL_AJD)
    names = {
        n for c in raw["operational_context"]["capabilities"] for n, p in c["parameters"].items() if p.get("mandatory")
    }
    assert set(load_ajd(TRAVEL_AJD).mandatory_slots) == names
    assert len(names) == 2
