import json
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupform.io import DatasetError, dumps_dataset, json_number, load_dataset, parse_dataset, validate
from groupform.model import AttributeValue
from groupform.synth import generate_synthetic

BASE = {
    "item": {"id": "t", "attributes": {"cost": 900}},
    "users": [{"id": "a", "attributes": {"age": 30}}, {"id": "b", "attributes": {"age": 40}}],
    "profiles": [],
    "scores": {"default": 0.0, "entries": [["a", "t", 0.5]]},
}


def doc(**changes):
    d = json.loads(json.dumps(BASE))
    d.update(changes)
    return json.dumps(d)


def errors(text):
    with pytest.raises(DatasetError) as info:
        parse_dataset(text)
    return [(d.location, d.message) for d in info.value.diagnostics if d.severity == "error"]


def test_gems_fixture(gems):
    assert gems.item.attributes["cost"] == AttributeValue.number(900)
    assert gems.user_map["alice"].attributes["age"] == AttributeValue.number(34)
    assert gems.score("alice") == Decimal("0.9")
    assert [d for d in validate(gems) if d.severity == "error"] == []


def test_ghost_owner():
    errs = errors(doc(profiles=[{"owner": "ghost", "group_constraints": ["age > 3"]}]))
    assert ("profiles[0].owner", "profile owner 'ghost' is not a known user") in errs


def test_empty_population():
    errs = errors(doc(users=[], scores={"entries": []}))
    assert ("users", "population must be non-empty") in errs


def test_malformed_json_location():
    (loc, msg), = errors('{"item": {"id": "t",\n  "attributes": }}')
    assert loc.startswith("line 2")


def test_duplicate_keys_and_ids():
    errs = errors('{"item": {"id": "t", "attributes": {"cost": 1, "cost": 2}}, "users": [], "scores": {}}')
    assert any("duplicate" in m for _, m in errs)
    errs = errors(doc(users=[{"id": "a", "attributes": {}}, {"id": "a", "attributes": {}}]))
    assert any("duplicate user id" in m for _, m in errs)


def test_dsl_error_is_located():
    errs = errors(doc(profiles=[{"owner": "a", "group_constraints": ["age > 1", "avg(age) != 3"]}]))
    (loc, msg), = errs
    assert loc.startswith("profiles[0].group_constraints[1]") and "not allowed" in msg


def test_semantic_checks():
    errs = errors(doc(profiles=[{"owner": "a", "group_constraints": ['age = "old"']}]))
    assert any("kind" in m for _, m in errs)
    errs = errors(doc(users=[{"id": "a", "attributes": {"age": "x"}}],
                      profiles=[{"owner": "a", "group_constraints": ["avg(age) > 3"]}]))
    assert any("aggregates age values of kind text" in m for _, m in errs)
    errs = errors(doc(scores={"entries": [["a", "t", 0.5]]}))
    assert any("'b'" in m for _, m in errs)
    errs = errors(doc(company={"item_constraints": ["cost < 3"]}))
    assert any(loc == "company.item_constraints" for loc, _ in errs)


def test_unused_attribute_is_a_warning():
    ds = parse_dataset(doc(profiles=[{"owner": "a", "group_constraints": ["height > 3"]}]))
    warnings = [d for d in validate(ds) if d.severity == "warning"]
    assert any("height" in d.message for d in warnings)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="cannot read"):
        load_dataset(tmp_path / "nope.json")


def test_json_number():
    assert json_number(Decimal("900")) == 900 and isinstance(json_number(Decimal("900.0")), int)
    assert json_number(Decimal("0.9")) == 0.9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 30), st.sampled_from(["uniform", "normal", "ties"]))
def test_dataset_round_trip(seed, n, dist):
    ds = generate_synthetic(n, seed=seed, density=0.7, score_distribution=dist)
    text = dumps_dataset(ds)
    again = parse_dataset(text)
    assert again.users == ds.users and again.item == ds.item
    assert again.profiles == ds.profiles and again.company == ds.company
    assert again.scores == ds.scores
    assert dumps_dataset(again) == text
