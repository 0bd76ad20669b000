"""Dataset JSON ingestion, validation and serialization.

Format::

    {"item": {"id": ..., "attributes": {name: value}},
     "users": [{"id": ..., "attributes": {...}}],
     "profiles": [{"owner": ..., "item_constraints": ["cost <= 1000"],
                   "group_constraints": ["avg(age) < 25"]}],
     "company": {"group_constraints": [...]},
     "scores": {"default": 0.0, "entries": [["alice", "gems", 0.9]]}}

JSON numbers become numbers, ``YYYY-MM-DD`` strings become dates and all
other strings are text.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Any, Union

from .constraints import (
    COMPANY,
    AggregationPredicate,
    Aggregator,
    CompositeConstraint,
    ConstraintProfile,
    ValuePredicate,
)
from .dataset import Dataset
from .dsl import ConstraintSyntaxError, parse_group_constraint, parse_item_predicate, render
from .model import AttributeRecord, AttributeValue, Kind, ScoreTable, format_decimal, to_decimal


@dataclass(frozen=True)
class Diagnostic:
    location: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.location}: {self.severity}: {self.message}"


class DatasetError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


class _Collector:
    def __init__(self):
        self.diagnostics: list[Diagnostic] = []

    def error(self, location: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(location, message))

    def warn(self, location: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(location, message, "warning"))

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)


class _Pairs(list):
    """An object's key/value pairs with duplicates preserved, for duplicate-key detection."""


def _decode(text: str, collector: _Collector) -> Any:
    try:
        return json.loads(text, parse_float=Decimal, parse_int=Decimal, object_pairs_hook=_Pairs)
    except json.JSONDecodeError as e:
        collector.error(f"line {e.lineno} column {e.colno}", f"malformed JSON: {e.msg}")
        return None


def _object(raw: Any, where: str, c: _Collector) -> dict:
    if not isinstance(raw, _Pairs):
        c.error(where, f"expected an object, got {type(raw).__name__}")
        return {}
    out = {}
    for k, v in raw:
        if k in out:
            c.error(f"{where}.{k}", "duplicate key")
        out[k] = v
    return out


def _record(raw: Any, where: str, c: _Collector):
    obj = _object(raw, where, c)
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        c.error(f"{where}.id", "id must be a non-empty string")
        return None
    attrs = {}
    raw_attrs = obj.get("attributes", _Pairs())
    seen = set()
    if not isinstance(raw_attrs, _Pairs):
        c.error(f"{where}.attributes", "attributes must be an object")
        raw_attrs = _Pairs()
    for name, value in raw_attrs:
        loc = f"{where}.attributes.{name}"
        if name in seen:
            c.error(loc, "duplicate attribute")
            continue
        seen.add(name)
        try:
            attrs[name] = AttributeValue.infer(value)
        except (TypeError, ValueError) as e:
            c.error(loc, str(e))
    return AttributeRecord(rid, attrs)


def _strings(raw: Any, where: str, c: _Collector) -> list[str]:
    if raw is None:
        return []
    if not isinstance(raw, list) or isinstance(raw, _Pairs) or not all(isinstance(s, str) for s in raw):
        c.error(where, "expected a list of constraint strings")
        return []
    return raw


def _parse_constraints(texts: list[str], where: str, parse, c: _Collector) -> list:
    out = []
    for i, text in enumerate(texts):
        try:
            out.append(parse(text))
        except ConstraintSyntaxError as e:
            for d in e.diagnostics:
                loc = f"{where}[{i}] col {d.span.column}"
                (c.error if d.severity == "error" else c.warn)(loc, f"{d.message} in {text!r}")
    return out


def parse_dataset(text: str) -> Dataset:
    """Decode, parse and validate dataset JSON text. Raises DatasetError listing every problem."""
    c = _Collector()
    raw = _decode(text, c)
    if c.failed:
        raise DatasetError(c.diagnostics)
    top = _object(raw, "$", c)
    for key in top:
        if key not in ("item", "users", "profiles", "company", "scores"):
            c.warn(f"$.{key}", "unknown top-level key ignored")

    item = _record(top.get("item"), "item", c)

    raw_users = top.get("users")
    users = []
    if not isinstance(raw_users, list) or isinstance(raw_users, _Pairs):
        c.error("users", "users must be a list")
    else:
        if not raw_users:
            c.error("users", "population must be non-empty")
        for i, u in enumerate(raw_users):
            rec = _record(u, f"users[{i}]", c)
            if rec is not None:
                users.append(rec)

    user_ids = set()
    for i, u in enumerate(users):
        if u.entity_id in user_ids:
            c.error(f"users[{i}].id", f"duplicate user id {u.entity_id!r}")
        if u.entity_id == COMPANY:
            c.error(f"users[{i}].id", f"{COMPANY!r} is reserved for the company")
        user_ids.add(u.entity_id)

    profiles = {}
    raw_profiles = top.get("profiles", [])
    if not isinstance(raw_profiles, list) or isinstance(raw_profiles, _Pairs):
        c.error("profiles", "profiles must be a list")
        raw_profiles = []
    for i, rp in enumerate(raw_profiles):
        where = f"profiles[{i}]"
        obj = _object(rp, where, c)
        owner = obj.get("owner")
        if not isinstance(owner, str) or not owner:
            c.error(f"{where}.owner", "owner must be a non-empty string")
            continue
        if owner not in user_ids:
            c.error(f"{where}.owner", f"profile owner {owner!r} is not a known user")
        if owner in profiles:
            c.error(f"{where}.owner", f"duplicate profile for {owner!r}")
        items = _parse_constraints(_strings(obj.get("item_constraints"), f"{where}.item_constraints", c),
                                   f"{where}.item_constraints", parse_item_predicate, c)
        groups = _parse_constraints(_strings(obj.get("group_constraints"), f"{where}.group_constraints", c),
                                    f"{where}.group_constraints", parse_group_constraint, c)
        if owner != COMPANY:
            profiles[owner] = ConstraintProfile(owner, tuple(items), tuple(groups))

    raw_company = top.get("company")
    company = ConstraintProfile.company()
    if raw_company is not None:
        obj = _object(raw_company, "company", c)
        if obj.get("item_constraints"):
            c.error("company.item_constraints", "the company profile cannot have user-to-item constraints")
        groups = _parse_constraints(_strings(obj.get("group_constraints"), "company.group_constraints", c),
                                    "company.group_constraints", parse_group_constraint, c)
        company = ConstraintProfile.company(groups)

    scores = ScoreTable()
    raw_scores = top.get("scores")
    if raw_scores is None:
        c.error("scores", "scores are required")
    else:
        obj = _object(raw_scores, "scores", c)
        default = obj.get("default")
        if default is not None and not isinstance(default, Decimal):
            c.error("scores.default", "default must be a number or null")
            default = None
        entries = {}
        raw_entries = obj.get("entries", [])
        if not isinstance(raw_entries, list) or isinstance(raw_entries, _Pairs):
            c.error("scores.entries", "entries must be a list")
            raw_entries = []
        for i, e in enumerate(raw_entries):
            loc = f"scores.entries[{i}]"
            if not (isinstance(e, list) and not isinstance(e, _Pairs) and len(e) == 3
                    and isinstance(e[0], str) and isinstance(e[1], str) and isinstance(e[2], Decimal)):
                c.error(loc, "entry must be [user id, item id, number]")
                continue
            uid, iid, s = e
            if uid not in user_ids:
                c.error(loc, f"unknown user id {uid!r}")
            if item is not None and iid != item.entity_id:
                c.error(loc, f"unknown item id {iid!r}")
            if (uid, iid) in entries:
                c.error(loc, f"duplicate score for ({uid!r}, {iid!r})")
            entries[(uid, iid)] = s
        scores = ScoreTable(entries, default)

    if c.failed or item is None:
        raise DatasetError(c.diagnostics)
    dataset = Dataset(item, tuple(users), profiles, company, scores)
    for d in validate(dataset):
        c.diagnostics.append(d)
    if c.failed:
        raise DatasetError(c.diagnostics)
    return dataset


def load_dataset(path: Union[str, Path]) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetError([Diagnostic(str(path), f"cannot read dataset: {e}")]) from None
    return parse_dataset(text)


def _observed_kinds(records) -> dict[str, set[Kind]]:
    kinds: dict[str, set[Kind]] = defaultdict(set)
    for r in records:
        for name, v in r.attributes.items():
            kinds[name].add(v.kind)
    return kinds


def validate(dataset: Dataset) -> list[Diagnostic]:
    """Semantic checks that do not need solving: ids, kinds and coverage."""
    out: list[Diagnostic] = []
    if not dataset.users:
        out.append(Diagnostic("users", "population must be non-empty"))
    ids = [u.entity_id for u in dataset.users]
    if len(set(ids)) != len(ids):
        out.append(Diagnostic("users", "user ids must be unique"))
    known = set(ids)
    for owner, p in dataset.profiles.items():
        if owner not in known:
            out.append(Diagnostic(f"profiles.{owner}", f"profile owner {owner!r} is not a known user"))
    for (uid, iid) in dataset.scores.entries:
        if uid not in known:
            out.append(Diagnostic("scores", f"score for unknown user {uid!r}"))
        if iid != dataset.item.entity_id:
            out.append(Diagnostic("scores", f"score for unknown item {iid!r}"))
    if dataset.scores.default is None:
        for uid in ids:
            if (uid, dataset.item.entity_id) not in dataset.scores.entries:
                out.append(Diagnostic("scores", f"no score for user {uid!r} and no default"))

    item_kinds = {n: v.kind for n, v in dataset.item.attributes.items()}
    user_kinds = _observed_kinds(dataset.users)

    def check_value(pred, where, kinds_of):
        seen = kinds_of(pred.attribute)
        bad = sorted(k.value for k in seen if k is not pred.value.kind)
        if bad:
            out.append(Diagnostic(where, f"{render(pred)!r} compares {pred.value.kind.value} with "
                                         f"{pred.attribute} values of kind {', '.join(bad)}"))

    def check_group(c, where):
        if isinstance(c, ValuePredicate):
            check_value(c, where, lambda a: user_kinds.get(a, set()))
        elif isinstance(c, AggregationPredicate):
            if c.aggregator is not Aggregator.COUNT:
                bad = sorted(k.value for k in user_kinds.get(c.attribute, set()) if k is not Kind.NUMBER)
                if bad:
                    out.append(Diagnostic(where, f"{render(c)!r} aggregates {c.attribute} values of kind "
                                                 f"{', '.join(bad)}"))
            if c.attribute not in user_kinds:
                out.append(Diagnostic(where, f"no user has attribute {c.attribute!r}", "warning"))
        elif isinstance(c, CompositeConstraint):
            for inner in c.inner:
                check_group(inner, where)
        if isinstance(c, ValuePredicate) and c.attribute not in user_kinds:
            out.append(Diagnostic(where, f"no user has attribute {c.attribute!r}", "warning"))

    for owner, p in dataset.profiles.items():
        for i, pred in enumerate(p.item_constraints):
            where = f"profiles.{owner}.item_constraints[{i}]"
            check_value(pred, where, lambda a: {item_kinds[a]} if a in item_kinds else set())
            if pred.attribute not in item_kinds:
                out.append(Diagnostic(where, f"item has no attribute {pred.attribute!r}", "warning"))
        for i, gc in enumerate(p.group_constraints):
            check_group(gc, f"profiles.{owner}.group_constraints[{i}]")
    for i, gc in enumerate(dataset.company.group_constraints):
        check_group(gc, f"company.group_constraints[{i}]")
    return out


def json_number(d: Decimal) -> Union[int, float]:
    """Integral decimals become ints; others floats, whose shortest repr is exact up to 15 digits."""
    if d == d.to_integral_value():
        return int(d)
    return float(d)


def _json_value(v: AttributeValue):
    if v.kind is Kind.NUMBER:
        return json_number(v.payload)
    return v.to_json()


def dataset_to_dict(dataset: Dataset) -> dict:
    def rec(r: AttributeRecord) -> dict:
        return {"id": r.entity_id, "attributes": {n: _json_value(v) for n, v in r.attributes.items()}}

    profiles = []
    for u in dataset.users:
        p = dataset.profiles.get(u.entity_id)
        if p is None:
            continue
        profiles.append({
            "owner": p.owner,
            "item_constraints": [render(c) for c in p.item_constraints],
            "group_constraints": [render(c) for c in p.group_constraints],
        })
    entries = [[u, t, json_number(s)] for (u, t), s in dataset.scores.entries.items()]
    return {
        "item": rec(dataset.item),
        "users": [rec(u) for u in dataset.users],
        "profiles": profiles,
        "company": {"group_constraints": [render(c) for c in dataset.company.group_constraints]},
        "scores": {
            "default": None if dataset.scores.default is None else json_number(dataset.scores.default),
            "entries": entries,
        },
    }


def dumps_dataset(dataset: Dataset) -> str:
    return json.dumps(dataset_to_dict(dataset), indent=2) + "\n"


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_dataset(dataset), encoding="utf-8")


def decimal_text(x: Union[Decimal, int, str]) -> str:
    return format_decimal(to_decimal(x))
