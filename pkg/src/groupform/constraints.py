"""Constraint types and their evaluation against items and (partial) groups.

Three tiers are supported: user-to-item predicates, user-to-group constraints
(value, aggregation, composite) and group-to-group constraints owned by the
company. Grades are exact fractions in [0, 1]; a verdict is satisfied exactly
when its grade is 1.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .model import (
    AttributeRecord,
    AttributeValue,
    EvaluationError,
    Kind,
    Op,
    apply_op,
    compare,
    format_decimal,
    to_decimal,
)

COMPANY = "__company__"
IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
RESERVED = frozenset({"and", "substring"})

ONE = Fraction(1)
ZERO = Fraction(0)


def _check_attribute(name: str) -> None:
    if not isinstance(name, str) or not IDENT.match(name) or name in RESERVED:
        raise ValueError(f"invalid attribute name {name!r}")


@dataclass(frozen=True)
class _Predicate:
    attribute: str
    op: Op
    value: AttributeValue

    def __post_init__(self):
        _check_attribute(self.attribute)
        object.__setattr__(self, "op", Op(self.op))
        if not isinstance(self.value, AttributeValue):
            object.__setattr__(self, "value", AttributeValue.infer(self.value))
        if not self.op.applies_to(self.value.kind):
            raise ValueError(f"operator {self.op.symbol} does not apply to {self.value.kind.value} values")
        if self.value.kind is Kind.TEXT and '"' in self.value.payload:
            raise ValueError("text literals cannot contain double quotes")

    def holds_for(self, record: AttributeRecord) -> bool:
        """Absent attribute means the predicate is not satisfied."""
        actual = record.get(self.attribute)
        if actual is None:
            return False
        try:
            return compare(actual, self.op, self.value)
        except EvaluationError as e:
            raise e.with_constraint(self) from None

    def __str__(self) -> str:
        return f"{self.attribute} {self.op.symbol} {self.value}"


@dataclass(frozen=True)
class ItemPredicate(_Predicate):
    """A user's requirement on one attribute of the item."""


@dataclass(frozen=True)
class ValuePredicate(_Predicate):
    """A requirement every (other) group member must meet."""


class Aggregator(str, enum.Enum):
    AVG = "avg"
    SUM = "sum"
    MIN = "min"
    MAX = "max"
    COUNT = "count"


AGGREGATION_OPS = frozenset({Op.EQ, Op.LT, Op.LEQ, Op.GT, Op.GEQ})


@dataclass(frozen=True)
class AggregationPredicate:
    aggregator: Aggregator
    attribute: str
    op: Op
    value: Decimal

    def __post_init__(self):
        _check_attribute(self.attribute)
        object.__setattr__(self, "aggregator", Aggregator(self.aggregator))
        object.__setattr__(self, "op", Op(self.op))
        object.__setattr__(self, "value", to_decimal(self.value))
        if self.op not in AGGREGATION_OPS:
            raise ValueError(f"operator {self.op.symbol} is not allowed in aggregation constraints")

    def __str__(self) -> str:
        return f"{self.aggregator.value}({self.attribute}) {self.op.symbol} {format_decimal(self.value)}"


Conjunct = Union[ValuePredicate, AggregationPredicate]


@dataclass(frozen=True)
class CompositeConstraint:
    """``include at least min_count users with <conjunction>``."""

    min_count: int
    inner: tuple[Conjunct, ...]

    def __post_init__(self):
        if isinstance(self.min_count, bool) or not isinstance(self.min_count, int) or self.min_count < 1:
            raise ValueError(f"min_count must be a positive integer, got {self.min_count!r}")
        inner = tuple(self.inner)
        if not inner:
            raise ValueError("composite constraint needs at least one conjunct")
        for c in inner:
            if not isinstance(c, (ValuePredicate, AggregationPredicate)):
                raise TypeError(f"composite conjuncts must be value or aggregation predicates, got {c!r}")
        object.__setattr__(self, "inner", inner)

    def __str__(self) -> str:
        body = " and ".join(str(c) for c in self.inner)
        return f"include at least {self.min_count} users with {body}"


GroupConstraint = Union[ValuePredicate, AggregationPredicate, CompositeConstraint]


def constraint_kind(c: object) -> str:
    if isinstance(c, ItemPredicate):
        return "item"
    if isinstance(c, ValuePredicate):
        return "value"
    if isinstance(c, AggregationPredicate):
        return "aggregation"
    if isinstance(c, CompositeConstraint):
        return "composite"
    raise TypeError(f"not a constraint: {c!r}")


@dataclass(frozen=True)
class ConstraintProfile:
    owner: str
    item_constraints: tuple[ItemPredicate, ...] = ()
    group_constraints: tuple[GroupConstraint, ...] = ()

    def __post_init__(self):
        if not self.owner:
            raise ValueError("profile owner must be non-empty")
        object.__setattr__(self, "item_constraints", tuple(self.item_constraints))
        object.__setattr__(self, "group_constraints", tuple(self.group_constraints))
        if self.owner == COMPANY and self.item_constraints:
            raise ValueError("the company profile cannot carry user-to-item constraints")
        for c in self.item_constraints:
            if not isinstance(c, ItemPredicate):
                raise TypeError(f"expected ItemPredicate, got {c!r}")
        for c in self.group_constraints:
            if not isinstance(c, (ValuePredicate, AggregationPredicate, CompositeConstraint)):
                raise TypeError(f"expected a group constraint, got {c!r}")

    @classmethod
    def company(cls, group_constraints: Iterable[GroupConstraint] = ()) -> "ConstraintProfile":
        return cls(COMPANY, (), tuple(group_constraints))

    @property
    def is_company(self) -> bool:
        return self.owner == COMPANY


@dataclass(frozen=True)
class Verdict:
    constraint: GroupConstraint
    owner: str
    satisfied: bool
    grade: Fraction


@dataclass(frozen=True)
class SatisfactionReport:
    verdicts: tuple[Verdict, ...] = ()

    @property
    def satisfied_count(self) -> int:
        return sum(1 for v in self.verdicts if v.satisfied)

    @property
    def graded_total(self) -> Fraction:
        return sum((v.grade for v in self.verdicts), ZERO)

    @property
    def all_satisfied(self) -> bool:
        return all(v.satisfied for v in self.verdicts)

    @property
    def violated(self) -> tuple[Verdict, ...]:
        return tuple(v for v in self.verdicts if not v.satisfied)

    def __add__(self, other: "SatisfactionReport") -> "SatisfactionReport":
        return SatisfactionReport(self.verdicts + other.verdicts)


# ---------------------------------------------------------------------------
# user-to-item

def eval_user_to_item(profile: ConstraintProfile, item: AttributeRecord) -> bool:
    return all(p.holds_for(item) for p in profile.item_constraints)


# ---------------------------------------------------------------------------
# value and aggregation predicates

def _value_fraction(pred: ValuePredicate, members: Sequence[AttributeRecord]) -> tuple[bool, Fraction]:
    if not members:
        return True, ONE
    hits = sum(1 for m in members if pred.holds_for(m))
    return hits == len(members), Fraction(hits, len(members))


def eval_value_predicate(pred: ValuePredicate, members: Sequence[AttributeRecord]) -> tuple[bool, Fraction]:
    """Member-wise check. Returns (all satisfy, fraction satisfying)."""
    if not members:
        raise ValueError("members must be non-empty")
    return _value_fraction(pred, members)


def _numbers(pred: AggregationPredicate, members: Iterable[AttributeRecord]) -> list[Decimal]:
    out = []
    for m in members:
        v = m.get(pred.attribute)
        if v is None:
            continue
        if v.kind is not Kind.NUMBER:
            raise EvaluationError(
                f"{pred.aggregator.value}() needs numeric values but {m.entity_id}.{pred.attribute} "
                f"is {v.kind.value}", constraint=pred, lhs_kind=v.kind.value, rhs_kind="number")
        out.append(v.payload)
    return out


def _aggregate_holds(pred: AggregationPredicate, values: Sequence[Decimal]) -> bool:
    """Apply the predicate to already-extracted numeric values (non-count aggregators)."""
    if not values:
        return False
    agg = pred.aggregator
    if agg is Aggregator.AVG:
        # avg op v  <=>  sum op v*n, exact with no division
        return apply_op(sum(values), pred.op, pred.value * len(values))
    if agg is Aggregator.SUM:
        return apply_op(sum(values), pred.op, pred.value)
    if agg is Aggregator.MIN:
        return apply_op(min(values), pred.op, pred.value)
    return apply_op(max(values), pred.op, pred.value)


def _defined_count(pred: AggregationPredicate, members: Iterable[AttributeRecord]) -> int:
    return sum(1 for m in members if m.get(pred.attribute) is not None)


def eval_aggregation_predicate(pred: AggregationPredicate, members: Sequence[AttributeRecord]) -> bool:
    if not members:
        raise ValueError("members must be non-empty")
    if pred.aggregator is Aggregator.COUNT:
        return apply_op(Decimal(_defined_count(pred, members)), pred.op, pred.value)
    return _aggregate_holds(pred, _numbers(pred, members))


# ---------------------------------------------------------------------------
# composite constraints

def _extremal_witness(pred: AggregationPredicate, members: Sequence[AttributeRecord], size: int) -> Optional[bool]:
    """Decide whether some size-``size`` subset of members satisfies pred without enumeration.

    Members lacking the attribute may pad a subset; a subset of j defined values
    and size-j padding members is possible for j in [max(0, size - undefined), min(size, defined)].
    Returns None when the operator is not monotone (eq on anything but count).
    """
    defined = [m for m in members if m.get(pred.attribute) is not None]
    n_undef = len(members) - len(defined)
    j_lo = max(0, size - n_undef)
    j_hi = min(size, len(defined))
    if j_lo > j_hi:
        return False
    op = pred.op
    if pred.aggregator is Aggregator.COUNT:
        return any(apply_op(Decimal(j), op, pred.value) for j in range(j_lo, j_hi + 1))
    if op is Op.EQ:
        return None
    values = sorted(_numbers(pred, defined))
    j_lo = max(j_lo, 1)  # non-count aggregates over nothing are unsatisfied
    if j_lo > j_hi:
        return False
    upward = op in (Op.GT, Op.GEQ)
    agg = pred.aggregator
    if agg is Aggregator.SUM:
        # best sum over all feasible j: prefix sums of the sorted values
        best = None
        ordered = values[::-1] if upward else values
        running = sum(ordered[:j_lo])
        for j in range(j_lo, j_hi + 1):
            if j > j_lo:
                running += ordered[j - 1]
            if best is None or (running > best if upward else running < best):
                best = running
        return apply_op(best, op, pred.value)
    if agg is Aggregator.AVG:
        # the mean of the top (bottom) j values only gets worse as j grows
        chosen = values[::-1][:j_lo] if upward else values[:j_lo]
        return apply_op(sum(chosen), op, pred.value * j_lo)
    if agg is Aggregator.MAX:
        best = values[-1] if upward else values[j_lo - 1]
        return apply_op(best, op, pred.value)
    best = values[-j_lo] if upward else values[0]
    return apply_op(best, op, pred.value)


def _subset_satisfies(aggs: Sequence[AggregationPredicate], subset: Sequence[AttributeRecord]) -> bool:
    for pred in aggs:
        if pred.aggregator is Aggregator.COUNT:
            if not apply_op(Decimal(_defined_count(pred, subset)), pred.op, pred.value):
                return False
        elif not _aggregate_holds(pred, _numbers(pred, subset)):
            return False
    return True


def eval_composite(constraint: CompositeConstraint, members: Sequence[AttributeRecord]) -> tuple[bool, Fraction]:
    """Does some subset of exactly ``min_count`` members satisfy every conjunct?

    Returns (satisfied, grade). Value-only conjunctions get partial credit
    min(1, qualifying / min_count); anything with an aggregation is graded 0/1.
    """
    l = constraint.min_count
    values = [c for c in constraint.inner if isinstance(c, ValuePredicate)]
    aggs = [c for c in constraint.inner if isinstance(c, AggregationPredicate)]
    qualifying = [m for m in members if all(p.holds_for(m) for p in values)]
    if not aggs:
        ok = len(qualifying) >= l
        return ok, min(ONE, Fraction(len(qualifying), l))
    if len(qualifying) < l:
        # still surface kind errors deterministically
        for pred in aggs:
            if pred.aggregator is not Aggregator.COUNT:
                _numbers(pred, qualifying)
        return False, ZERO
    if len(aggs) == 1:
        verdict = _extremal_witness(aggs[0], qualifying, l)
        if verdict is not None:
            return verdict, ONE if verdict else ZERO
    for pred in aggs:
        if pred.aggregator is not Aggregator.COUNT:
            _numbers(pred, qualifying)
    for subset in itertools.combinations(qualifying, l):
        if _subset_satisfies(aggs, subset):
            return True, ONE
    return False, ZERO


def evaluate_constraint(c: GroupConstraint, members: Sequence[AttributeRecord],
                        value_members: Sequence[AttributeRecord]) -> tuple[bool, Fraction]:
    """Evaluate one group constraint; value predicates range over ``value_members``."""
    if isinstance(c, ValuePredicate):
        return _value_fraction(c, value_members)
    if isinstance(c, AggregationPredicate):
        ok = eval_aggregation_predicate(c, members)
        return ok, ONE if ok else ZERO
    return eval_composite(c, members)


# ---------------------------------------------------------------------------
# group-level evaluation

def eval_user_to_group(profile: ConstraintProfile, subject: str, group: Sequence[AttributeRecord],
                       include_self: bool = False) -> SatisfactionReport:
    """Evaluate a user's group constraints.

    Value predicates cover the other members unless ``include_self``;
    aggregation and composite constraints always cover the whole group.
    """
    if not any(m.entity_id == subject for m in group):
        raise ValueError(f"subject {subject!r} is not a member of the group")
    others = group if include_self else [m for m in group if m.entity_id != subject]
    verdicts = []
    for c in profile.group_constraints:
        ok, grade = evaluate_constraint(c, group, others)
        verdicts.append(Verdict(c, profile.owner, ok, grade))
    return SatisfactionReport(tuple(verdicts))


def eval_group_to_group(company: ConstraintProfile, group: Sequence[AttributeRecord]) -> SatisfactionReport:
    if company.item_constraints:
        raise ValueError("company profile cannot have item constraints")
    if not group:
        raise ValueError("group must be non-empty")
    verdicts = []
    for c in company.group_constraints:
        ok, grade = evaluate_constraint(c, group, group)
        verdicts.append(Verdict(c, company.owner, ok, grade))
    return SatisfactionReport(tuple(verdicts))


def group_report(group: Sequence[AttributeRecord], profiles: Mapping[str, ConstraintProfile],
                 company: Optional[ConstraintProfile], include_self: bool = False) -> SatisfactionReport:
    """All user-to-group constraints of every member, then the company's, on one group."""
    verdicts: list[Verdict] = []
    for m in group:
        profile = profiles.get(m.entity_id)
        if profile is not None and profile.group_constraints:
            verdicts.extend(eval_user_to_group(profile, m.entity_id, group, include_self).verdicts)
    if company is not None and company.group_constraints:
        verdicts.extend(eval_group_to_group(company, group).verdicts)
    return SatisfactionReport(tuple(verdicts))


def resolve_members(ids: Sequence[str], users: Mapping[str, AttributeRecord]) -> list[AttributeRecord]:
    if not ids:
        raise ValueError("group must be non-empty")
    if len(set(ids)) != len(ids):
        raise ValueError(f"group members must be distinct: {list(ids)}")
    out = []
    for uid in ids:
        try:
            out.append(users[uid])
        except KeyError:
            raise KeyError(f"unknown user id {uid!r}") from None
    return out


def is_satisfiable_group(item: AttributeRecord, group: Sequence[str],
                         profiles: Mapping[str, ConstraintProfile], users: Mapping[str, AttributeRecord],
                         company: Optional[ConstraintProfile] = None, include_self: bool = False) -> bool:
    members = resolve_members(group, users)
    empty = ConstraintProfile("_")
    for uid in group:
        if not eval_user_to_item(profiles.get(uid, empty), item):
            return False
    for m in members:
        profile = profiles.get(m.entity_id)
        if profile is not None and not eval_user_to_group(profile, m.entity_id, members, include_self).all_satisfied:
            return False
    if company is not None and not eval_group_to_group(company, members).all_satisfied:
        return False
    return True
