"""Attribute records, typed values, comparison semantics and score lookup."""

from __future__ import annotations

import datetime as dt
import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from types import MappingProxyType
from typing import Mapping, Optional, Union

Payload = Union[str, Decimal, dt.date]

ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


class EvaluationError(Exception):
    """A predicate could not be evaluated (kind mismatch, inapplicable operator)."""

    def __init__(self, message: str, *, constraint: object = None,
                 lhs_kind: str | None = None, rhs_kind: str | None = None):
        self.constraint = constraint
        self.lhs_kind = lhs_kind
        self.rhs_kind = rhs_kind
        super().__init__(message)

    def with_constraint(self, constraint: object) -> "EvaluationError":
        if self.constraint is not None:
            return self
        return EvaluationError(f"{self} (in constraint {constraint})", constraint=constraint,
                               lhs_kind=self.lhs_kind, rhs_kind=self.rhs_kind)


class MissingScoreError(KeyError):
    def __init__(self, user: str, item: str):
        self.user = user
        self.item = item
        super().__init__(f"no score for user {user!r} and item {item!r}")


class Kind(str, enum.Enum):
    TEXT = "text"
    NUMBER = "number"
    DATE = "date"


def to_decimal(x: object) -> Decimal:
    """Convert ints, decimal strings, floats (via repr) or Decimals to a finite Decimal."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, float):
        x = repr(x)
    try:
        d = x if isinstance(x, Decimal) else Decimal(x)  # type: ignore[arg-type]
    except (InvalidOperation, TypeError, ValueError):
        raise ValueError(f"not a decimal number: {x!r}") from None
    if not d.is_finite():
        raise ValueError(f"number must be finite, got {x!r}")
    return d


def format_decimal(d: Decimal) -> str:
    """Plain positional notation, no exponent, no trailing zeros beyond the integer part."""
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0"
    return s


@dataclass(frozen=True)
class AttributeValue:
    kind: Kind
    payload: Payload

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.NUMBER:
            object.__setattr__(self, "payload", to_decimal(self.payload))
        elif kind is Kind.DATE:
            if isinstance(self.payload, dt.datetime) or not isinstance(self.payload, dt.date):
                raise TypeError(f"date payload must be a datetime.date, got {self.payload!r}")
        elif not isinstance(self.payload, str):
            raise TypeError(f"text payload must be str, got {self.payload!r}")

    @classmethod
    def text(cls, s: str) -> "AttributeValue":
        return cls(Kind.TEXT, s)

    @classmethod
    def number(cls, x: object) -> "AttributeValue":
        return cls(Kind.NUMBER, to_decimal(x))

    @classmethod
    def date(cls, d: dt.date | str) -> "AttributeValue":
        if isinstance(d, str):
            d = parse_iso_date(d)
        return cls(Kind.DATE, d)

    @classmethod
    def infer(cls, raw: object) -> "AttributeValue":
        """JSON-style inference: numbers are numbers, YYYY-MM-DD strings are dates, other strings text."""
        if isinstance(raw, AttributeValue):
            return raw
        if isinstance(raw, bool) or raw is None:
            raise TypeError(f"unsupported attribute value {raw!r}")
        if isinstance(raw, (int, float, Decimal)):
            return cls.number(raw)
        if isinstance(raw, dt.date):
            return cls.date(raw)
        if isinstance(raw, str):
            if ISO_DATE.match(raw):
                return cls.date(raw)
            return cls.text(raw)
        raise TypeError(f"unsupported attribute value {raw!r}")

    def to_json(self) -> object:
        if self.kind is Kind.NUMBER:
            return self.payload
        if self.kind is Kind.DATE:
            return self.payload.isoformat()  # type: ignore[union-attr]
        return self.payload

    def __str__(self) -> str:
        if self.kind is Kind.NUMBER:
            return format_decimal(self.payload)  # type: ignore[arg-type]
        if self.kind is Kind.DATE:
            return self.payload.isoformat()  # type: ignore[union-attr]
        return f'"{self.payload}"'


def parse_iso_date(s: str) -> dt.date:
    if not ISO_DATE.match(s):
        raise ValueError(f"expected YYYY-MM-DD, got {s!r}")
    return dt.date.fromisoformat(s)


@dataclass(frozen=True)
class AttributeRecord:
    """An item or a user: an id plus single-valued named attributes."""

    entity_id: str
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.entity_id, str) or not self.entity_id:
            raise ValueError("entity_id must be a non-empty string")
        attrs = {name: AttributeValue.infer(v) for name, v in dict(self.attributes).items()}
        object.__setattr__(self, "attributes", MappingProxyType(attrs))

    def get(self, name: str) -> Optional[AttributeValue]:
        return self.attributes.get(name)

    def __hash__(self):
        return hash(self.entity_id)

    def __eq__(self, other):
        if not isinstance(other, AttributeRecord):
            return NotImplemented
        return self.entity_id == other.entity_id and dict(self.attributes) == dict(other.attributes)


def attribute_lookup(record: AttributeRecord, name: str) -> Optional[AttributeValue]:
    return record.get(name)


class Op(str, enum.Enum):
    EQ = "="
    NEQ = "!="
    LT = "<"
    LEQ = "<="
    GT = ">"
    GEQ = ">="
    SUBSTRING = "substring"

    @property
    def symbol(self) -> str:
        return self.value

    def applies_to(self, kind: Kind) -> bool:
        if self is Op.SUBSTRING:
            return kind is Kind.TEXT
        if self in ORDERING_OPS:
            return kind in (Kind.NUMBER, Kind.DATE)
        return True


ORDERING_OPS = frozenset({Op.LT, Op.LEQ, Op.GT, Op.GEQ})


def apply_op(lhs, op: Op, rhs) -> bool:
    """Raw comparison on already-compatible payloads."""
    if op is Op.EQ:
        return lhs == rhs
    if op is Op.NEQ:
        return lhs != rhs
    if op is Op.LT:
        return lhs < rhs
    if op is Op.LEQ:
        return lhs <= rhs
    if op is Op.GT:
        return lhs > rhs
    if op is Op.GEQ:
        return lhs >= rhs
    return rhs in lhs


def compare(lhs: AttributeValue, op: Op, rhs: AttributeValue) -> bool:
    """Evaluate ``lhs op rhs``; substring means lhs contains rhs."""
    op = Op(op)
    if lhs.kind is not rhs.kind:
        raise EvaluationError(
            f"cannot compare {lhs.kind.value} with {rhs.kind.value} using {op.symbol}",
            lhs_kind=lhs.kind.value, rhs_kind=rhs.kind.value)
    if not op.applies_to(lhs.kind):
        raise EvaluationError(
            f"operator {op.symbol} is not applicable to {lhs.kind.value} operands",
            lhs_kind=lhs.kind.value, rhs_kind=rhs.kind.value)
    return apply_op(lhs.payload, op, rhs.payload)


@dataclass(frozen=True)
class ScoreTable:
    """score(u, t) lookup. Any finite range is accepted; only order and sums matter."""

    entries: Mapping[tuple[str, str], Decimal] = field(default_factory=dict)
    default: Optional[Decimal] = None

    def __post_init__(self):
        entries = {(u, t): to_decimal(s) for (u, t), s in dict(self.entries).items()}
        object.__setattr__(self, "entries", MappingProxyType(entries))
        if self.default is not None:
            object.__setattr__(self, "default", to_decimal(self.default))

    def score(self, user: str, item: str) -> Decimal:
        try:
            return self.entries[(user, item)]
        except KeyError:
            if self.default is None:
                raise MissingScoreError(user, item) from None
            return self.default


def score_of(table: ScoreTable, user: str, item: str) -> Decimal:
    return table.score(user, item)
