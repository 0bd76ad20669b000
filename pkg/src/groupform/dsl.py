"""Textual constraint language.

Grammar::

    constraint    = composite | aggregation | predicate ;
    composite     = "include" "at" "least" integer "users" "with" conj ;
    conj          = simple { "and" simple } ;
    simple        = aggregation | predicate ;
    aggregation   = agg "(" ident ")" aop number ;
    agg           = "avg" | "sum" | "min" | "max" | "count" ;
    predicate     = ident op literal ;
    op            = "=" | "!=" | "<" | "<=" | ">" | ">=" | "substring" ;
    aop           = "=" | "<" | "<=" | ">" | ">=" ;
    literal       = number | date | string ;

Text literals are double-quoted, dates are bare ``YYYY-MM-DD`` tokens and
anything else numeric is a decimal number.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Optional, Union

from .constraints import (
    AGGREGATION_OPS,
    RESERVED,
    AggregationPredicate,
    Aggregator,
    CompositeConstraint,
    GroupConstraint,
    ItemPredicate,
    ValuePredicate,
)
from .model import AttributeValue, Op


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.column}: {self.severity}: {self.message}"


class ConstraintSyntaxError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic], text: str = ""):
        self.diagnostics = diagnostics
        self.text = text
        super().__init__("; ".join(str(d) for d in diagnostics))


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<date>\d{4}-\d{2}-\d{2}(?![0-9A-Za-z_.\-]))
  | (?P<number>-?\d+(?:\.\d+)?(?![0-9A-Za-z_.]))
  | (?P<string>"[^"]*")
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE | re.ASCII)

_OPS = {"=": Op.EQ, "!=": Op.NEQ, "<": Op.LT, "<=": Op.LEQ, ">": Op.GT, ">=": Op.GEQ}
_AGGS = {a.value: a for a in Aggregator}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.diagnostics: list[ParseDiagnostic] = []
        self.tokens: list[_Tok] = []
        self.pos = 0

    # -- positions ---------------------------------------------------------
    def span(self, offset: int, length: int) -> SourceSpan:
        offset = min(offset, len(self.text))
        length = max(0, min(length, len(self.text) - offset))
        line = self.text.count("\n", 0, offset) + 1
        col = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return SourceSpan(line, col, length)

    def error(self, tok: _Tok, message: str) -> "_Abort":
        self.diagnostics.append(ParseDiagnostic(self.span(tok.offset, len(tok.text)), message))
        return _Abort()

    def warn(self, tok: _Tok, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic(self.span(tok.offset, len(tok.text)), message, "warning"))

    def _tokenize(self) -> list[_Tok]:
        toks = []
        i = 0
        n = len(self.text)
        while i < n:
            m = _TOKEN.match(self.text, i)
            if m is None:
                if self.text[i] == '"':
                    self.diagnostics.append(ParseDiagnostic(self.span(i, n - i), "unterminated string literal"))
                else:
                    self.diagnostics.append(ParseDiagnostic(self.span(i, 1), f"unexpected character {self.text[i]!r}"))
                raise _Abort()
            if m.lastgroup != "ws":
                toks.append(_Tok(m.lastgroup, m.group(), i))
            i = m.end()
        toks.append(_Tok("eof", "", n))
        return toks

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> _Tok:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> _Tok:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> _Tok:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def describe(self, t: _Tok) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def expect_word(self, word: str) -> _Tok:
        t = self.tok
        if t.kind != "ident" or t.text != word:
            raise self.error(t, f"expected '{word}', found {self.describe(t)}")
        return self.advance()

    def expect_end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(self.tok, f"unexpected {self.describe(self.tok)} after constraint")

    # -- grammar -----------------------------------------------------------
    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            raise self.error(t, f"expected attribute name, found {self.describe(t)}")
        if t.text in RESERVED:
            raise self.error(t, f"'{t.text}' is a reserved word and cannot name an attribute")
        return self.advance().text

    def operator(self) -> tuple[Op, _Tok]:
        t = self.tok
        if t.kind == "op":
            return _OPS[self.advance().text], t
        if t.kind == "ident" and t.text == "substring":
            self.advance()
            return Op.SUBSTRING, t
        raise self.error(t, f"expected comparison operator, found {self.describe(t)}")

    def literal(self) -> tuple[AttributeValue, _Tok]:
        t = self.tok
        if t.kind == "string":
            self.advance()
            return AttributeValue.text(t.text[1:-1]), t
        if t.kind == "date":
            self.advance()
            try:
                return AttributeValue.date(dt.date.fromisoformat(t.text)), t
            except ValueError:
                raise self.error(t, f"invalid calendar date {t.text}") from None
        if t.kind == "number":
            self.advance()
            return AttributeValue.number(self.number_value(t)), t
        if t.kind == "ident":
            raise self.error(t, f"expected a literal, found bare word {t.text!r} (text literals need double quotes)")
        raise self.error(t, f"expected a literal, found {self.describe(t)}")

    def number_value(self, t: _Tok) -> Decimal:
        try:
            return Decimal(t.text)
        except InvalidOperation:  # pragma: no cover - the token regex only admits decimals
            raise self.error(t, f"invalid number {t.text}") from None

    def predicate(self, cls):
        name = self.ident()
        op, op_tok = self.operator()
        value, _ = self.literal()
        if not op.applies_to(value.kind):
            need = "text" if op is Op.SUBSTRING else "number or date"
            raise self.error(op_tok, f"operator {op.symbol} requires {need} operands, got {value.kind.value} literal")
        return cls(name, op, value)

    def aggregation(self) -> AggregationPredicate:
        agg_tok = self.advance()
        agg = _AGGS[agg_tok.text]
        t = self.tok
        if t.kind != "lparen":
            raise self.error(t, f"expected '(' after {agg.value}, found {self.describe(t)}")
        self.advance()
        name = self.ident()
        t = self.tok
        if t.kind != "rparen":
            raise self.error(t, f"expected ')', found {self.describe(t)}")
        self.advance()
        op, op_tok = self.operator()
        if op not in AGGREGATION_OPS:
            raise self.error(op_tok, f"operator {op.symbol} is not allowed in aggregation constraints")
        t = self.tok
        if t.kind != "number":
            raise self.error(t, f"aggregation threshold must be a number, found {self.describe(t)}")
        self.advance()
        value = self.number_value(t)
        if agg is Aggregator.COUNT and value != value.to_integral_value():
            self.warn(t, "count compared against a non-integer threshold")
        return AggregationPredicate(agg, name, op, value)

    def at_aggregation(self) -> bool:
        return self.tok.kind == "ident" and self.tok.text in _AGGS and self.peek().kind == "lparen"

    def simple(self):
        if self.at_aggregation():
            return self.aggregation()
        return self.predicate(ValuePredicate)

    def at_composite(self) -> bool:
        return self.tok.kind == "ident" and self.tok.text == "include" and self.peek().kind == "ident" \
            and self.peek().text == "at"

    def composite(self) -> CompositeConstraint:
        self.expect_word("include")
        self.expect_word("at")
        self.expect_word("least")
        t = self.tok
        if t.kind != "number" or not re.fullmatch(r"-?\d+", t.text):
            raise self.error(t, f"expected a whole number of users, found {self.describe(t)}")
        self.advance()
        count = int(t.text)
        if count < 1:
            raise self.error(t, f"min_count must be >= 1, got {count}")
        self.expect_word("users")
        self.expect_word("with")
        inner = [self.simple()]
        while self.tok.kind == "ident" and self.tok.text == "and":
            self.advance()
            inner.append(self.simple())
        return CompositeConstraint(count, tuple(inner))

    def group_constraint(self) -> GroupConstraint:
        if self.at_composite():
            c = self.composite()
        else:
            c = self.simple()
        self.expect_end()
        return c

    def item_predicate(self) -> ItemPredicate:
        if self.at_aggregation() or self.at_composite():
            raise self.error(self.tok, "user-to-item constraints must be plain attribute predicates")
        p = self.predicate(ItemPredicate)
        self.expect_end()
        return p


class _Abort(Exception):
    pass


def _run(text: str, rule: str):
    if not isinstance(text, str):
        raise TypeError(f"constraint text must be str, got {type(text).__name__}")
    parser = _Parser(text)
    try:
        parser.tokens = parser._tokenize()
        result = getattr(parser, rule)()
    except _Abort:
        result = None
    except ValueError as e:
        # constructor-level invariant violations (e.g. quoted text inside literals)
        result = None
        parser.diagnostics.append(ParseDiagnostic(SourceSpan(1, 1, len(text)), str(e)))
    diagnostics = parser.diagnostics
    if result is None and not any(d.severity == "error" for d in diagnostics):
        diagnostics.append(ParseDiagnostic(SourceSpan(1, 1, len(text)), "invalid constraint"))
    return result, diagnostics


def _parse_or_raise(text: str, rule: str):
    result, diagnostics = _run(text, rule)
    if result is None:
        raise ConstraintSyntaxError(diagnostics, text)
    return result


def parse_item_predicate(text: str) -> ItemPredicate:
    """Parse ``<attr> <op> <literal>``; raises ConstraintSyntaxError with spans on failure."""
    return _parse_or_raise(text, "item_predicate")


def parse_group_constraint(text: str) -> GroupConstraint:
    """Parse a value, aggregation or ``include at least N users with ...`` constraint."""
    return _parse_or_raise(text, "group_constraint")


def diagnose(text: str, kind: str = "group") -> list[ParseDiagnostic]:
    """All diagnostics (errors and warnings) for ``text``; never raises on bad input."""
    rule = {"group": "group_constraint", "item": "item_predicate"}[kind]
    return _run(text, rule)[1]


def render(constraint: Union[ItemPredicate, GroupConstraint]) -> str:
    """Canonical text that parses back to an equal constraint."""
    return str(constraint)


def parse(text: str, kind: str = "group") -> Optional[Union[ItemPredicate, GroupConstraint]]:
    return parse_item_predicate(text) if kind == "item" else parse_group_constraint(text)
