"""Hypothesis strategies for records and constraints over a small attribute universe."""

from decimal import Decimal

from hypothesis import strategies as st

from groupform.constraints import (
    AggregationPredicate,
    Aggregator,
    CompositeConstraint,
    ItemPredicate,
    ValuePredicate,
)
from groupform.model import AttributeRecord, AttributeValue, Op

WORDS = ("college graduate", "college student", "high school", "phd")
NUMERIC = ("age", "height")

numbers = st.integers(min_value=15, max_value=60).map(Decimal) | st.decimals(
    min_value=0, max_value=100, places=2, allow_nan=False, allow_infinity=False)
dates = st.dates().map(AttributeValue.date)
texts = st.sampled_from(WORDS).map(AttributeValue.text)


@st.composite
def records(draw, prefix="u"):
    attrs = {}
    if draw(st.integers(0, 9)) > 0:
        attrs["age"] = AttributeValue.number(draw(st.integers(15, 60)))
    if draw(st.booleans()):
        attrs["height"] = AttributeValue.number(draw(numbers))
    if draw(st.integers(0, 4)) > 0:
        attrs["education"] = draw(texts)
    return attrs


@st.composite
def groups(draw, min_size=1, max_size=8):
    attrs = draw(st.lists(records(), min_size=min_size, max_size=max_size))
    return [AttributeRecord(f"u{i}", a) for i, a in enumerate(attrs)]


def value_predicates(cls=ValuePredicate):
    numeric = st.builds(cls, st.sampled_from(NUMERIC), st.sampled_from(list(Op)[:6]),
                        st.integers(15, 60).map(AttributeValue.number))
    textual = st.builds(cls, st.just("education"), st.sampled_from([Op.EQ, Op.NEQ, Op.SUBSTRING]),
                        st.sampled_from(WORDS + ("college", "school", "")).map(AttributeValue.text))
    return numeric | textual


aggregation_ops = st.sampled_from([Op.EQ, Op.LT, Op.LEQ, Op.GT, Op.GEQ])


@st.composite
def aggregation_predicates(draw):
    agg = draw(st.sampled_from(list(Aggregator)))
    if agg is Aggregator.COUNT:
        attr = draw(st.sampled_from(NUMERIC + ("education",)))
        value = draw(st.integers(0, 6))
    else:
        attr = draw(st.sampled_from(NUMERIC))
        value = draw(st.integers(15, 60)) if agg is not Aggregator.SUM else draw(st.integers(15, 300))
    return AggregationPredicate(agg, attr, draw(aggregation_ops), value)


conjuncts = value_predicates() | aggregation_predicates()


@st.composite
def composites(draw, max_count=5):
    inner = draw(st.lists(conjuncts, min_size=1, max_size=3))
    return CompositeConstraint(draw(st.integers(1, max_count)), tuple(inner))


group_constraints = value_predicates() | aggregation_predicates() | composites()

# wider literal space for round-trip checks
identifiers = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,10}", fullmatch=True).filter(
    lambda s: s not in ("and", "substring"))
any_literal = st.one_of(
    st.decimals(allow_nan=False, allow_infinity=False, places=4).map(AttributeValue.number),
    st.dates().map(AttributeValue.date),
    st.text(alphabet=st.characters(blacklist_characters='"', blacklist_categories=("Cs",))).map(
        AttributeValue.text),
)


@st.composite
def any_predicate(draw, cls):
    lit = draw(any_literal)
    ops = [op for op in Op if op.applies_to(lit.kind)]
    return cls(draw(identifiers), draw(st.sampled_from(ops)), lit)


@st.composite
def any_aggregation(draw):
    return AggregationPredicate(draw(st.sampled_from(list(Aggregator))), draw(identifiers), draw(aggregation_ops),
                                draw(st.decimals(allow_nan=False, allow_infinity=False, places=3)))


any_conjunct = any_predicate(ValuePredicate) | any_aggregation()
any_group_constraint = st.one_of(
    any_predicate(ValuePredicate),
    any_aggregation(),
    st.builds(CompositeConstraint, st.integers(1, 10 ** 6), st.lists(any_conjunct, min_size=1, max_size=4).map(tuple)),
)
any_item_predicate = any_predicate(ItemPredicate)
