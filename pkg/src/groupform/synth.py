"""Seeded synthetic instances for experiments and property tests."""

from __future__ import annotations

import datetime as dt
import random
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Sequence

from .constraints import (
    AggregationPredicate,
    Aggregator,
    CompositeConstraint,
    ConstraintProfile,
    ItemPredicate,
    ValuePredicate,
)
from .dataset import Dataset
from .model import AttributeRecord, AttributeValue, Kind, Op, ScoreTable

ORDER_OPS = (Op.LT, Op.LEQ, Op.GT, Op.GEQ)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AttributeSpec:
    """How to draw one user attribute: numbers in [low, high], dates in [low, high], text from choices."""

    name: str
    kind: Kind
    low: object = None
    high: object = None
    choices: tuple[str, ...] = ()
    missing_rate: float = 0.0

    def validate(self) -> None:
        try:
            kind = Kind(self.kind)
        except ValueError:
            raise ConfigError(f"{self.name}: unknown kind {self.kind!r}") from None
        if not self.name.isidentifier():
            raise ConfigError(f"attribute name {self.name!r} is not an identifier")
        if not 0 <= self.missing_rate < 1:
            raise ConfigError(f"{self.name}: missing_rate must be in [0, 1)")
        if kind is Kind.TEXT:
            if not self.choices:
                raise ConfigError(f"{self.name}: text attributes need choices")
            if any('"' in ch for ch in self.choices):
                raise ConfigError(f"{self.name}: choices cannot contain double quotes")
        elif self.low is None or self.high is None or self.low > self.high:
            raise ConfigError(f"{self.name}: need low <= high")

    def draw(self, rng: random.Random, allow_missing: bool = True) -> Optional[AttributeValue]:
        if allow_missing and self.missing_rate and rng.random() < self.missing_rate:
            return None
        kind = Kind(self.kind)
        if kind is Kind.TEXT:
            return AttributeValue.text(rng.choice(self.choices))
        if kind is Kind.DATE:
            span = (self.high - self.low).days
            return AttributeValue.date(self.low + dt.timedelta(days=rng.randint(0, span)))
        return AttributeValue.number(rng.randint(int(self.low), int(self.high)))


DEFAULT_ATTRIBUTES = (
    AttributeSpec("age", Kind.NUMBER, 18, 70),
    AttributeSpec("education", Kind.TEXT, choices=("high school", "college student", "college graduate", "phd")),
    AttributeSpec("gender", Kind.TEXT, choices=("female", "male")),
    AttributeSpec("budget", Kind.NUMBER, 300, 3000, missing_rate=0.1),
    AttributeSpec("member_since", Kind.DATE, dt.date(2005, 1, 1), dt.date(2012, 6, 30)),
)

DEFAULT_ITEM = AttributeRecord("item", {
    "title": AttributeValue.text("Gems of the Aegean"),
    "type": AttributeValue.text("cruise"),
    "place": AttributeValue.text("Eastern Mediterranean"),
    "start_date": AttributeValue.date("2012-07-16"),
    "end_date": AttributeValue.date("2012-07-24"),
    "duration": AttributeValue.number(8),
    "cost": AttributeValue.number(900),
})


@dataclass(frozen=True)
class SyntheticConfig:
    n_users: int = 10
    seed: int = 0
    density: float = 0.5
    attributes: Sequence[AttributeSpec] = DEFAULT_ATTRIBUTES
    score_distribution: str = "uniform"
    max_item_constraints: int = 2
    max_group_constraints: int = 2
    max_company_constraints: int = 2
    max_min_count: int = 3
    item_accept_rate: float = 0.85
    composite_equality: bool = True
    item: AttributeRecord = field(default=DEFAULT_ITEM)

    def validate(self) -> None:
        if self.n_users < 1:
            raise ConfigError("n_users must be >= 1")
        if not 0 <= self.density <= 1:
            raise ConfigError("density must be in [0, 1]")
        if self.score_distribution not in ("uniform", "normal", "ties"):
            raise ConfigError(f"unknown score distribution {self.score_distribution!r}")
        if not 0 <= self.item_accept_rate <= 1:
            raise ConfigError("item_accept_rate must be in [0, 1]")
        if min(self.max_item_constraints, self.max_group_constraints, self.max_company_constraints) < 0:
            raise ConfigError("constraint maxima must be >= 0")
        if self.max_min_count < 1:
            raise ConfigError("max_min_count must be >= 1")
        if not self.attributes:
            raise ConfigError("need at least one attribute spec")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ConfigError("attribute names must be unique")
        for a in self.attributes:
            a.validate()


def _draw_scores(cfg: SyntheticConfig, rng: random.Random) -> list[Decimal]:
    n = cfg.n_users
    if cfg.score_distribution == "uniform":
        grid = 10_000
        if n <= grid:
            picks = rng.sample(range(grid), n)
        else:
            picks = [rng.randrange(grid) for _ in range(n)]
        return [Decimal(p).scaleb(-4) for p in picks]
    if cfg.score_distribution == "ties":
        return [Decimal(rng.randint(0, 10)).scaleb(-1) for _ in range(n)]
    out = []
    for _ in range(n):
        x = min(1.0, max(0.0, rng.gauss(0.5, 0.2)))
        out.append(Decimal(round(x * 10_000)).scaleb(-4))
    return out


def _value_predicate(spec: AttributeSpec, rng: random.Random, cls=ValuePredicate):
    lit = spec.draw(rng, allow_missing=False)
    if lit.kind is Kind.TEXT:
        roll = rng.random()
        if roll < 0.6:
            op = Op.EQ
        elif roll < 0.85:
            op = Op.NEQ
        else:
            op = Op.SUBSTRING
            text = lit.payload
            i = rng.randint(0, max(0, len(text) - 3))
            lit = AttributeValue.text(text[i:i + rng.randint(1, 4)])
        return cls(spec.name, op, lit)
    return cls(spec.name, rng.choice(ORDER_OPS + (Op.EQ, Op.NEQ) if rng.random() < 0.2 else ORDER_OPS), lit)


def _aggregation(cfg: SyntheticConfig, rng: random.Random, allow_eq: bool = True) -> AggregationPredicate:
    numeric = [a for a in cfg.attributes if Kind(a.kind) is Kind.NUMBER]
    ops = [Op.LT, Op.LEQ, Op.GT, Op.GEQ] + ([Op.EQ] if allow_eq else [])
    if not numeric or rng.random() < 0.15:
        spec = rng.choice(list(cfg.attributes))
        return AggregationPredicate(Aggregator.COUNT, spec.name, rng.choice(ops), rng.randint(0, 4))
    spec = rng.choice(numeric)
    agg = rng.choice([Aggregator.AVG, Aggregator.SUM, Aggregator.MIN, Aggregator.MAX])
    lo, hi = int(spec.low), int(spec.high)
    if agg is Aggregator.SUM:
        m = rng.randint(1, cfg.max_min_count + 1)
        value = rng.randint(lo * m, hi * m)
    else:
        value = rng.randint(lo, hi)
    return AggregationPredicate(agg, spec.name, rng.choice(ops), value)


def random_group_constraint(cfg: SyntheticConfig, rng: random.Random):
    roll = rng.random()
    if roll < 0.4:
        return _value_predicate(rng.choice(list(cfg.attributes)), rng)
    if roll < 0.7:
        return _aggregation(cfg, rng)
    inner = []
    for _ in range(rng.choice((1, 1, 1, 2))):
        if rng.random() < 0.5:
            inner.append(_value_predicate(rng.choice(list(cfg.attributes)), rng))
        else:
            inner.append(_aggregation(cfg, rng, allow_eq=cfg.composite_equality))
    return CompositeConstraint(rng.randint(1, cfg.max_min_count), tuple(inner))


def _item_predicate(cfg: SyntheticConfig, rng: random.Random) -> ItemPredicate:
    name = rng.choice(sorted(cfg.item.attributes))
    actual = cfg.item.attributes[name]
    accept = rng.random() < cfg.item_accept_rate
    if actual.kind is Kind.TEXT:
        if accept:
            return ItemPredicate(name, rng.choice((Op.EQ, Op.SUBSTRING)), actual)
        return ItemPredicate(name, Op.EQ, AttributeValue.text(actual.payload + " (other)"))
    if actual.kind is Kind.NUMBER:
        delta = Decimal(rng.randint(0, 300))
        if accept:
            op = rng.choice((Op.LEQ, Op.GEQ))
            return ItemPredicate(name, op, AttributeValue.number(actual.payload + delta if op is Op.LEQ
                                                                  else actual.payload - delta))
        return ItemPredicate(name, Op.LT, AttributeValue.number(actual.payload - delta))
    days = dt.timedelta(days=rng.randint(0, 30))
    if accept:
        op = rng.choice((Op.LEQ, Op.GEQ))
        return ItemPredicate(name, op, AttributeValue.date(actual.payload + days if op is Op.LEQ
                                                          else actual.payload - days))
    return ItemPredicate(name, Op.GT, AttributeValue.date(actual.payload + days))


def generate_synthetic(n_users: int = 10, seed: int = 0, density: float = 0.5,
                       score_distribution: str = "uniform", config: Optional[SyntheticConfig] = None,
                       **overrides) -> Dataset:
    """Deterministic per seed. ``density`` is the chance that each user (and the
    company) carries constraints at all; 0 yields an unconstrained instance."""
    if config is None:
        config = SyntheticConfig(n_users=n_users, seed=seed, density=density,
                                 score_distribution=score_distribution, **overrides)
    cfg = config
    cfg.validate()
    rng = random.Random(cfg.seed)

    width = len(str(cfg.n_users - 1))
    users = []
    for i in range(cfg.n_users):
        attrs = {}
        for spec in cfg.attributes:
            v = spec.draw(rng)
            if v is not None:
                attrs[spec.name] = v
        users.append(AttributeRecord(f"u{i:0{width}d}", attrs))

    profiles = {}
    for u in users:
        if rng.random() >= cfg.density:
            continue
        items = tuple(_item_predicate(cfg, rng) for _ in range(rng.randint(0, cfg.max_item_constraints)))
        groups = tuple(random_group_constraint(cfg, rng) for _ in range(rng.randint(0, cfg.max_group_constraints)))
        if items or groups:
            profiles[u.entity_id] = ConstraintProfile(u.entity_id, items, groups)

    company = ConstraintProfile.company()
    if rng.random() < cfg.density and cfg.max_company_constraints:
        company = ConstraintProfile.company(
            random_group_constraint(cfg, rng) for _ in range(rng.randint(1, cfg.max_company_constraints)))

    scores = _draw_scores(cfg, rng)
    table = ScoreTable({(u.entity_id, cfg.item.entity_id): s for u, s in zip(users, scores)})
    return Dataset(cfg.item, tuple(users), profiles, company, table)
