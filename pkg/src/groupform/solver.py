"""Greedy group construction and the exhaustive exact solver."""

from __future__ import annotations

import enum
import math
import random
import warnings
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .constraints import (
    ConstraintProfile,
    SatisfactionReport,
    ValuePredicate,
    eval_user_to_item,
    group_report,
    is_satisfiable_group,
)
from .dataset import Dataset
from .model import AttributeRecord, EvaluationError, ScoreTable, to_decimal

DEFAULT_ENUMERATION_BUDGET = 1_000_000


class CountingPolicy(str, enum.Enum):
    BINARY = "binary"
    GRADED = "graded"


class InfeasibleError(Exception):
    """Fewer than k users accept the item."""

    def __init__(self, n_eligible: int, k: int):
        self.n_eligible = n_eligible
        self.k = k
        super().__init__(f"only {n_eligible} eligible users for a group of size {k}")


class EnumerationBudgetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TraceStep:
    step: int
    chosen: str
    candidates: tuple[str, ...]
    totals: Mapping[str, Fraction] = field(default_factory=dict)


@dataclass(frozen=True)
class SolverResult:
    group: tuple[str, ...]
    total_score: Decimal
    satisfiable: bool
    report: SatisfactionReport
    trace: tuple[TraceStep, ...] = ()


def eligible_users(population: Iterable[AttributeRecord], profiles: Mapping[str, ConstraintProfile],
                   item: AttributeRecord) -> list[str]:
    """Ids of users whose item constraints accept ``item``, in population order."""
    out = []
    for u in population:
        profile = profiles.get(u.entity_id)
        if profile is None:
            out.append(u.entity_id)
            continue
        try:
            ok = eval_user_to_item(profile, item)
        except EvaluationError as e:
            raise EvaluationError(f"user {u.entity_id!r}: {e}", constraint=e.constraint,
                                  lhs_kind=e.lhs_kind, rhs_kind=e.rhs_kind) from None
        if ok:
            out.append(u.entity_id)
    return out


def group_score(group: Iterable[str], item: Union[str, AttributeRecord], scores: ScoreTable) -> Decimal:
    item_id = item.entity_id if isinstance(item, AttributeRecord) else item
    return sum((scores.score(u, item_id) for u in group), Decimal(0))


def policy_total(group: Sequence[AttributeRecord], profiles: Mapping[str, ConstraintProfile],
                 company: Optional[ConstraintProfile], policy: CountingPolicy = CountingPolicy.BINARY,
                 include_self: bool = False) -> Fraction:
    """How well ``group`` does on all member group constraints plus the company's."""
    if not group:
        raise ValueError("group must be non-empty")
    report = group_report(group, profiles, company, include_self)
    if CountingPolicy(policy) is CountingPolicy.BINARY:
        return Fraction(report.satisfied_count)
    return report.graded_total


def _argmax(ids: Iterable[str], score, epsilon: Optional[Decimal]) -> list[str]:
    ids = list(ids)
    best = max(score[u] for u in ids)
    floor = best - epsilon if epsilon else best
    return sorted(u for u in ids if score[u] >= floor)


def greedy_construct(dataset: Dataset, k: int, policy: CountingPolicy = CountingPolicy.GRADED,
                     seed: int = 0, epsilon: Optional[Decimal] = None,
                     include_self: bool = False) -> SolverResult:
    """Incremental construction: highest-scoring first, then the best-fitting top scorer each step.

    The first member is drawn uniformly (seeded) among the top scorers; later
    steps evaluate every top-scoring candidate on the partial group and keep
    the one with the largest policy total, smallest id on ties.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    policy = CountingPolicy(policy)
    if epsilon is not None:
        epsilon = to_decimal(epsilon)
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
    users = dataset.user_map
    profiles = dataset.profiles
    company = dataset.company_or_none()
    eligible = eligible_users(dataset.users, profiles, dataset.item)
    if len(eligible) < k:
        raise InfeasibleError(len(eligible), k)
    score = {u: dataset.score(u) for u in eligible}
    rng = random.Random(seed)

    top = _argmax(eligible, score, epsilon)
    first = top[rng.randrange(len(top))]
    group = [first]
    chosen = {first}
    trace = [TraceStep(0, first, tuple(top))]

    # remaining eligible users sorted by descending score; C is always a prefix
    remaining = sorted((u for u in eligible if u != first), key=lambda u: (-score[u], u))
    members = [users[first]]
    while len(group) < k:
        remaining = [u for u in remaining if u not in chosen]
        best = score[remaining[0]]
        floor = best - epsilon if epsilon else best
        cands = []
        for u in remaining:
            if score[u] < floor:
                break
            cands.append(u)
        cands.sort()
        totals = {}
        pick, pick_total = None, None
        for u in cands:
            total = policy_total(members + [users[u]], profiles, company, policy, include_self)
            totals[u] = total
            if pick_total is None or total > pick_total:
                pick, pick_total = u, total
        group.append(pick)
        chosen.add(pick)
        members.append(users[pick])
        trace.append(TraceStep(len(group) - 1, pick, tuple(cands), totals))

    report = group_report(members, profiles, company, include_self)
    ok = is_satisfiable_group(dataset.item, group, profiles, users, company, include_self)
    return SolverResult(tuple(group), group_score(group, dataset.item, dataset.scores), ok, report, tuple(trace))


def _compatible(new: AttributeRecord, members: Sequence[AttributeRecord],
                profiles: Mapping[str, ConstraintProfile], company: Optional[ConstraintProfile],
                include_self: bool) -> bool:
    """Value predicates are anti-monotone: a violation here can never be repaired by adding members."""

    def value_preds(owner: str):
        p = profiles.get(owner)
        return [c for c in p.group_constraints if isinstance(c, ValuePredicate)] if p else []

    for m in members:
        if not all(c.holds_for(new) for c in value_preds(m.entity_id)):
            return False
    own = value_preds(new.entity_id)
    targets = list(members) + ([new] if include_self else [])
    if not all(c.holds_for(t) for c in own for t in targets):
        return False
    if company is not None:
        for c in company.group_constraints:
            if isinstance(c, ValuePredicate) and not c.holds_for(new):
                return False
    return True


def exact_construct(dataset: Dataset, k: int, include_self: bool = False,
                    budget: int = DEFAULT_ENUMERATION_BUDGET) -> Optional[SolverResult]:
    """Best satisfiable k-subset of the eligible users, or None if there is none.

    Ties on total score go to the lexicographically smallest sorted id list.
    Intended for roughly 20 eligible users or fewer.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    users = dataset.user_map
    profiles = dataset.profiles
    company = dataset.company_or_none()
    eligible = sorted(eligible_users(dataset.users, profiles, dataset.item))
    if len(eligible) < k:
        return None
    n_subsets = math.comb(len(eligible), k)
    if n_subsets > budget:
        warnings.warn(f"exact solver will enumerate up to {n_subsets} subsets (budget {budget})",
                      EnumerationBudgetWarning, stacklevel=2)
    score = {u: dataset.score(u) for u in eligible}
    records = [users[u] for u in eligible]

    best_ids: Optional[tuple[str, ...]] = None
    best_score: Optional[Decimal] = None

    # depth-first over index combinations in lexicographic order, pruning on value predicates
    def extend(start: int, chosen: list[int]):
        nonlocal best_ids, best_score
        if len(chosen) == k:
            ids = tuple(eligible[i] for i in chosen)
            total = sum((score[u] for u in ids), Decimal(0))
            if best_score is not None and total <= best_score:
                return
            if is_satisfiable_group(dataset.item, ids, profiles, users, company, include_self):
                best_ids, best_score = ids, total
            return
        need = k - len(chosen)
        for i in range(start, len(eligible) - need + 1):
            new = records[i]
            if not _compatible(new, [records[j] for j in chosen], profiles, company, include_self):
                continue
            chosen.append(i)
            extend(i + 1, chosen)
            chosen.pop()

    extend(0, [])
    if best_ids is None:
        return None
    members = [users[u] for u in best_ids]
    report = group_report(members, profiles, company, include_self)
    return SolverResult(best_ids, best_score, True, report)


def top_k(dataset: Dataset, k: int) -> tuple[str, ...]:
    """The k highest-scoring users (ties by id), ignoring every constraint."""
    ranked = sorted(dataset.users, key=lambda u: (-dataset.score(u.entity_id), u.entity_id))
    return tuple(u.entity_id for u in ranked[:k])
