"""Solver invocation, independent group audits and JSON run reports."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Sequence

from .constraints import (
    SatisfactionReport,
    Verdict,
    constraint_kind,
    eval_user_to_item,
    group_report,
    is_satisfiable_group,
    resolve_members,
)
from .dataset import Dataset
from .dsl import render
from .model import EvaluationError, MissingScoreError, format_decimal
from .solver import (
    CountingPolicy,
    InfeasibleError,
    SolverResult,
    eligible_users,
    exact_construct,
    greedy_construct,
)

REPORT_VERSION = 1


class ExitStatus(enum.IntEnum):
    OK = 0
    UNSATISFIABLE = 2
    INFEASIBLE = 3
    INVALID = 4


@dataclass(frozen=True)
class RunConfig:
    k: int
    solver: str = "greedy"
    policy: CountingPolicy = CountingPolicy.GRADED
    seed: int = 0
    epsilon: Optional[Decimal] = None
    include_self: bool = False

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.solver not in ("greedy", "exact", "both"):
            raise ValueError(f"solver must be greedy, exact or both, got {self.solver!r}")
        object.__setattr__(self, "policy", CountingPolicy(self.policy))
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.epsilon is not None:
            eps = Decimal(self.epsilon)
            if not eps.is_finite() or eps < 0:
                raise ValueError("epsilon must be a finite decimal >= 0")
            object.__setattr__(self, "epsilon", eps)


def _grade(g: Fraction) -> float:
    return float(g)


def verdict_json(v: Verdict) -> dict:
    return {
        "owner": v.owner,
        "kind": constraint_kind(v.constraint),
        "constraint": render(v.constraint),
        "satisfied": v.satisfied,
        "grade": _grade(v.grade),
    }


def report_json(report: SatisfactionReport) -> dict:
    return {
        "satisfied_count": report.satisfied_count,
        "constraint_count": len(report.verdicts),
        "graded_total": _grade(report.graded_total),
        "verdicts": [verdict_json(v) for v in report.verdicts],
    }


def result_json(result: SolverResult) -> dict:
    out = {
        "members": list(result.group),
        "total_score": format_decimal(result.total_score),
        "satisfiable": result.satisfiable,
        "report": report_json(result.report),
        "trace": [
            {
                "step": s.step,
                "chosen": s.chosen,
                "candidates": list(s.candidates),
                "candidate_count": len(s.candidates),
                "totals": {u: _grade(t) for u, t in s.totals.items()},
            }
            for s in result.trace
        ],
    }
    return out


def _ratio(greedy: SolverResult, exact: Optional[SolverResult]) -> Optional[float]:
    if exact is None or exact.total_score == 0:
        return None
    return float(greedy.total_score / exact.total_score)


def run(config: RunConfig, dataset: Dataset) -> tuple[dict, ExitStatus]:
    """Solve one instance; never raises for infeasible or unevaluable data, reports it instead."""
    report: dict = {
        "version": REPORT_VERSION,
        "config": {
            "k": config.k,
            "solver": config.solver,
            "policy": config.policy.value,
            "seed": config.seed,
            "epsilon": None if config.epsilon is None else format_decimal(config.epsilon),
            "include_self": config.include_self,
        },
        "item": dataset.item.entity_id,
        "n_users": len(dataset.users),
        "n_eligible": None,
        "status": "ok",
        "greedy": None,
        "exact": None,
        "ratio": None,
        "errors": [],
    }
    try:
        report["n_eligible"] = len(eligible_users(dataset.users, dataset.profiles, dataset.item))
        greedy = exact = None
        if config.solver in ("greedy", "both"):
            greedy = greedy_construct(dataset, config.k, config.policy, config.seed,
                                      config.epsilon, config.include_self)
            report["greedy"] = result_json(greedy)
        if config.solver in ("exact", "both"):
            if report["n_eligible"] < config.k:
                raise InfeasibleError(report["n_eligible"], config.k)
            exact = exact_construct(dataset, config.k, config.include_self)
            report["exact"] = None if exact is None else result_json(exact)
        if config.solver == "both":
            report["ratio"] = _ratio(greedy, exact)
    except InfeasibleError as e:
        report["status"] = "infeasible"
        report["errors"].append({"kind": "infeasible", "message": str(e), "n_eligible": e.n_eligible, "k": e.k})
        return report, ExitStatus.INFEASIBLE
    except (EvaluationError, MissingScoreError) as e:
        report["status"] = "error"
        report["errors"].append({"kind": "evaluation", "message": str(e)})
        return report, ExitStatus.INVALID

    unsatisfiable = (
        (greedy is not None and not greedy.satisfiable)
        or (config.solver in ("exact", "both") and exact is None)
    )
    if unsatisfiable:
        report["status"] = "unsatisfiable"
        return report, ExitStatus.UNSATISFIABLE
    return report, ExitStatus.OK


@dataclass(frozen=True)
class GroupAudit:
    satisfiable: bool
    item_rejections: tuple[str, ...]
    report: SatisfactionReport


def check_group(dataset: Dataset, members: Sequence[str], include_self: bool = False) -> GroupAudit:
    """Audit an externally supplied group against all three constraint tiers."""
    records = resolve_members(list(members), dataset.user_map)
    rejections = tuple(u for u in members if not eval_user_to_item(dataset.profile(u), dataset.item))
    report = group_report(records, dataset.profiles, dataset.company_or_none(), include_self)
    ok = not rejections and report.all_satisfied
    return GroupAudit(ok, rejections, report)


def audit_json(audit: GroupAudit, members: Sequence[str]) -> dict:
    return {
        "members": list(members),
        "satisfiable": audit.satisfiable,
        "item_rejections": list(audit.item_rejections),
        "report": report_json(audit.report),
        "violated": [verdict_json(v) for v in audit.report.violated],
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def crosscheck(dataset: Dataset, members: Sequence[str], include_self: bool = False) -> bool:
    """Satisfiability straight from the constraint engine, without assembling a report."""
    return is_satisfiable_group(dataset.item, list(members), dataset.profiles, dataset.user_map,
                                dataset.company_or_none(), include_self)
