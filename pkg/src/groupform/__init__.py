"""Constrained group formation: pick k users for one item under user and company constraints."""

from .constraints import (
    COMPANY,
    AggregationPredicate,
    Aggregator,
    CompositeConstraint,
    ConstraintProfile,
    ItemPredicate,
    SatisfactionReport,
    ValuePredicate,
    Verdict,
    eval_aggregation_predicate,
    eval_composite,
    eval_group_to_group,
    eval_user_to_group,
    eval_user_to_item,
    eval_value_predicate,
    is_satisfiable_group,
)
from .dataset import Dataset
from .dsl import ConstraintSyntaxError, parse_group_constraint, parse_item_predicate, render
from .io import DatasetError, load_dataset, parse_dataset, validate
from .model import (
    AttributeRecord,
    AttributeValue,
    EvaluationError,
    Kind,
    MissingScoreError,
    Op,
    ScoreTable,
    attribute_lookup,
    compare,
    score_of,
)
from .solver import (
    CountingPolicy,
    InfeasibleError,
    SolverResult,
    eligible_users,
    exact_construct,
    greedy_construct,
    group_score,
    policy_total,
)
from .synth import generate_synthetic

__version__ = "0.1.0"
