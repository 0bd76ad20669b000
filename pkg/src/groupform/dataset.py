from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

from .constraints import COMPANY, ConstraintProfile
from .model import AttributeRecord, ScoreTable


@dataclass(frozen=True)
class Dataset:
    """One item, a user population, per-user constraint profiles, the company profile and scores."""

    item: AttributeRecord
    users: tuple[AttributeRecord, ...]
    profiles: Mapping[str, ConstraintProfile] = field(default_factory=dict)
    company: ConstraintProfile = field(default_factory=ConstraintProfile.company)
    scores: ScoreTable = field(default_factory=ScoreTable)

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if isinstance(self.profiles, (list, tuple)):
            object.__setattr__(self, "profiles", {p.owner: p for p in self.profiles})
        if self.company.owner != COMPANY:
            raise ValueError(f"company profile must be owned by {COMPANY!r}")

    @cached_property
    def user_map(self) -> dict[str, AttributeRecord]:
        return {u.entity_id: u for u in self.users}

    def profile(self, user_id: str) -> ConstraintProfile:
        p = self.profiles.get(user_id)
        return p if p is not None else ConstraintProfile(user_id)

    def score(self, user_id: str):
        return self.scores.score(user_id, self.item.entity_id)

    def company_or_none(self) -> Optional[ConstraintProfile]:
        return self.company if self.company.group_constraints else None
