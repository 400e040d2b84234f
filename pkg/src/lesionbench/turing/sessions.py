"""Blinded session generation for the rating study.

Sessions are a pure function of (pool, raters, seed): each rater gets 40 or
41 items in randomized order, with expert/algorithm sources balanced within
one item per session. The source never appears in rater-facing payloads.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from ..errors import InsufficientPool

SOURCE_EXPERT = "expert"
SOURCE_ALGORITHM = "algorithm"
PER_RATER_RANGE = (40, 41)
SCORE_MIN, SCORE_MAX = 1, 6


@dataclass
class SessionItem:
    item_id: str
    case_id: str
    source: str  # expert | algorithm; hidden from raters
    renders: list  # two axial + one sagittal rendering paths/URLs


@dataclass
class RatingSession:
    session_id: str
    rater_id: str
    items: list  # ordered SessionItem list
    scores: dict = field(default_factory=dict)  # item_id -> score record
    closed: bool = False

    @property
    def total(self) -> int:
        return len(self.items)

    @property
    def scored(self) -> int:
        return len(self.scores)

    @property
    def complete(self) -> bool:
        return self.scored >= self.total

    def next_unscored(self) -> SessionItem:
        for item in self.items:
            if item.item_id not in self.scores:
                return item
        return None

    def source_balance(self) -> int:
        """#expert - #algorithm over the session's items."""
        n_expert = sum(1 for i in self.items if i.source == SOURCE_EXPERT)
        return n_expert - (len(self.items) - n_expert)


def _session_id(seed: int, rater_id: str) -> str:
    digest = hashlib.sha1(f"{seed}/{rater_id}".encode()).hexdigest()
    return f"sess-{digest[:12]}"


def create_sessions(
    pool: list[dict],
    raters: list[str],
    seed: int,
    per_rater: tuple[int, int] = PER_RATER_RANGE,
) -> list[RatingSession]:
    """Build one randomized, blinded session per rater.

    Pool entries are dicts with case_id, expert_renders and algorithm_renders
    (three rendering refs each). Each rater draws their own sample of cases,
    each case shown with exactly one source.
    """
    if len(set(r["case_id"] for r in pool)) != len(pool):
        raise InsufficientPool("pool has duplicate case ids")
    needed = max(per_rater)
    if len(pool) < needed:
        raise InsufficientPool(f"pool has {len(pool)} cases, need at least {needed}")
    for entry in pool:
        for key in ("expert_renders", "algorithm_renders"):
            if len(entry.get(key) or []) != 3:
                raise InsufficientPool(
                    f"case {entry.get('case_id')!r} needs 3 {key} entries"
                )

    sessions = []
    for rater in raters:
        rng = random.Random(f"{seed}/{rater}")
        n_items = rng.choice(list(range(per_rater[0], per_rater[1] + 1)))
        cases = rng.sample(pool, n_items)

        sources = [SOURCE_EXPERT] * (n_items // 2) + [SOURCE_ALGORITHM] * (n_items // 2)
        if n_items % 2:
            sources.append(rng.choice((SOURCE_EXPERT, SOURCE_ALGORITHM)))
        rng.shuffle(sources)

        sid = _session_id(seed, rater)
        items = []
        for i, (entry, source) in enumerate(zip(cases, sources)):
            renders = entry["expert_renders" if source == SOURCE_EXPERT else "algorithm_renders"]
            items.append(
                SessionItem(
                    item_id=f"{sid}-{i:03d}",
                    case_id=entry["case_id"],
                    source=source,
                    renders=list(renders),
                )
            )
        sessions.append(RatingSession(session_id=sid, rater_id=rater, items=items))
    return sessions
