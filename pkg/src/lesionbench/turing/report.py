"""Expert-vs-algorithm analysis of completed rating sessions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NoCompletedSessions
from ..stats import rank_sum_test, signed_rank_test, summary_stats
from .sessions import SOURCE_ALGORITHM, SOURCE_EXPERT

DIMENSIONS = ("completeness", "correctness")


@dataclass
class TuringReport:
    rater_count: int
    scored_items: int
    per_source_scores: dict  # source -> dimension -> list of scores
    per_source_summary: dict  # source -> dimension -> summary_stats
    rater_level_p: dict  # dimension -> p (paired signed-rank on rater means)
    item_level_p: dict  # dimension -> p (pooled rank-sum, labeled secondary)
    per_rater: list  # per-rater mean scores by source


def turing_report(sessions) -> TuringReport:
    """Compare sources using only scored items.

    Primary test: paired signed-rank over rater-level mean scores per source
    (one pair per rater). A pooled item-level rank-sum is also emitted.
    """
    pooled = {s: {d: [] for d in DIMENSIONS} for s in (SOURCE_EXPERT, SOURCE_ALGORITHM)}
    per_rater = []
    rater_means = {d: {SOURCE_EXPERT: [], SOURCE_ALGORITHM: []} for d in DIMENSIONS}

    scored_items = 0
    for session in sessions:
        by_source = {s: {d: [] for d in DIMENSIONS} for s in pooled}
        for item in session.items:
            score = session.scores.get(item.item_id)
            if score is None:
                continue
            scored_items += 1
            for d in DIMENSIONS:
                pooled[item.source][d].append(score[d])
                by_source[item.source][d].append(score[d])
        entry = {"rater_id": session.rater_id, "session_id": session.session_id}
        usable = True
        for d in DIMENSIONS:
            for s in pooled:
                vals = by_source[s][d]
                entry[f"{s}_{d}_mean"] = float(np.mean(vals)) if vals else None
                if not vals:
                    usable = False
        per_rater.append(entry)
        if usable:
            for d in DIMENSIONS:
                for s in pooled:
                    rater_means[d][s].append(entry[f"{s}_{d}_mean"])

    if scored_items == 0:
        raise NoCompletedSessions("no session contains any scored item")

    rater_level_p = {}
    item_level_p = {}
    for d in DIMENSIONS:
        alg = rater_means[d][SOURCE_ALGORITHM]
        exp = rater_means[d][SOURCE_EXPERT]
        if alg:
            diffs = np.asarray(alg) - np.asarray(exp)
            rater_level_p[d] = signed_rank_test(diffs).p_value
        else:
            rater_level_p[d] = None
        if pooled[SOURCE_ALGORITHM][d] and pooled[SOURCE_EXPERT][d]:
            item_level_p[d] = rank_sum_test(
                pooled[SOURCE_ALGORITHM][d], pooled[SOURCE_EXPERT][d]
            ).p_value
        else:
            item_level_p[d] = None

    per_source_summary = {
        s: {d: (summary_stats(v) if v else None) for d, v in dims.items()}
        for s, dims in pooled.items()
    }
    return TuringReport(
        rater_count=len(sessions),
        scored_items=scored_items,
        per_source_scores=pooled,
        per_source_summary=per_source_summary,
        rater_level_p=rater_level_p,
        item_level_p=item_level_p,
        per_rater=per_rater,
    )
