"""Leaderboard computation: per-case fractional ranks, the two aggregation
schemes, bootstrap stability and pairwise significance maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import FewerThanTwoTeams, IncompleteMatrix
from .metrics import METRIC_HIGHER_BETTER, METRIC_NAMES
from .stats import ALPHA_DEFAULT, benjamini_hochberg, signed_rank_test

RANK_THEN_AGGREGATE = "rank_then_aggregate"
AGGREGATE_THEN_RANK = "aggregate_then_rank"


@dataclass
class MetricMatrix:
    """teams x cases x metrics score array with per-metric directions."""

    teams: list[str]
    cases: list[str]
    values: np.ndarray = field(repr=False)
    metrics: tuple[str, ...] = METRIC_NAMES
    higher_better: dict = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.higher_better is None:
            self.higher_better = dict(METRIC_HIGHER_BETTER)
        expected = (len(self.teams), len(self.cases), len(self.metrics))
        if self.values.shape != expected:
            raise IncompleteMatrix(
                f"values shape {self.values.shape} != (teams, cases, metrics) {expected}"
            )
        if np.isnan(self.values).any():
            bad = np.argwhere(np.isnan(self.values))[0]
            raise IncompleteMatrix(
                f"missing value for team={self.teams[bad[0]]} "
                f"case={self.cases[bad[1]]} metric={self.metrics[bad[2]]}; "
                "impute upstream before ranking"
            )
        if len(self.teams) < 2:
            raise FewerThanTwoTeams(f"{len(self.teams)} team(s); need at least 2")
        if len(self.cases) < 1:
            raise IncompleteMatrix("need at least one case")

    def subset_cases(self, case_indices) -> "MetricMatrix":
        idx = np.asarray(case_indices)
        return MetricMatrix(
            teams=self.teams,
            cases=[self.cases[i] for i in idx],
            values=self.values[:, idx, :],
            metrics=self.metrics,
            higher_better=self.higher_better,
        )


@dataclass
class RankTable:
    teams: list[str]
    scheme: str
    aggregate_rank_score: np.ndarray  # per-team mean rank (lower = better)
    final_positions: np.ndarray  # 1-based, ties share a position
    per_case_ranks: np.ndarray = None  # teams x cases x metrics (rank_then_aggregate)
    per_metric_ranks: np.ndarray = None  # teams x metrics (aggregate_then_rank)

    def ordering(self) -> list[str]:
        order = np.argsort(self.aggregate_rank_score, kind="stable")
        return [self.teams[i] for i in order]


def _rank_column(values: np.ndarray, higher_better: bool) -> np.ndarray:
    """Fractional ranks with best = 1."""
    return rankdata(-values if higher_better else values, method="average")


def _positions_from_scores(scores: np.ndarray) -> np.ndarray:
    """1-based competition positions; equal scores share a position."""
    return np.array([1 + int(np.sum(scores < s)) for s in scores], dtype=np.int64)


def per_case_metric_ranks(m: MetricMatrix) -> np.ndarray:
    ranks = np.empty_like(m.values)
    for c in range(len(m.cases)):
        for k, name in enumerate(m.metrics):
            ranks[:, c, k] = _rank_column(m.values[:, c, k], m.higher_better[name])
    return ranks


def rank_then_aggregate(m: MetricMatrix) -> RankTable:
    """Rank teams per (case, metric), then average all ranks per team."""
    ranks = per_case_metric_ranks(m)
    score = ranks.reshape(len(m.teams), -1).mean(axis=1)
    return RankTable(
        teams=list(m.teams),
        scheme=RANK_THEN_AGGREGATE,
        aggregate_rank_score=score,
        final_positions=_positions_from_scores(score),
        per_case_ranks=ranks,
    )


def aggregate_then_rank(m: MetricMatrix, aggregator: str = "median") -> RankTable:
    """Aggregate each team's values across cases per metric, rank the
    aggregates, then average the per-metric ranks."""
    if aggregator == "median":
        agg = np.median(m.values, axis=1)  # teams x metrics
    elif aggregator == "mean":
        agg = np.mean(m.values, axis=1)
    else:
        raise ValueError(f"aggregator must be 'median' or 'mean', got {aggregator!r}")
    metric_ranks = np.empty_like(agg)
    for k, name in enumerate(m.metrics):
        metric_ranks[:, k] = _rank_column(agg[:, k], m.higher_better[name])
    score = metric_ranks.mean(axis=1)
    return RankTable(
        teams=list(m.teams),
        scheme=AGGREGATE_THEN_RANK,
        aggregate_rank_score=score,
        final_positions=_positions_from_scores(score),
        per_metric_ranks=metric_ranks,
    )


@dataclass
class BootstrapResult:
    teams: list[str]
    scheme: str
    seed: int
    positions: np.ndarray = field(repr=False)  # n_boot x n_teams

    def rank_histogram(self) -> np.ndarray:
        """counts[t, r] = times team t finished at position r+1."""
        n_teams = len(self.teams)
        hist = np.zeros((n_teams, n_teams), dtype=np.int64)
        for t in range(n_teams):
            counts = np.bincount(self.positions[:, t] - 1, minlength=n_teams)
            hist[t] = counts[:n_teams]
        return hist


def bootstrap_ranks(
    m: MetricMatrix,
    scheme: str = RANK_THEN_AGGREGATE,
    n_boot: int = 1000,
    seed: int = 0,
    aggregator: str = "median",
) -> BootstrapResult:
    """Recompute the ranking over n_boot case-resamples with replacement.

    Each resample uses an RNG stream derived from (seed, resample index), so
    results are deterministic and independent of execution order.
    """
    if n_boot < 1:
        raise ValueError(f"n_boot must be >= 1, got {n_boot}")
    if scheme not in (RANK_THEN_AGGREGATE, AGGREGATE_THEN_RANK):
        raise ValueError(f"unknown scheme {scheme!r}")
    n_cases = len(m.cases)
    positions = np.empty((n_boot, len(m.teams)), dtype=np.int64)
    for b in range(n_boot):
        rng = np.random.default_rng([seed, b])
        idx = rng.integers(0, n_cases, size=n_cases)
        sub = m.subset_cases(idx)
        table = (
            rank_then_aggregate(sub)
            if scheme == RANK_THEN_AGGREGATE
            else aggregate_then_rank(sub, aggregator)
        )
        positions[b] = table.final_positions
    return BootstrapResult(teams=list(m.teams), scheme=scheme, seed=seed, positions=positions)


def significance_map(m: MetricMatrix, alpha: float = ALPHA_DEFAULT) -> dict:
    """Pairwise paired signed-rank tests per metric, BH-adjusted within each
    metric's family. Returns {metric: teams x teams adjusted p matrix};
    diagonal entries are 1."""
    n = len(m.teams)
    out = {}
    for k, name in enumerate(m.metrics):
        mat = np.ones((n, n))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        raw = []
        for i, j in pairs:
            diffs = m.values[i, :, k] - m.values[j, :, k]
            raw.append(signed_rank_test(diffs).p_value)
        if pairs:
            adjusted, _ = benjamini_hochberg(raw, alpha)
            for (i, j), p in zip(pairs, adjusted):
                mat[i, j] = mat[j, i] = p
        out[name] = mat
    return out
