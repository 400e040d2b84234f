"""Nonparametric statistics toolkit: Wilcoxon tests (exact and approximate),
Benjamini-Hochberg FDR, Pearson correlation and Bland-Altman agreement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from .errors import ConstantInput, EmptyInput, LengthMismatch, OutOfRangeP

SIGNED_RANK_EXACT_MAX_N = 25
RANK_SUM_EXACT_MAX_MIN_N = 8
ALPHA_DEFAULT = 0.05


@dataclass
class TestResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str  # "exact" | "normal-approximation"


def _tie_term(ranked_values: np.ndarray) -> float:
    """Sum of t^3 - t over tie groups."""
    _, counts = np.unique(ranked_values, return_counts=True)
    t = counts.astype(np.float64)
    return float(np.sum(t**3 - t))


def _signed_rank_distribution(ranks: np.ndarray) -> np.ndarray:
    """Null distribution of 2*W+ over all 2^n sign patterns.

    Ranks are average ranks (half-integers under ties); doubling makes the
    DP integral. Returns counts indexed by doubled statistic value.
    """
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        counts[r:] += counts[: counts.size - r]
    return counts


def signed_rank_test(diffs) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped; ties get average ranks. Exact p by full
    enumeration of sign patterns for n_effective <= 25, tie- and
    continuity-corrected normal approximation above. All-zero input gives
    p = 1 by convention.
    """
    d = np.asarray(diffs, dtype=np.float64)
    if d.size == 0:
        raise EmptyInput("signed_rank_test needs at least one pair")
    d = d[d != 0.0]
    n = int(d.size)
    if n == 0:
        return TestResult(statistic=0.0, p_value=1.0, n_effective=0, method="exact")

    absd = np.abs(d)
    ranks = rankdata(absd)
    w_plus = float(ranks[d > 0].sum())

    if n <= SIGNED_RANK_EXACT_MAX_N:
        counts = _signed_rank_distribution(ranks)
        total = counts.sum()
        w2 = int(round(2 * w_plus))
        p_low = counts[: w2 + 1].sum() / total
        p_high = counts[w2:].sum() / total
        p = min(1.0, 2.0 * min(p_low, p_high))
        return TestResult(statistic=w_plus, p_value=p, n_effective=n, method="exact")

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(absd) / 48.0
    z = max(0.0, abs(w_plus - mean) - 0.5) / np.sqrt(var)
    p = min(1.0, 2.0 * norm.sf(z))
    return TestResult(
        statistic=w_plus, p_value=p, n_effective=n, method="normal-approximation"
    )


def _rank_sum_distribution(n_small: int, n_total: int) -> np.ndarray:
    """Counts of subsets of {1..n_total} of size n_small by rank sum."""
    max_sum = sum(range(n_total - n_small + 1, n_total + 1))
    dp = np.zeros((n_small + 1, max_sum + 1), dtype=np.float64)
    dp[0, 0] = 1.0
    for v in range(1, n_total + 1):
        dp[1:, v:] += dp[:-1, : max_sum + 1 - v]
    return dp[n_small]


def rank_sum_test(group_a, group_b) -> TestResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney U) test.

    Exact by enumeration of rank arrangements when min(n) <= 8 and there are
    no ties; otherwise tie-corrected normal approximation with continuity
    correction. The statistic is U for group_a.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("rank_sum_test needs two non-empty groups")
    n_a, n_b = int(a.size), int(b.size)
    combined = np.concatenate([a, b])
    ranks = rankdata(combined)
    r_a = float(ranks[:n_a].sum())
    u_a = r_a - n_a * (n_a + 1) / 2.0
    has_ties = np.unique(combined).size < combined.size

    if min(n_a, n_b) <= RANK_SUM_EXACT_MAX_MIN_N and not has_ties:
        n_small = min(n_a, n_b)
        r_small = r_a if n_a <= n_b else float(ranks[n_a:].sum())
        dist = _rank_sum_distribution(n_small, n_a + n_b)
        total = dist.sum()
        r = int(round(r_small))
        p_low = dist[: r + 1].sum() / total
        p_high = dist[r:].sum() / total
        p = min(1.0, 2.0 * min(p_low, p_high))
        return TestResult(statistic=u_a, p_value=p, n_effective=n_a + n_b, method="exact")

    n = n_a + n_b
    mean = n_a * n_b / 2.0
    tie_corr = _tie_term(combined) / (n * (n - 1)) if n > 1 else 0.0
    var = n_a * n_b / 12.0 * ((n + 1) - tie_corr)
    z = max(0.0, abs(u_a - mean) - 0.5) / np.sqrt(var) if var > 0 else 0.0
    p = min(1.0, 2.0 * norm.sf(z))
    return TestResult(
        statistic=u_a, p_value=p, n_effective=n, method="normal-approximation"
    )


def benjamini_hochberg(p_values, alpha: float = ALPHA_DEFAULT):
    """Step-up FDR adjustment.

    Returns (adjusted p-values, reject flags) in the input order; adjusted
    p_i = min over j >= rank(i) of m*p_(j)/j, capped at 1.
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return np.array([]), np.array([], dtype=bool)
    if np.any((p < 0) | (p > 1)):
        raise OutOfRangeP(f"p-values must lie in [0,1], got {p}")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    return adjusted, adjusted <= alpha


def pearson_r(x, y) -> float:
    """Pearson correlation coefficient."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.size != ya.size:
        raise LengthMismatch(f"lengths differ: {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise EmptyInput("pearson_r needs at least two pairs")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sx = np.sqrt(np.sum(xc**2))
    sy = np.sqrt(np.sum(yc**2))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInput("pearson_r undefined for a constant sequence")
    r = float(np.sum(xc * yc) / (sx * sy))
    return max(-1.0, min(1.0, r))


@dataclass
class BlandAltman:
    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    diff_percentiles: tuple[float, float, float]  # 5th, 50th, 95th


def bland_altman(reference, predicted) -> BlandAltman:
    """Agreement between reference and predicted values.

    Differences are reference - predicted; limits of agreement at
    mean +/- 1.96 sample standard deviations; percentiles by linear
    interpolation.
    """
    ref = np.asarray(reference, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.float64)
    if ref.size != pred.size:
        raise LengthMismatch(f"lengths differ: {ref.size} vs {pred.size}")
    if ref.size == 0:
        raise EmptyInput("bland_altman needs at least one pair")
    diffs = ref - pred
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1)) if diffs.size > 1 else 0.0
    p5, p50, p95 = np.percentile(diffs, [5, 50, 95])
    return BlandAltman(
        mean_diff=mean,
        sd_diff=sd,
        loa_low=mean - 1.96 * sd,
        loa_high=mean + 1.96 * sd,
        diff_percentiles=(float(p5), float(p50), float(p95)),
    )


def summary_stats(values) -> dict:
    """Median, IQR and 5th/95th percentiles (linear interpolation)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyInput("summary_stats over empty values")
    q25, q50, q75 = np.percentile(v, [25, 50, 75])
    p5, p95 = np.percentile(v, [5, 95])
    return {
        "median": float(q50),
        "iqr": float(q75 - q25),
        "p5": float(p5),
        "p95": float(p95),
        "n": int(v.size),
    }
