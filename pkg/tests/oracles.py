"""Independent brute-force reference implementations used only by tests.

These deliberately avoid the code paths they check: components by BFS flood
fill over coordinate sets, metrics by explicit set arithmetic, signed-rank
p-values by literal enumeration of all sign patterns.
"""

from itertools import product

import numpy as np


def neighbor_offsets(conn):
    offsets = []
    for d in product((-1, 0, 1), repeat=3):
        if d == (0, 0, 0):
            continue
        s = sum(abs(x) for x in d)
        if (conn == 6 and s == 1) or (conn == 18 and s <= 2) or (conn == 26):
            offsets.append(d)
    return offsets


def flood_fill_components(data, conn=26):
    """List of frozensets of coordinates, one per connected component,
    ordered by smallest coordinate."""
    fg = set(map(tuple, np.argwhere(np.asarray(data) != 0)))
    offsets = neighbor_offsets(conn)
    components = []
    while fg:
        seed = min(fg)
        stack = [seed]
        fg.discard(seed)
        comp = {seed}
        while stack:
            x, y, z = stack.pop()
            for dx, dy, dz in offsets:
                v = (x + dx, y + dy, z + dz)
                if v in fg:
                    fg.discard(v)
                    comp.add(v)
                    stack.append(v)
        components.append(frozenset(comp))
    return components


def brute_force_metrics(gt_data, pred_data, voxel_ml, conn=26):
    """All four case metrics from first principles."""
    gt = set(map(tuple, np.argwhere(np.asarray(gt_data) != 0)))
    pred = set(map(tuple, np.argwhere(np.asarray(pred_data) != 0)))

    denom = len(gt) + len(pred)
    dsc = 1.0 if denom == 0 else 2.0 * len(gt & pred) / denom
    avd = abs(len(pred) - len(gt)) * voxel_ml

    gt_comps = flood_fill_components(gt_data, conn)
    pred_comps = flood_fill_components(pred_data, conn)
    tp = sum(1 for c in gt_comps if c & pred)
    fn = len(gt_comps) - tp
    fp = sum(1 for c in pred_comps if not (c & gt))
    if tp + fp + fn == 0:
        f1 = 1.0
    else:
        f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    ald = abs(len(gt_comps) - len(pred_comps))
    return {
        "dsc": dsc,
        "avd_ml": avd,
        "lesion_f1": f1,
        "ald": ald,
        "gt_lesion_count": len(gt_comps),
        "pred_lesion_count": len(pred_comps),
        "tp": tp,
        "fp": fp,
        "fn": fn,
    }


def signed_rank_p_enumeration(diffs):
    """Two-sided exact signed-rank p by enumerating all 2^n sign patterns."""
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 1.0
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(n)
    # average ranks for ties
    sorted_abs = absd[order]
    i = 0
    while i < n:
        j = i
        while j < n and sorted_abs[j] == sorted_abs[i]:
            j += 1
        ranks[order[i:j]] = (i + 1 + j) / 2.0
        i = j
    w_obs = ranks[d > 0].sum()
    lower = higher = 0
    for bits in range(2**n):
        w = sum(ranks[k] for k in range(n) if bits >> k & 1)
        if w <= w_obs + 1e-9:
            lower += 1
        if w >= w_obs - 1e-9:
            higher += 1
    total = 2**n
    return min(1.0, 2.0 * min(lower, higher) / total)


def rank_sum_p_enumeration(a, b):
    """Two-sided exact rank-sum p by enumerating group-a rank subsets."""
    from itertools import combinations

    a = list(a)
    b = list(b)
    n_a = len(a)
    combined = sorted(a + b)
    n = len(combined)
    assert len(set(combined)) == n, "enumeration oracle assumes no ties"
    rank_of = {v: i + 1 for i, v in enumerate(combined)}
    r_obs = sum(rank_of[v] for v in a)
    lower = higher = total = 0
    for subset in combinations(range(1, n + 1), n_a):
        s = sum(subset)
        total += 1
        if s <= r_obs:
            lower += 1
        if s >= r_obs:
            higher += 1
    return min(1.0, 2.0 * min(lower, higher) / total)
