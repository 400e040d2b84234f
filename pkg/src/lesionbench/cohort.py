"""Cohort manifests, batch evaluation and subgroup analysis."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestError
from .labeling import DEFAULT_CONNECTIVITY, connected_components
from .metrics import METRIC_NAMES, evaluate_case
from .nifti import read_mask
from .phenotype import classify_pattern
from .stats import benjamini_hochberg, rank_sum_test, summary_stats

log = logging.getLogger(__name__)

SIZE_BIN_SMALL_ML = 5.0
SIZE_BIN_LARGE_ML = 20.0

_RESERVED_COLUMNS = {"case_id", "gt_path", "center_id", "phase", "seen_center"}
_PHASES = {"acute", "subacute"}


@dataclass
class CaseRecord:
    case_id: str
    gt_path: str
    predictions: dict  # algorithm name -> mask path
    center_id: str = None
    phase: str = None
    seen_center: bool = None
    clinical: dict = field(default_factory=dict)


def size_bin(gt_volume_ml: float) -> str:
    """Lesion size subgroup: <5 ml, [5, 20) ml, >=20 ml."""
    if gt_volume_ml < SIZE_BIN_SMALL_ML:
        return "under5"
    if gt_volume_ml < SIZE_BIN_LARGE_ML:
        return "from5to20"
    return "over20"


def _parse_bool(value, where: str):
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes"):
        return True
    if text in ("0", "false", "no"):
        return False
    raise ManifestError(f"{where}: cannot parse boolean {value!r}")


def _record_from_dict(raw: dict, where: str) -> CaseRecord:
    case_id = str(raw.get("case_id") or "").strip()
    if not case_id:
        raise ManifestError(f"{where}: missing case_id")
    gt_path = str(raw.get("gt_path") or "").strip()
    if not gt_path:
        raise ManifestError(f"{where}: missing gt_path")

    predictions = dict(raw.get("predictions") or {})
    clinical = dict(raw.get("clinical") or {})
    for key, value in raw.items():
        if key in _RESERVED_COLUMNS or key in ("predictions", "clinical"):
            continue
        if key.startswith("pred_"):
            if value not in (None, ""):
                predictions[key[len("pred_"):]] = str(value)
        elif value not in (None, ""):
            clinical[key] = value

    phase = raw.get("phase")
    if phase not in (None, ""):
        phase = str(phase).strip().lower()
        if phase not in _PHASES:
            raise ManifestError(f"{where}: phase must be acute|subacute, got {phase!r}")
    else:
        phase = None

    center = raw.get("center_id")
    return CaseRecord(
        case_id=case_id,
        gt_path=gt_path,
        predictions=predictions,
        center_id=str(center) if center not in (None, "") else None,
        phase=phase,
        seen_center=_parse_bool(raw.get("seen_center"), where),
        clinical=clinical,
    )


def load_manifest(path) -> list[CaseRecord]:
    """Load and validate a cohort manifest (CSV or JSON).

    CSV columns: case_id, gt_path, pred_<algorithm>..., optional center_id,
    phase, seen_center; any other column lands in the clinical dict. JSON is
    a list of objects with the same keys (predictions may be nested).
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")

    rows: list[dict]
    if path.suffix.lower() == ".json":
        with open(path) as f:
            doc = json.load(f)
        if not isinstance(doc, list):
            raise ManifestError(f"{path}: JSON manifest must be a list of case objects")
        rows = doc
    else:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or "case_id" not in reader.fieldnames:
                raise ManifestError(f"{path}: CSV manifest needs a case_id column")
            rows = list(reader)

    records = []
    seen = set()
    for i, raw in enumerate(rows):
        where = f"{path.name} row {i + 1}"
        rec = _record_from_dict(raw, where)
        if rec.case_id in seen:
            raise ManifestError(f"{where}: duplicate case_id {rec.case_id!r}")
        seen.add(rec.case_id)
        records.append(rec)
    if not records:
        raise ManifestError(f"{path}: empty manifest")
    return sorted(records, key=lambda r: r.case_id)


@dataclass
class CohortResult:
    rows: list  # one dict per (case, algorithm): metrics or error
    case_info: dict  # case_id -> {gt_volume_ml, size_bin, pattern, center, phase}
    summaries: dict  # algorithm -> metric -> summary_stats dict
    failures: int


def _evaluate_one(record: CaseRecord, algorithm: str, conn: int) -> dict:
    row = {"case_id": record.case_id, "algorithm": algorithm}
    try:
        gt = read_mask(record.gt_path)
        pred = read_mask(record.predictions[algorithm])
        cm = evaluate_case(gt, pred, conn)
        row.update(cm.as_dict())
        row["error"] = None
    except Exception as exc:  # recorded per-case, run continues
        for name in METRIC_NAMES:
            row[name] = None
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def evaluate_cohort(
    records: list[CaseRecord],
    algorithms: list[str] = None,
    conn: int = DEFAULT_CONNECTIVITY,
    workers: int = 1,
) -> CohortResult:
    """Evaluate every (case, algorithm) pair plus per-algorithm summaries.

    Failed cases are kept as rows with null metrics and an error message.
    Output ordering is canonical by (case_id, algorithm) regardless of the
    worker count.
    """
    if algorithms is None:
        algorithms = sorted({a for r in records for a in r.predictions})
    if not algorithms:
        raise ManifestError("no algorithms to evaluate (no pred_ columns found)")

    jobs = []
    for rec in records:
        for alg in algorithms:
            if alg not in rec.predictions:
                jobs.append((rec, alg, "missing prediction path"))
            else:
                jobs.append((rec, alg, None))

    def run(job):
        rec, alg, problem = job
        if problem is not None:
            row = {"case_id": rec.case_id, "algorithm": alg, "error": problem}
            row.update({name: None for name in METRIC_NAMES})
            return row
        return _evaluate_one(rec, alg, conn)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    rows.sort(key=lambda r: (r["case_id"], r["algorithm"]))

    # per-case grouping info from the ground truth
    case_info = {}
    for rec in records:
        info = {"center_id": rec.center_id, "phase": rec.phase}
        try:
            gt = read_mask(rec.gt_path)
            labeling = connected_components(gt, conn)
            pattern = classify_pattern(labeling)
            info.update(
                gt_volume_ml=gt.volume_ml,
                size_bin=size_bin(gt.volume_ml),
                pattern=pattern.label.value,
                lesion_count=labeling.lesion_count,
            )
        except Exception as exc:
            info["error"] = f"{type(exc).__name__}: {exc}"
        case_info[rec.case_id] = info

    summaries = {}
    for alg in algorithms:
        ok = [r for r in rows if r["algorithm"] == alg and r["error"] is None]
        summaries[alg] = {
            name: summary_stats([r[name] for r in ok]) if ok else None
            for name in METRIC_NAMES
        }

    failures = sum(1 for r in rows if r["error"] is not None)
    return CohortResult(rows=rows, case_info=case_info, summaries=summaries, failures=failures)


def subgroup_analysis(rows: list, groups: dict, metrics=METRIC_NAMES) -> dict:
    """Per-group metric summaries and pairwise cross-group rank-sum tests.

    rows: metric rows for ONE algorithm; groups: case_id -> group label.
    P-values are BH-adjusted within each metric's family of group pairs.
    Groups with no members are dropped with a warning.
    """
    by_group: dict = {}
    for row in rows:
        if row.get("error") is not None:
            continue
        g = groups.get(row["case_id"])
        if g is None:
            continue
        by_group.setdefault(g, []).append(row)
    names = sorted(by_group)
    if not names:
        log.warning("subgroup_analysis: no group has any member")
        return {"groups": {}, "pairwise": {}}

    grouped_summaries = {
        g: {m: summary_stats([r[m] for r in by_group[g]]) for m in metrics}
        for g in names
    }

    pairwise = {}
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    for m in metrics:
        raw = []
        for a, b in pairs:
            va = [r[m] for r in by_group[a]]
            vb = [r[m] for r in by_group[b]]
            raw.append(rank_sum_test(va, vb).p_value)
        if pairs:
            adjusted, _ = benjamini_hochberg(raw)
            pairwise[m] = {f"{a}|{b}": float(p) for (a, b), p in zip(pairs, adjusted)}
        else:
            pairwise[m] = {}
    return {"groups": grouped_summaries, "pairwise": pairwise}
