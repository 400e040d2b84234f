"""Clinical lesion phenotyping: stroke-pattern heuristic, vascular-territory
assignment from an atlas label map, and multi-class classification metrics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridMismatch, LengthMismatch, NoLesionLoad, UnknownAtlasLabel
from .labeling import LesionLabeling

SVI_DOMINANCE_FRACTION = 0.95   # largest lesion share above which a scan is SVI
SCATTERED_MAX_DOMINANCE = 0.60  # largest lesion share below which lesions count as scattered
SCATTERED_MAX_TOTAL_ML = 5.0    # or small total volume
SCATTERED_MIN_LESIONS = 3


class StrokePattern(Enum):
    NO_ISCHEMIA = "no_ischemia"
    SVI = "single_vessel_infarct"
    SCATTERED = "scattered_infarcts"
    SVI_WITH_SCATTERED = "svi_with_scattered_infarcts"


@dataclass
class PatternResult:
    label: StrokePattern
    largest_fraction: float  # largest lesion volume / total, 0 when empty
    lesion_count: int
    total_volume_ml: float


def classify_pattern(labeling: LesionLabeling) -> PatternResult:
    """Assign the stroke-pattern subgroup from a lesion labeling.

    Rules applied in precedence order:
      1. no lesion volume            -> NO_ISCHEMIA
      2. largest lesion > 95% total  -> SVI
      3. >= 3 lesions and (largest < 60% of total or total < 5 ml)
                                     -> SCATTERED
      4. anything else               -> SVI_WITH_SCATTERED
    """
    total = labeling.total_volume_ml
    count = labeling.lesion_count
    largest = labeling.largest_volume_ml
    fraction = largest / total if total > 0 else 0.0

    if total == 0.0:
        label = StrokePattern.NO_ISCHEMIA
    elif largest > SVI_DOMINANCE_FRACTION * total:
        label = StrokePattern.SVI
    elif count >= SCATTERED_MIN_LESIONS and (
        largest < SCATTERED_MAX_DOMINANCE * total or total < SCATTERED_MAX_TOTAL_ML
    ):
        label = StrokePattern.SCATTERED
    else:
        label = StrokePattern.SVI_WITH_SCATTERED

    return PatternResult(
        label=label,
        largest_fraction=fraction,
        lesion_count=count,
        total_volume_ml=total,
    )


class Territory(Enum):
    # enumeration order is the tie-break order
    MCA = "MCA"
    ACA = "ACA"
    PCA = "PCA"
    CEREBELLUM = "Cerebellum"
    PONS_MEDULLA = "PonsMedulla"


TERRITORY_ORDER = list(Territory)


@dataclass
class TerritoryAssignment:
    territory: Territory
    per_territory_load_ml: dict
    tie_flag: bool


def territory_assignment(
    labeling: LesionLabeling, atlas: np.ndarray, legend: dict
) -> TerritoryAssignment:
    """Assign the most affected vascular territory.

    The atlas is an integer label map on the lesion grid; the legend maps
    positive atlas labels to Territory values (or their names). Lesion load
    is counted voxel-wise, so a lesion spanning two territories contributes
    to both. Ties go to the lowest enumerated territory with tie_flag set.
    """
    atlas = np.asarray(atlas)
    if atlas.shape != labeling.label_map.shape:
        raise GridMismatch(
            f"atlas shape {atlas.shape} != mask shape {labeling.label_map.shape}"
        )
    resolved = {}
    for code, terr in legend.items():
        resolved[int(code)] = terr if isinstance(terr, Territory) else Territory(terr)

    present = np.unique(atlas)
    unknown = [int(v) for v in present if v != 0 and int(v) not in resolved]
    if unknown:
        raise UnknownAtlasLabel(f"atlas labels {unknown} missing from legend")

    lesion_fg = labeling.label_map > 0
    loads = {t: 0.0 for t in TERRITORY_ORDER}
    for code, terr in resolved.items():
        voxels = int(np.count_nonzero(lesion_fg & (atlas == code)))
        loads[terr] += voxels * labeling.voxel_volume_ml

    best = max(loads.values())
    if best == 0.0:
        raise NoLesionLoad("no lesion voxels fall inside any territory")
    winners = [t for t in TERRITORY_ORDER if loads[t] == best]
    return TerritoryAssignment(
        territory=winners[0],
        per_territory_load_ml={t.value: v for t, v in loads.items()},
        tie_flag=len(winners) > 1,
    )


@dataclass
class ClassificationReport:
    classes: list
    confusion: np.ndarray  # truth x predicted counts
    per_class_f1: dict
    per_class_recall: dict
    balanced_accuracy: float
    empty_classes: list  # classes with no truth instances, excluded from BA


def classification_report(truth, predicted, classes) -> ClassificationReport:
    """Per-class F1 (2TP / (2TP + FP + FN)), per-class recall and balanced
    accuracy (macro-average recall over classes with truth instances)."""
    truth = list(truth)
    predicted = list(predicted)
    if len(truth) != len(predicted):
        raise LengthMismatch(f"lengths differ: {len(truth)} vs {len(predicted)}")
    if len(truth) == 0:
        raise LengthMismatch("need at least one labeled sample")
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    confusion = np.zeros((n, n), dtype=np.int64)
    for t, p in zip(truth, predicted):
        confusion[index[t], index[p]] += 1

    f1 = {}
    recall = {}
    empty = []
    recalls_for_ba = []
    for c in classes:
        i = index[c]
        tp = int(confusion[i, i])
        fn = int(confusion[i].sum()) - tp
        fp = int(confusion[:, i].sum()) - tp
        f1[c] = 2.0 * tp / (2.0 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
        if tp + fn == 0:
            empty.append(c)
            recall[c] = float("nan")
        else:
            recall[c] = tp / (tp + fn)
            recalls_for_ba.append(recall[c])

    return ClassificationReport(
        classes=classes,
        confusion=confusion,
        per_class_f1=f1,
        per_class_recall=recall,
        balanced_accuracy=float(np.mean(recalls_for_ba)) if recalls_for_ba else 0.0,
        empty_classes=empty,
    )
