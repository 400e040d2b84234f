"""Per-case segmentation metrics: Dice, absolute volume difference,
lesion-wise F1 and absolute lesion count difference."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import GridMismatch
from .labeling import DEFAULT_CONNECTIVITY, LesionLabeling, connected_components
from .nifti import VoxelMask


@dataclass
class CaseMetrics:
    dsc: float
    avd_ml: float
    lesion_f1: float
    ald: int
    gt_volume_ml: float
    pred_volume_ml: float
    gt_lesion_count: int
    pred_lesion_count: int

    def as_dict(self) -> dict:
        return asdict(self)


def _check_grid(gt: VoxelMask, pred: VoxelMask) -> None:
    if not gt.header.same_grid(pred.header):
        raise GridMismatch(
            f"gt grid {gt.header.dims}/{gt.header.pixdim} != "
            f"pred grid {pred.header.dims}/{pred.header.pixdim}"
        )


def dice(gt: VoxelMask, pred: VoxelMask) -> float:
    """2|A∩B| / (|A|+|B|); both-empty pairs score 1.0 by convention."""
    _check_grid(gt, pred)
    a = gt.data.astype(bool)
    b = pred.data.astype(bool)
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(a & b)) / denom


def avd(gt: VoxelMask, pred: VoxelMask) -> float:
    """Absolute volume difference in ml."""
    _check_grid(gt, pred)
    return abs(pred.volume_ml - gt.volume_ml)


def lesion_f1(
    gt_labels: LesionLabeling, pred_labels: LesionLabeling
) -> tuple[float, int, int, int]:
    """Lesion-instance detection F1 under any-voxel-overlap matching.

    TP: GT lesions touched by any predicted voxel. FN: untouched GT lesions.
    FP: predicted lesions with no GT overlap. Returns (f1, tp, fp, fn);
    both-empty pairs score 1.0.
    """
    if gt_labels.label_map.shape != pred_labels.label_map.shape:
        raise GridMismatch(
            f"label map shapes differ: {gt_labels.label_map.shape} vs "
            f"{pred_labels.label_map.shape}"
        )
    gt_map = gt_labels.label_map
    pred_fg = pred_labels.label_map > 0
    gt_fg = gt_map > 0

    touched_gt = np.unique(gt_map[pred_fg & gt_fg])
    tp = int(touched_gt.size)
    fn = gt_labels.lesion_count - tp

    touched_pred = np.unique(pred_labels.label_map[pred_fg & gt_fg])
    fp = pred_labels.lesion_count - int(touched_pred.size)

    if tp + fp + fn == 0:
        return 1.0, 0, 0, 0
    return 2.0 * tp / (2.0 * tp + fp + fn), tp, fp, fn


def ald(gt_labels: LesionLabeling, pred_labels: LesionLabeling) -> int:
    """Absolute lesion count difference."""
    return abs(gt_labels.lesion_count - pred_labels.lesion_count)


def evaluate_case(
    gt: VoxelMask, pred: VoxelMask, conn: int = DEFAULT_CONNECTIVITY
) -> CaseMetrics:
    """All four metrics for one (ground truth, prediction) pair."""
    _check_grid(gt, pred)
    gt_labels = connected_components(gt, conn)
    pred_labels = connected_components(pred, conn)
    f1, _, _, _ = lesion_f1(gt_labels, pred_labels)
    return CaseMetrics(
        dsc=dice(gt, pred),
        avd_ml=avd(gt, pred),
        lesion_f1=f1,
        ald=ald(gt_labels, pred_labels),
        gt_volume_ml=gt.volume_ml,
        pred_volume_ml=pred.volume_ml,
        gt_lesion_count=gt_labels.lesion_count,
        pred_lesion_count=pred_labels.lesion_count,
    )


METRIC_NAMES = ("dsc", "avd_ml", "lesion_f1", "ald")
# direction per metric: True = higher is better
METRIC_HIGHER_BETTER = {"dsc": True, "avd_ml": False, "lesion_f1": True, "ald": False}
