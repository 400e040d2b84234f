"""lesionbench: evaluation engine for volumetric ischemic-lesion segmentation."""

from .nifti import VolumeHeader, VoxelMask, read_mask, read_volume, write_mask, write_volume
from .labeling import LesionLabeling, connected_components, mask_volume_ml
from .metrics import CaseMetrics, ald, avd, dice, evaluate_case, lesion_f1
from .ensemble import majority_vote, vote_count_map

__version__ = "0.1.0"

__all__ = [
    "CaseMetrics",
    "LesionLabeling",
    "VolumeHeader",
    "VoxelMask",
    "ald",
    "avd",
    "connected_components",
    "dice",
    "evaluate_case",
    "lesion_f1",
    "majority_vote",
    "mask_volume_ml",
    "read_mask",
    "read_volume",
    "vote_count_map",
    "write_mask",
    "write_volume",
]
