"""Voxel-wise majority-vote fusion of candidate binary masks."""

from __future__ import annotations

import numpy as np

from .errors import EmptyStack, GridMismatch
from .nifti import VoxelMask


def _check_stack(masks: list[VoxelMask]) -> None:
    if not masks:
        raise EmptyStack("majority vote over zero masks")
    ref = masks[0].header
    for i, m in enumerate(masks[1:], start=1):
        if not ref.same_grid(m.header):
            raise GridMismatch(
                f"mask {i} grid {m.header.dims}/{m.header.pixdim} != "
                f"mask 0 grid {ref.dims}/{ref.pixdim}"
            )


def vote_count_map(masks: list[VoxelMask]) -> np.ndarray:
    """Per-voxel sum of votes across the stack, in [0, K]."""
    _check_stack(masks)
    counts = np.zeros(masks[0].header.dims, dtype=np.int32)
    for m in masks:
        counts += m.data
    return counts


def majority_vote(masks: list[VoxelMask]) -> VoxelMask:
    """Fuse K grid-matched masks: a voxel is lesion iff at least
    floor(K/2)+1 masks agree (strict majority; even-K ties vote background)."""
    counts = vote_count_map(masks)
    threshold = len(masks) // 2 + 1
    fused = (counts >= threshold).astype(np.uint8)
    return VoxelMask(header=masks[0].header, data=fused)
