"""Connected-component decomposition of lesion masks and volume helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .nifti import VoxelMask

DEFAULT_CONNECTIVITY = 26

# Neighbor offsets per 3-D connectivity class.
_OFFSETS = {}
for _kind, _pred in ((6, lambda s: s == 1), (18, lambda s: s <= 2), (26, lambda s: s <= 3)):
    _OFFSETS[_kind] = tuple(
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0) and _pred(abs(dx) + abs(dy) + abs(dz))
    )


def _check_connectivity(conn: int) -> int:
    if conn not in (6, 18, 26):
        raise ValueError(f"connectivity must be 6, 18 or 26, got {conn}")
    return conn


def _structure(conn: int) -> np.ndarray:
    order = {6: 1, 18: 2, 26: 3}[conn]
    return ndimage.generate_binary_structure(3, order)


@dataclass
class LesionLabeling:
    """Decomposition of a binary mask into disconnected lesion instances.

    label_map holds 0 for background and 1..n for lesions, numbered by
    lexicographic order of each lesion's first voxel.
    """

    label_map: np.ndarray = field(repr=False)
    lesion_count: int
    lesion_voxels: np.ndarray
    lesion_volumes_ml: np.ndarray
    voxel_volume_ml: float

    @property
    def total_volume_ml(self) -> float:
        return float(self.lesion_volumes_ml.sum())

    @property
    def largest_volume_ml(self) -> float:
        return float(self.lesion_volumes_ml.max()) if self.lesion_count else 0.0


def _relabel_first_voxel_order(label_map: np.ndarray, n: int) -> np.ndarray:
    """Renumber labels 1..n by lexicographic first-voxel order (C order)."""
    if n == 0:
        return label_map
    flat = label_map.ravel(order="C")
    first = np.full(n + 1, flat.size, dtype=np.int64)
    idx = np.flatnonzero(flat)
    # first occurrence per label; reversed assignment keeps the earliest index
    first[flat[idx[::-1]]] = idx[::-1]
    order = np.argsort(first[1:], kind="stable")  # old label-1 sorted by first voxel
    remap = np.zeros(n + 1, dtype=label_map.dtype)
    remap[order + 1] = np.arange(1, n + 1)
    return remap[label_map]


def connected_components(mask: VoxelMask, conn: int = DEFAULT_CONNECTIVITY) -> LesionLabeling:
    """Label disconnected lesions in a binary mask.

    Deterministic: labels follow lexicographic first-voxel order. Empty
    masks yield lesion_count 0.
    """
    _check_connectivity(conn)
    label_map, n = ndimage.label(mask.data, structure=_structure(conn))
    label_map = _relabel_first_voxel_order(label_map, n)
    voxels = np.bincount(label_map.ravel(), minlength=n + 1)[1:].astype(np.int64)
    vol = mask.voxel_volume_ml
    return LesionLabeling(
        label_map=label_map,
        lesion_count=int(n),
        lesion_voxels=voxels,
        lesion_volumes_ml=voxels * vol,
        voxel_volume_ml=vol,
    )


def connected_components_union_find(
    mask: VoxelMask, conn: int = DEFAULT_CONNECTIVITY
) -> LesionLabeling:
    """Two-pass union-find labeling; pure-Python reference for cross-checks."""
    _check_connectivity(conn)
    data = mask.data
    shape = data.shape
    # only backward neighbors (already visited in lexicographic scan order)
    back = [o for o in _OFFSETS[conn] if o < (0, 0, 0)]

    parent: dict[tuple[int, int, int], tuple[int, int, int]] = {}

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    coords = np.argwhere(data)
    fg = set(map(tuple, coords))
    for v in sorted(fg):
        parent[v] = v
        for dx, dy, dz in back:
            u = (v[0] + dx, v[1] + dy, v[2] + dz)
            if 0 <= u[0] < shape[0] and 0 <= u[1] < shape[1] and 0 <= u[2] < shape[2] and u in fg:
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[max(ru, rv)] = min(ru, rv)

    label_map = np.zeros(shape, dtype=np.int32)
    labels: dict[tuple[int, int, int], int] = {}
    for v in sorted(fg):
        root = find(v)
        if root not in labels:
            labels[root] = len(labels) + 1
        label_map[v] = labels[root]

    n = len(labels)
    voxels = np.bincount(label_map.ravel(), minlength=n + 1)[1:].astype(np.int64)
    vol = mask.voxel_volume_ml
    return LesionLabeling(
        label_map=label_map,
        lesion_count=n,
        lesion_voxels=voxels,
        lesion_volumes_ml=voxels * vol,
        voxel_volume_ml=vol,
    )


def mask_volume_ml(mask: VoxelMask) -> float:
    """Foreground voxel count times physical voxel volume, in ml."""
    return mask.volume_ml
