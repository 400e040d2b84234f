"""Pre-generation of blinded slice renderings for the rating study.

For each case we render three overlay PNGs per source (two axial, one
sagittal). Slice positions are chosen from the ground-truth mask so both
sources show identical anatomy; filenames are opaque hashes so no
rater-facing URL reveals the annotator.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
from PIL import Image

from .nifti import VoxelMask


def _pick_slices(reference: VoxelMask) -> tuple[list[int], int]:
    """Two axial indices (largest lesion areas) and one sagittal index."""
    data = reference.data
    axial_area = data.sum(axis=(0, 1))
    if axial_area.sum() == 0:
        mid = data.shape[2] // 2
        axial = [mid, min(mid + 1, data.shape[2] - 1)]
    else:
        order = np.argsort(axial_area)[::-1]
        axial = sorted(int(k) for k in order[:2])
    sag_area = data.sum(axis=(1, 2))
    sagittal = int(np.argmax(sag_area)) if sag_area.sum() else data.shape[0] // 2
    return axial, sagittal


def _overlay_png(background: np.ndarray, mask_slice: np.ndarray, out_path: Path) -> None:
    bg = background.astype(np.float64)
    span = bg.max() - bg.min()
    gray = ((bg - bg.min()) / span * 255).astype(np.uint8) if span > 0 else np.zeros_like(bg, np.uint8)
    rgb = np.stack([gray, gray, gray], axis=-1)
    fg = mask_slice.astype(bool)
    rgb[fg, 0] = 255
    rgb[fg, 1] = rgb[fg, 1] // 3
    rgb[fg, 2] = rgb[fg, 2] // 3
    Image.fromarray(np.rot90(rgb)).save(out_path)


def _render_name(seed: int, case_id: str, source: str, index: int) -> str:
    digest = hashlib.sha1(f"{seed}/{case_id}/{source}/{index}".encode()).hexdigest()
    return f"{digest[:16]}.png"


def render_case(
    case_id: str,
    gt: VoxelMask,
    masks_by_source: dict,
    out_dir,
    seed: int,
    background: np.ndarray = None,
) -> dict:
    """Write the six PNGs for one case; returns a rating-pool entry."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    axial, sagittal = _pick_slices(gt)
    if background is None:
        background = np.zeros(gt.header.dims)

    entry = {"case_id": case_id}
    for source, mask in masks_by_source.items():
        names = []
        for i, k in enumerate(axial):
            name = _render_name(seed, case_id, source, i)
            _overlay_png(background[:, :, k], mask.data[:, :, k], out_dir / name)
            names.append(name)
        name = _render_name(seed, case_id, source, 2)
        _overlay_png(background[sagittal, :, :], mask.data[sagittal, :, :], out_dir / name)
        names.append(name)
        entry[f"{source}_renders"] = names
    return entry
