"""Minimal NIfTI-1 reader/writer plus the core volume/mask types.

Supports single-file volumes (.nii / .nii.gz), datatypes u8/i16/i32/f32/f64,
both byte orders. Orientation handling is storage-only: srow rows are kept
when sform_code > 0, otherwise the affine falls back to a spacing diagonal.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import NiftiFormatError, NonBinaryMask

HEADER_SIZE = 348
SINGLE_MAGIC = b"n+1\x00"
PAIR_MAGIC = b"ni1\x00"

# NIfTI-1 datatype code -> numpy dtype charcode (endianness applied on read/write)
DTYPE_CODES = {
    2: "u1",   # DT_UINT8
    4: "i2",   # DT_INT16
    8: "i4",   # DT_INT32
    16: "f4",  # DT_FLOAT32
    64: "f8",  # DT_FLOAT64
}
BITPIX = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}

DEFAULT_BINARIZE_TOL = 1e-3


@dataclass
class VolumeHeader:
    dims: tuple[int, int, int]
    datatype_code: int
    pixdim: tuple[float, float, float]
    endianness: str = "<"
    affine: np.ndarray = None
    scl_slope: float = 1.0
    scl_inter: float = 0.0
    sform_code: int = 0

    def __post_init__(self):
        if self.datatype_code not in DTYPE_CODES:
            raise NiftiFormatError(
                f"unsupported datatype code {self.datatype_code} "
                f"(supported: {sorted(DTYPE_CODES)})"
            )
        if any(d < 1 for d in self.dims):
            raise NiftiFormatError(f"non-positive spatial dim in {self.dims}")
        if any(p <= 0 for p in self.pixdim):
            raise NiftiFormatError(f"non-positive pixdim in {self.pixdim}")
        if self.endianness not in ("<", ">"):
            raise NiftiFormatError(f"bad endianness flag {self.endianness!r}")
        if self.affine is None:
            self.affine = np.diag([*self.pixdim, 1.0])
        self.affine = np.asarray(self.affine, dtype=np.float64)

    @property
    def voxel_volume_ml(self) -> float:
        """Physical volume of one voxel: pixdim product in mm^3 / 1000."""
        return float(self.pixdim[0] * self.pixdim[1] * self.pixdim[2]) / 1000.0

    def same_grid(self, other: "VolumeHeader", rtol: float = 1e-6) -> bool:
        return self.dims == other.dims and np.allclose(
            self.pixdim, other.pixdim, rtol=rtol, atol=0.0
        )


@dataclass
class VoxelMask:
    """Binary 3-D lesion mask with physical spacing."""

    header: VolumeHeader
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape != self.header.dims:
            raise NiftiFormatError(
                f"mask shape {self.data.shape} != header dims {self.header.dims}"
            )
        if self.data.dtype != np.uint8:
            self.data = self.data.astype(np.uint8)

    @property
    def voxel_volume_ml(self) -> float:
        return self.header.voxel_volume_ml

    @property
    def foreground_voxels(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def volume_ml(self) -> float:
        return self.foreground_voxels * self.voxel_volume_ml


def _is_gzip(raw: bytes) -> bool:
    return raw[:2] == b"\x1f\x8b"


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if _is_gzip(raw):
        raw = gzip.decompress(raw)
    return raw


def _parse_header(raw: bytes):
    """Decode the fixed 348-byte header; returns (VolumeHeader, vox_offset, full dim[])."""
    if len(raw) < HEADER_SIZE:
        raise NiftiFormatError(f"stream too short for NIfTI-1 header ({len(raw)} bytes)")

    magic = raw[344:348]
    if magic == PAIR_MAGIC:
        raise NiftiFormatError("paired .hdr/.img layout not supported")
    if magic != SINGLE_MAGIC:
        raise NiftiFormatError(f"bad magic {magic!r}")

    # Endianness is inferred from the header-size field.
    endian = "<"
    (sizeof_hdr,) = struct.unpack_from("<i", raw, 0)
    if sizeof_hdr != HEADER_SIZE:
        endian = ">"
        (sizeof_hdr,) = struct.unpack_from(">i", raw, 0)
        if sizeof_hdr != HEADER_SIZE:
            raise NiftiFormatError("header size field != 348 under either byte order")

    dim = struct.unpack_from(endian + "8h", raw, 40)
    datatype, _bitpix = struct.unpack_from(endian + "2h", raw, 70)
    pixdim = struct.unpack_from(endian + "8f", raw, 76)
    (vox_offset,) = struct.unpack_from(endian + "f", raw, 108)
    scl_slope, scl_inter = struct.unpack_from(endian + "2f", raw, 112)
    qform_code, sform_code = struct.unpack_from(endian + "2h", raw, 252)
    srow = np.array(
        struct.unpack_from(endian + "12f", raw, 280), dtype=np.float64
    ).reshape(3, 4)

    ndim = dim[0]
    if ndim < 3 or ndim > 4:
        raise NiftiFormatError(f"expected 3-D (or squeezable 4-D) volume, dim[0]={ndim}")
    if ndim == 4 and dim[4] > 1:
        raise NiftiFormatError(f"4-D volume with {dim[4]} timepoints not supported")
    dims = (int(dim[1]), int(dim[2]), int(dim[3]))
    if any(d < 1 for d in dims):
        raise NiftiFormatError(f"non-positive spatial dim in {dims}")

    spacing = tuple(float(p) for p in pixdim[1:4])
    if any(p <= 0 for p in spacing):
        raise NiftiFormatError(f"non-positive pixdim {spacing}")

    if datatype not in DTYPE_CODES:
        raise NiftiFormatError(f"unsupported datatype code {datatype}")

    if sform_code > 0:
        affine = np.vstack([srow, [0.0, 0.0, 0.0, 1.0]])
    else:
        affine = np.diag([*spacing, 1.0])

    header = VolumeHeader(
        dims=dims,
        datatype_code=int(datatype),
        pixdim=spacing,
        endianness=endian,
        affine=affine,
        scl_slope=float(scl_slope),
        scl_inter=float(scl_inter),
        sform_code=int(sform_code),
    )
    return header, int(round(vox_offset))


def read_volume(path) -> tuple[VolumeHeader, np.ndarray]:
    """Read a .nii / .nii.gz volume.

    Returns the decoded header and the sample array (x,y,z order). Samples
    are rescaled by scl_slope/scl_inter when slope is neither 0 nor the
    identity pair (1, 0); otherwise the on-disk dtype is preserved.
    """
    raw = _read_bytes(path)
    header, vox_offset = _parse_header(raw)

    count = int(np.prod(header.dims))
    dtype = np.dtype(header.endianness + DTYPE_CODES[header.datatype_code])
    expected = count * dtype.itemsize
    payload = raw[vox_offset : vox_offset + expected]
    if len(payload) < expected:
        raise NiftiFormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(header.dims, order="F")

    slope, inter = header.scl_slope, header.scl_inter
    if slope != 0.0 and not (slope == 1.0 and inter == 0.0):
        data = data.astype(np.float64) * slope + inter
    return header, data


def read_mask(path, binarize_tolerance: float = DEFAULT_BINARIZE_TOL) -> VoxelMask:
    """Read a volume and snap it to a binary mask.

    Raises NonBinaryMask when any sample deviates from {0, 1} by more than
    the tolerance (a probabilistic map was passed where a mask was required).
    """
    header, data = read_volume(path)
    values = np.asarray(data, dtype=np.float64)
    dist = np.minimum(np.abs(values), np.abs(values - 1.0))
    worst = float(dist.max()) if values.size else 0.0
    if worst > binarize_tolerance:
        raise NonBinaryMask(
            f"{path}: sample deviates from {{0,1}} by {worst:.6g} "
            f"(tolerance {binarize_tolerance:g})"
        )
    return VoxelMask(header=header, data=(values > 0.5).astype(np.uint8))


def _pack_header(header: VolumeHeader) -> bytes:
    e = header.endianness
    buf = bytearray(HEADER_SIZE)
    struct.pack_into(e + "i", buf, 0, HEADER_SIZE)
    struct.pack_into(e + "c", buf, 38, b"r")  # regular
    dim = [3, *header.dims, 1, 1, 1, 1]
    struct.pack_into(e + "8h", buf, 40, *dim)
    struct.pack_into(e + "2h", buf, 70, header.datatype_code, BITPIX[header.datatype_code])
    pixdim = [1.0, *header.pixdim, 0.0, 0.0, 0.0, 0.0]
    struct.pack_into(e + "8f", buf, 76, *pixdim)
    struct.pack_into(e + "f", buf, 108, float(HEADER_SIZE + 4))  # vox_offset
    struct.pack_into(e + "2f", buf, 112, header.scl_slope, header.scl_inter)
    struct.pack_into(e + "2h", buf, 252, 0, header.sform_code)
    if header.sform_code > 0:
        struct.pack_into(e + "12f", buf, 280, *header.affine[:3, :].ravel())
    struct.pack_into(e + "4s", buf, 344, SINGLE_MAGIC)
    return bytes(buf)


def write_volume(header: VolumeHeader, data: np.ndarray, path) -> None:
    """Write a single-file NIfTI-1 volume; gzip when the path ends in .gz."""
    data = np.asarray(data)
    if data.shape != header.dims:
        raise NiftiFormatError(
            f"data shape {data.shape} inconsistent with header dims {header.dims}"
        )
    dtype = np.dtype(header.endianness + DTYPE_CODES[header.datatype_code])
    payload = np.asfortranarray(data.astype(dtype, copy=False)).tobytes(order="F")
    blob = _pack_header(header) + b"\x00\x00\x00\x00" + payload
    if str(path).endswith(".gz"):
        # mtime pinned so identical content yields identical bytes
        blob = gzip.compress(blob, mtime=0)
    with open(path, "wb") as f:
        f.write(blob)


def write_mask(mask: VoxelMask, path) -> None:
    header = VolumeHeader(
        dims=mask.header.dims,
        datatype_code=2,
        pixdim=mask.header.pixdim,
        endianness=mask.header.endianness,
        affine=mask.header.affine,
        sform_code=mask.header.sform_code,
    )
    write_volume(header, mask.data, path)
