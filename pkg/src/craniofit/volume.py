"""Scalar volumes, voxel masks, segmentation, and volume file IO.

A volume is a regular grid of samples; sample (i,j,k) sits at
origin + (i,j,k)*spacing in millimeters. On disk a volume is a JSON
header next to a raw little-endian blob in x-fastest order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

_DTYPES = {"float32": "<f4", "float64": "<f8", "int16": "<i2", "uint8": "|u1"}


@dataclass(frozen=True)
class ScalarVolume:
    """Regular sample grid. data is indexed [i,j,k] = [x,y,z]."""

    data: np.ndarray
    spacing: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 3:
            raise ValueError("volume data must be 3-D")
        if not np.all(np.isfinite(d)):
            raise ValueError("volume contains non-finite samples")
        sp = np.asarray(self.spacing, dtype=np.float64)
        og = np.asarray(self.origin, dtype=np.float64)
        if sp.shape != (3,) or og.shape != (3,):
            raise ValueError("spacing and origin must be 3-vectors")
        if np.any(sp <= 0):
            raise ValueError("spacing components must be positive")
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "origin", og)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def grid_points(self) -> np.ndarray:
        """All sample positions, shape (nx,ny,nz,3). Mind the memory."""
        idx = np.indices(self.dims).astype(np.float64)
        return np.moveaxis(idx, 0, -1) * self.spacing + self.origin


@dataclass(frozen=True)
class VoxelMask:
    """One bit per voxel of a matching ScalarVolume."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 3 or d.dtype != np.bool_:
            raise ValueError("mask must be 3-D bool")
        object.__setattr__(self, "data", d)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def count(self) -> int:
        return int(self.data.sum())


def threshold_segment(vol: ScalarVolume, lo: float, hi: float) -> VoxelMask:
    """Voxel set iff lo <= sample <= hi."""
    if lo > hi:
        raise ValueError(f"empty threshold range: lo={lo} > hi={hi}")
    d = vol.data
    return VoxelMask((d >= lo) & (d <= hi))


def region_grow(mask: VoxelMask, seed: tuple[int, int, int], connectivity: int = 6) -> VoxelMask:
    """Connected component of the mask containing the seed voxel."""
    if connectivity not in (6, 26):
        raise ValueError("connectivity must be 6 or 26")
    seed = tuple(int(s) for s in seed)
    if len(seed) != 3 or any(s < 0 or s >= n for s, n in zip(seed, mask.dims)):
        raise IndexError(f"seed {seed} outside mask dims {mask.dims}")
    if not mask.data[seed]:
        raise ValueError(f"seed voxel {seed} is not set in the mask")
    structure = ndimage.generate_binary_structure(3, 1 if connectivity == 6 else 3)
    labels, _ = ndimage.label(mask.data, structure=structure)
    return VoxelMask(labels == labels[seed])


def auto_seed(mask: VoxelMask, vol: ScalarVolume) -> tuple[int, int, int]:
    """Highest-valued set voxel; ties break to the lowest linear index."""
    if not mask.data.any():
        raise ValueError("mask is empty, nothing to seed")
    vals = np.where(mask.data, vol.data, -np.inf)
    flat = int(np.argmax(vals))
    return tuple(int(x) for x in np.unravel_index(flat, mask.dims))


def write_volume(vol: ScalarVolume, header_path: str | Path) -> None:
    """Write `<stem>.json` header plus raw x-fastest blob alongside it."""
    header_path = Path(header_path)
    dtype_name = {v: k for k, v in _DTYPES.items()}.get(
        vol.data.dtype.newbyteorder("<").str
    )
    if dtype_name is None:
        dtype_name = "float64"
    blob_name = header_path.stem + ".raw"
    header = {
        "dims": list(vol.dims),
        "spacing": [float(x) for x in vol.spacing],
        "origin": [float(x) for x in vol.origin],
        "dtype": dtype_name,
        "byte_order": "little",
        "data_file": blob_name,
    }
    header_path.write_text(json.dumps(header, indent=2) + "\n")
    blob = np.asarray(vol.data, dtype=_DTYPES[dtype_name]).ravel(order="F")
    (header_path.parent / blob_name).write_bytes(blob.tobytes())


def read_volume(header_path: str | Path) -> ScalarVolume:
    """Read the JSON header + raw blob pair written by write_volume."""
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    dims = tuple(int(x) for x in header["dims"])
    dtype = _DTYPES.get(header.get("dtype", "float64"))
    if dtype is None:
        raise ValueError(f"unsupported dtype {header.get('dtype')!r}")
    if header.get("byte_order", "little") != "little":
        raise ValueError("only little-endian blobs are supported")
    blob_path = header_path.parent / header["data_file"]
    raw = np.frombuffer(blob_path.read_bytes(), dtype=dtype)
    expect = dims[0] * dims[1] * dims[2]
    if raw.size != expect:
        raise ValueError(
            f"blob holds {raw.size} samples, header dims imply {expect}"
        )
    data = raw.reshape(dims, order="F").astype(np.float64)
    return ScalarVolume(data, header["spacing"], header["origin"])
