"""Isosurface extraction from scalar volumes.

Three implementations share one contract: the classic cube case table
with vertices on grid edges by linear interpolation.

    * a naive per-cube reference, readable and slow, used as the oracle
    * a vectorized numpy sweep (the fallback hot path)
    * a compiled per-row sweep in craniofit._fastkern (the fast path)

All three interpolate every crossed grid edge the same way: walking in
the +axis direction from the low corner, t = (iso - s0) / (s1 - s0),
coordinate = origin + spacing * (index + t). That makes their vertex
positions bit-identical, so tests can compare exact triangle sets.

Orientation: the solid is the above-iso region and triangle normals
point toward lower values, i.e. outward.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import TriMesh
from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, N_CASE_TRIS, TRI_TABLE, _TRI_CASES
from .volume import ScalarVolume, VoxelMask

# Edge e runs from _EDGE_LOW[e] in direction _EDGE_AXIS[e]; _EDGE_FLIP
# marks table edges whose corner pair is listed against the axis.
_EDGE_AXIS = np.zeros(12, dtype=np.int64)
_EDGE_LOW = np.zeros((12, 3), dtype=np.int64)
for _e, (_a, _b) in enumerate(EDGE_CORNERS):
    _d = CORNER_OFFSETS[_b] - CORNER_OFFSETS[_a]
    _EDGE_AXIS[_e] = int(np.nonzero(_d)[0][0])
    _EDGE_LOW[_e] = np.minimum(CORNER_OFFSETS[_a], CORNER_OFFSETS[_b])


def _substitute(vol: ScalarVolume, isovalue: float, mask: VoxelMask | None) -> np.ndarray:
    s = np.ascontiguousarray(vol.data, dtype=np.float64)
    if mask is not None:
        if mask.dims != vol.dims:
            raise ValueError("mask dims do not match volume dims")
        # Unmasked samples fall below iso so the surface closes along
        # the mask boundary; keeps a single extraction code path.
        s = np.where(mask.data, s, isovalue - 1.0)
    return s


def extract_isosurface_naive(
    vol: ScalarVolume, isovalue: float, mask: VoxelMask | None = None
) -> TriMesh:
    """Per-cube reference implementation. Readable, quadratic-slow."""
    if min(vol.dims) < 2:
        raise ValueError("volume must have at least 2 samples per axis")
    s = _substitute(vol, float(isovalue), mask)
    iso = float(isovalue)
    nx, ny, nz = s.shape
    origin, spacing = vol.origin, vol.spacing

    verts: list[np.ndarray] = []
    vert_ids: dict[tuple[int, int, int, int], int] = {}
    faces: list[tuple[int, int, int]] = []

    def edge_vertex(i: int, j: int, k: int, axis: int) -> int:
        key = (i, j, k, axis)
        vid = vert_ids.get(key)
        if vid is not None:
            return vid
        step = [0, 0, 0]
        step[axis] = 1
        s0 = s[i, j, k]
        s1 = s[i + step[0], j + step[1], k + step[2]]
        t = (iso - s0) / (s1 - s0)
        pos = origin + spacing * np.array([i, j, k], dtype=np.float64)
        pos[axis] = origin[axis] + spacing[axis] * ((i, j, k)[axis] + t)
        vid = len(verts)
        verts.append(pos)
        vert_ids[key] = vid
        return vid

    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                case = 0
                for c in range(8):
                    oi, oj, ok = CORNER_OFFSETS[c]
                    if s[i + oi, j + oj, k + ok] < iso:
                        case |= 1 << c
                tris = _TRI_CASES[case]
                for t0 in range(0, len(tris), 3):
                    ids = []
                    for e in tris[t0 : t0 + 3]:
                        lo = _EDGE_LOW[e]
                        ids.append(
                            edge_vertex(
                                i + int(lo[0]), j + int(lo[1]), k + int(lo[2]),
                                int(_EDGE_AXIS[e]),
                            )
                        )
                    faces.append(tuple(ids))

    if not faces:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))


def _sweep_numpy(
    s: np.ndarray, iso: float, origin: np.ndarray, spacing: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sweep: case pass, edge-vertex pass, triangle pass."""
    nx, ny, nz = s.shape
    below = s < iso

    # Cell case indices from the 8 shifted corner slabs.
    case = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.uint8)
    for c, (oi, oj, ok) in enumerate(CORNER_OFFSETS):
        case |= (
            below[oi : nx - 1 + oi, oj : ny - 1 + oj, ok : nz - 1 + ok].astype(np.uint8)
            << c
        )

    active = np.argwhere((case != 0) & (case != 255))
    if len(active) == 0:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)

    # One vertex per crossed grid edge, numbered x block, y block, z block.
    vid_grids = []
    verts_parts = []
    base = 0
    for axis in range(3):
        shift = [0, 0, 0]
        shift[axis] = 1
        lowshape = (nx - shift[0], ny - shift[1], nz - shift[2])
        crossed = (
            below[: lowshape[0], : lowshape[1], : lowshape[2]]
            != below[shift[0] :, shift[1] :, shift[2] :]
        )
        idx = np.argwhere(crossed)
        vid = np.full(lowshape, -1, dtype=np.int64)
        vid[crossed] = base + np.arange(len(idx))
        base += len(idx)
        vid_grids.append(vid)

        s0 = s[idx[:, 0], idx[:, 1], idx[:, 2]]
        hi = idx + shift
        s1 = s[hi[:, 0], hi[:, 1], hi[:, 2]]
        t = (iso - s0) / (s1 - s0)
        pos = origin + spacing * idx.astype(np.float64)
        pos[:, axis] = origin[axis] + spacing[axis] * (idx[:, axis] + t)
        verts_parts.append(pos)

    verts = np.concatenate(verts_parts, axis=0)

    # Per-active-cell vertex id of each of the 12 edges.
    cell_edge_vid = np.empty((len(active), 12), dtype=np.int64)
    for e in range(12):
        lo = active + _EDGE_LOW[e]
        g = vid_grids[int(_EDGE_AXIS[e])]
        cell_edge_vid[:, e] = g[lo[:, 0], lo[:, 1], lo[:, 2]]

    cell_case = case[active[:, 0], active[:, 1], active[:, 2]]
    ntri = N_CASE_TRIS[cell_case].astype(np.int64)
    rows = np.repeat(np.arange(len(active)), ntri * 3)
    cols = TRI_TABLE[cell_case]  # (A,16)
    valid = cols >= 0
    edge_of_corner = cols[valid].astype(np.int64)
    tri_verts = cell_edge_vid[rows, edge_of_corner]
    faces = tri_verts.reshape(-1, 3)
    return verts, faces


def extract_isosurface(
    vol: ScalarVolume,
    isovalue: float,
    mask: VoxelMask | None = None,
    impl: str = "auto",
) -> TriMesh:
    """Extract the isovalue level set as an indexed triangle mesh.

    impl: "auto" (compiled kernel when available), "native", "numpy",
    or "naive".
    """
    if min(vol.dims) < 2:
        raise ValueError("volume must have at least 2 samples per axis")
    if impl == "naive":
        return extract_isosurface_naive(vol, isovalue, mask)
    s = _substitute(vol, float(isovalue), mask)
    fn = kernels.get("mc_sweep", impl)
    origin = np.asarray(vol.origin, dtype=np.float64)
    spacing = np.asarray(vol.spacing, dtype=np.float64)
    verts, faces = fn(s, float(isovalue), origin, spacing)
    return TriMesh(verts, faces)
