"""STL import/export.

Binary layout is the de-facto standard: 80-byte header, uint32
triangle count, then 50-byte records (normal 3xf4, three vertices 3xf4
each, uint16 attribute). The writer emits a fixed header and zero
attributes so output depends only on the mesh, never on the clock.
"""

from __future__ import annotations

import re

import numpy as np

from .core import TriMesh, face_areas_normals, weld_vertices

_RECORD = np.dtype(
    [("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
)
assert _RECORD.itemsize == 50

_HEADER = b"craniofit binary stl".ljust(80, b" ")

_ASCII_VERTEX = re.compile(rb"vertex\s+([^\s]+)\s+([^\s]+)\s+([^\s]+)")


class StlError(ValueError):
    pass


def _weld_soup(tris: np.ndarray, weld_tol: float) -> TriMesh:
    """Index a (T,3,3) triangle soup, welding duplicates within weld_tol."""
    tris = np.asarray(tris, dtype=np.float64)
    if not np.all(np.isfinite(tris)):
        raise StlError("non-finite coordinates in STL data")
    n = len(tris)
    if n == 0:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    verts = tris.reshape(n * 3, 3)
    faces = np.arange(n * 3, dtype=np.int64).reshape(n, 3)
    return weld_vertices(_soup_mesh(verts, faces), weld_tol)


def _soup_mesh(verts: np.ndarray, faces: np.ndarray) -> TriMesh:
    # Bypass the degenerate-face check: soups may hold zero-area slivers
    # that welding removes.
    m = object.__new__(TriMesh)
    object.__setattr__(m, "vertices", verts)
    object.__setattr__(m, "faces", faces)
    object.__setattr__(m, "normals", None)
    return m


def read_stl(data: bytes, weld_tol: float = 1e-6) -> TriMesh:
    """Parse binary or ASCII STL bytes into an indexed mesh."""
    if len(data) >= 84:
        count = int(np.frombuffer(data[80:84], dtype="<u4")[0])
        if len(data) == 84 + 50 * count:
            recs = np.frombuffer(data[84:], dtype=_RECORD)
            return _weld_soup(recs["verts"].astype(np.float64), weld_tol)
    head = data[:512].lstrip()
    if head.startswith(b"solid"):
        coords = _ASCII_VERTEX.findall(data)
        if len(coords) % 3 != 0:
            raise StlError("ASCII STL vertex count is not a multiple of 3")
        try:
            tris = np.array(coords, dtype=np.float64).reshape(-1, 3, 3)
        except ValueError as exc:
            raise StlError(f"bad ASCII STL vertex: {exc}") from exc
        return _weld_soup(tris, weld_tol)
    if len(data) < 84:
        raise StlError("truncated STL: shorter than the 84-byte binary prelude")
    raise StlError(
        "binary STL length does not match header triangle count"
    )


def write_stl(mesh: TriMesh) -> bytes:
    """Serialize to binary STL. Deterministic: same mesh, same bytes."""
    corners = mesh.corners().astype("<f4")
    # Normals from the float32-rounded corners so a written file re-reads
    # and re-writes to identical bytes.
    c64 = corners.astype(np.float64)
    cr = np.cross(c64[:, 1] - c64[:, 0], c64[:, 2] - c64[:, 0])
    lens = np.linalg.norm(cr, axis=1)
    lens[lens == 0] = 1.0
    recs = np.zeros(len(corners), dtype=_RECORD)
    recs["normal"] = (cr / lens[:, None]).astype("<f4")
    recs["verts"] = corners
    out = bytearray(_HEADER)
    out += np.uint32(len(corners)).tobytes()
    out += recs.tobytes()
    return bytes(out)


def write_stl_ascii(mesh: TriMesh, name: str = "mesh") -> bytes:
    """ASCII form, mostly for eyeballing small meshes."""
    corners = mesh.corners().astype("<f4").astype(np.float64)
    cr = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    lens = np.linalg.norm(cr, axis=1)
    lens[lens == 0] = 1.0
    cr = cr / lens[:, None]
    lines = [f"solid {name}"]
    for nrm, tri in zip(cr, corners):
        lines.append(f"  facet normal {nrm[0]:.9g} {nrm[1]:.9g} {nrm[2]:.9g}")
        lines.append("    outer loop")
        for v in tri:
            lines.append(f"      vertex {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return ("\n".join(lines) + "\n").encode()
