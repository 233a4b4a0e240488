"""Synthetic geometry and scalar fields for testing and demo fixtures."""

from __future__ import annotations

import numpy as np

from .core import TriMesh, mesh_stats, unit
from .volume import ScalarVolume

_CUBE_CORNERS = np.array(
    [
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
    ],
    dtype=np.float64,
)

_CUBE_FACES = np.array(
    [
        (0, 2, 1), (0, 3, 2),  # z = lo
        (4, 5, 6), (4, 6, 7),  # z = hi
        (0, 1, 5), (0, 5, 4),  # y = lo
        (1, 2, 6), (1, 6, 5),  # x = hi
        (2, 3, 7), (2, 7, 6),  # y = hi
        (3, 0, 4), (3, 4, 7),  # x = lo
    ],
    dtype=np.int64,
)


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriMesh:
    """Axis-aligned box, 12 triangles, outward orientation."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    return TriMesh(lo + _CUBE_CORNERS * (hi - lo), _CUBE_FACES)


def icosphere(center=(0.0, 0.0, 0.0), radius: float = 1.0, subdivisions: int = 3) -> TriMesh:
    """Subdivided icosahedron projected to a sphere, outward orientation."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}
        verts = list(v)

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            idx = cache.get(key)
            if idx is None:
                m = verts[a] + verts[b]
                m /= np.linalg.norm(m)
                idx = len(verts)
                verts.append(m)
                cache[key] = idx
            return idx

        new_f = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_f += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        v = np.array(verts)
        f = np.array(new_f, dtype=np.int64)

    mesh = TriMesh(np.asarray(center, dtype=np.float64) + radius * v, f)
    if mesh_stats(mesh).signed_volume < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1])
    return mesh


def sphere_field(
    dims=(64, 64, 64),
    spacing=(1.0, 1.0, 1.0),
    origin=(0.0, 0.0, 0.0),
    center=(31.5, 31.5, 31.5),
    radius: float = 25.0,
) -> ScalarVolume:
    """Inside-positive sphere field: f(p) = radius - |p - center|."""
    sp = np.asarray(spacing, dtype=np.float64)
    og = np.asarray(origin, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    ii, jj, kk = np.meshgrid(
        og[0] + sp[0] * np.arange(dims[0]),
        og[1] + sp[1] * np.arange(dims[1]),
        og[2] + sp[2] * np.arange(dims[2]),
        indexing="ij",
    )
    r = np.sqrt((ii - c[0]) ** 2 + (jj - c[1]) ** 2 + (kk - c[2]) ** 2)
    return ScalarVolume(radius - r, sp, og)


def direction_frame(direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed (axis, e1, e2) frame; e1 from the least-aligned axis."""
    w = unit(np.asarray(direction, dtype=np.float64))
    a = int(np.argmin(np.abs(w)))
    e = np.zeros(3)
    e[a] = 1.0
    e1 = unit(e - (e @ w) * w)
    return w, e1, np.cross(w, e1)


def shell_defect_field(
    dims=(87, 87, 87),
    spacing=(2.0, 2.0, 2.0),
    origin=(-86.0, -86.0, -86.0),
    outer_radius: float = 80.0,
    thickness: float = 6.0,
    hole_direction=(1.2, 0.4, 1.0),
    hole_radii_deg=(14.0, 11.0),
) -> ScalarVolume:
    """Spherical-shell skull stand-in with an elliptical hole, centered
    at the world origin.

    Material is f >= 0 with f = min(outer, inner, carve): two radial
    terms bound the shell and the carve term removes an elliptical cone
    of directions around hole_direction (angular semi-axes in degrees).
    All three terms have near-unit gradient so the zero level set is
    well resolved at the given spacing. Stored as float32, the usual
    precision of scanner exports.
    """
    sp = np.asarray(spacing, dtype=np.float64)
    og = np.asarray(origin, dtype=np.float64)
    w, e1, e2 = direction_frame(hole_direction)
    a1, a2 = np.sin(np.radians(hole_radii_deg[0])), np.sin(np.radians(hole_radii_deg[1]))

    ii, jj, kk = np.meshgrid(
        og[0] + sp[0] * np.arange(dims[0]),
        og[1] + sp[1] * np.arange(dims[1]),
        og[2] + sp[2] * np.arange(dims[2]),
        indexing="ij",
    )
    p = np.stack([ii, jj, kk], axis=-1)
    r = np.linalg.norm(p, axis=-1)
    d = p / np.maximum(r, 1e-9)[..., None]

    # Elliptical direction cone around w; the clamped axial term keeps
    # the far hemisphere solid without a seam the shell could see.
    s = np.sqrt(
        (d @ e1 / a1) ** 2
        + (d @ e2 / a2) ** 2
        + (np.minimum(d @ w, 0.0) / 0.05) ** 2
    )
    kappa = outer_radius * np.sin(np.radians(0.5 * (hole_radii_deg[0] + hole_radii_deg[1])))
    carve = kappa * (s - 1.0)

    f = np.minimum(np.minimum(outer_radius - r, r - (outer_radius - thickness)), carve)
    return ScalarVolume(f.astype(np.float32), sp, og)
