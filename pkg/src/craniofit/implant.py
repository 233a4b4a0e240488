"""Implant construction: offset the fitted patch inward, close the rim
with a ruled band, validate the result as a watertight solid.

The inner surface starts as a plain normal offset, which inherits every
wrinkle of the triangulated patch; a few rounds of uniform Laplacian
smoothing with the rim pinned fix that without touching the outer
surface or the boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .contour import SurfaceContour
from .core import (
    TriMesh,
    boundary_loops,
    face_areas_normals,
    mean_edge_length,
    mesh_stats,
    vertex_normals,
)
from .fitting import FitError, FittedPatch, fit_patch, lift_to_patch


class ImplantError(ValueError):
    pass


@dataclass(frozen=True)
class ImplantModel:
    solid: TriMesh
    thickness: float
    rim_contour: SurfaceContour
    outer_patch: FittedPatch | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        stats = mesh_stats(self.solid)
        if not stats.is_watertight:
            raise ImplantError("implant solid is not watertight")
        if stats.euler_characteristic != 2:
            raise ImplantError(
                "implant must be a topological sphere, chi=%d"
                % stats.euler_characteristic
            )
        if stats.signed_volume <= 0:
            raise ImplantError("implant solid has non-positive volume")
        areas, _ = face_areas_normals(self.solid)
        if np.any(areas < 1e-12):
            raise ImplantError("implant contains degenerate triangles")


def _directed_edge_conflicts(mesh: TriMesh) -> bool:
    f = mesh.faces
    de = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    return len(np.unique(de, axis=0)) != len(de)


def _segment_hits_triangle(p0, p1, tri, eps=1e-12):
    """Moller-Trumbore segment/triangle intersection, vectorized pairs."""
    d = p1 - p0
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    scale = np.abs(det)
    ok = scale > eps
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvec = p0 - tri[:, 0]
        u = np.einsum("ij,ij->i", tvec, pvec) * inv
        qvec = np.cross(tvec, e1)
        v = np.einsum("ij,ij->i", d, qvec) * inv
        t = np.einsum("ij,ij->i", e2, qvec) * inv
        inside = (u > eps) & (v > eps) & (u + v < 1 - eps) & (t > eps) & (t < 1 - eps)
    return ok & inside


def self_intersection_count(mesh: TriMesh) -> int:
    """Pairs of non-adjacent triangles where an edge of one pierces the
    other. Coplanar overlaps are not counted (documented limitation)."""
    tris = mesh.corners()
    cent = tris.mean(axis=1)
    reach = np.sqrt(((tris - cent[:, None, :]) ** 2).sum(axis=2).max())
    pairs = cKDTree(cent).query_pairs(2.0 * reach + 1e-12, output_type="ndarray")
    if len(pairs) == 0:
        return 0
    fa, fb = mesh.faces[pairs[:, 0]], mesh.faces[pairs[:, 1]]
    shared = (fa[:, :, None] == fb[:, None, :]).any(axis=(1, 2))
    pairs = pairs[~shared]
    hits = np.zeros(len(pairs), dtype=bool)
    for i, j in ((0, 1), (1, 0)):
        src, dst = tris[pairs[:, i]], tris[pairs[:, j]]
        for e in range(3):
            hits |= _segment_hits_triangle(src[:, e], src[:, (e + 1) % 3], dst)
    return int(hits.sum())


def offset_surface(patch: TriMesh, d: float, check: bool = True) -> TriMesh:
    """Displace every vertex by d along its area-weighted normal.

    Connectivity is untouched. Self-intersections introduced by the
    offset are reported as a warning with their count, not repaired.
    Callers that post-process the offset (smoothing heals most rim
    folds) pass check=False and inspect the surface they keep instead.
    """
    if _directed_edge_conflicts(patch):
        raise ImplantError("patch orientation is inconsistent")
    out = TriMesh(patch.vertices + d * vertex_normals(patch), patch.faces)
    if check and d != 0.0:
        n = self_intersection_count(out)
        if n:
            warnings.warn(
                "offset by %g created %d self-intersecting triangle pairs"
                % (d, n),
                stacklevel=2,
            )
    return out


def laplacian_smooth(
    mesh: TriMesh, k: int = 10, lam: float = 0.5, pinned=None
) -> TriMesh:
    """k rounds of uniform Laplacian smoothing; pinned vertices fixed."""
    f = mesh.faces
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    free = np.ones(mesh.n_vertices, dtype=bool)
    if pinned is not None:
        free[np.asarray(pinned, dtype=np.int64)] = False
    deg = np.zeros(mesh.n_vertices)
    np.add.at(deg, edges[:, 0], 1.0)
    np.add.at(deg, edges[:, 1], 1.0)
    deg[deg == 0] = 1.0
    v = mesh.vertices.copy()
    for _ in range(k):
        acc = np.zeros_like(v)
        np.add.at(acc, edges[:, 0], v[edges[:, 1]])
        np.add.at(acc, edges[:, 1], v[edges[:, 0]])
        delta = acc / deg[:, None] - v
        v[free] += lam * delta[free]
    return TriMesh(v, f)


def _loop_params(pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Normalized arc-length parameter at each loop vertex."""
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    total = float(seg.sum())
    t = np.concatenate([[0.0], np.cumsum(seg[:-1])]) / total
    return t, total


def _zip_loops(ptsA: np.ndarray, ptsB: np.ndarray) -> np.ndarray:
    """Stitch two closed index loops by normalized arc length.

    Returns (n+m, 3) faces over indices 0..n-1 for loop A followed by
    n..n+m-1 for loop B. A-side directed edges run forward, B-side
    backward, so the band's two boundary cycles are A and reversed B.
    """
    n, m = len(ptsA), len(ptsB)
    # Align the start of B with the vertex nearest A's start.
    shift = int(np.argmin(np.linalg.norm(ptsB - ptsA[0], axis=1)))
    bidx = np.roll(np.arange(m), -shift)
    tA, lenA = _loop_params(ptsA)
    tB, lenB = _loop_params(ptsB[bidx])
    if lenA < 1e-9 or lenB < 1e-9:
        raise ImplantError("degenerate loop (near-zero length)")
    pA, pB = ptsA, ptsB[bidx]
    faces = []
    i = j = 0
    while i < n or j < m:
        nextA = tA[i + 1] if i + 1 < n else 1.0
        nextB = tB[j + 1] if j + 1 < m else 1.0
        ai, aj = i % n, j % m
        if j >= m:
            step_a = True
        elif i >= n:
            step_a = False
        elif abs(nextA - nextB) > 1e-9:
            step_a = nextA < nextB
        else:
            # Arc length is indifferent here (typical for equal-count
            # loops), so split the quad along its shorter diagonal; that
            # keeps the seam independent of where the loops start and of
            # their common winding direction. Exact ties advance A.
            da = np.linalg.norm(pA[(i + 1) % n] - pB[aj])
            db = np.linalg.norm(pA[ai] - pB[(j + 1) % m])
            step_a = da <= db
        if step_a:
            faces.append((ai, (i + 1) % n, n + bidx[aj]))
            i += 1
        else:
            faces.append((ai, n + bidx[(j + 1) % m], n + bidx[aj]))
            j += 1
    return np.array(faces, dtype=np.int64)


def ruled_band(loopA, loopB) -> TriMesh:
    """Triangle band joining two closed point loops.

    Correspondence follows normalized arc length after aligning loop
    starts; both loops must wind the same way around the band axis.
    """
    ptsA = np.asarray(loopA, dtype=np.float64)
    ptsB = np.asarray(loopB, dtype=np.float64)
    for pts in (ptsA, ptsB):
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
            raise ImplantError("loops need at least 3 points each")
    if len(ptsA) == len(ptsB) and np.max(np.linalg.norm(ptsA - ptsB, axis=1)) < 1e-9:
        raise ImplantError("identical loops give a zero-area band")
    faces = _zip_loops(ptsA, ptsB)
    return TriMesh(np.concatenate([ptsA, ptsB]), faces)


def _patch_rim(patch: TriMesh) -> np.ndarray:
    loops = boundary_loops(patch)
    if len(loops) != 1:
        raise ImplantError("patch must have exactly one boundary loop")
    return loops[0]


def _point_to_polyline(pts: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Distance from each point to a closed 3D polyline."""
    a = loop
    d = np.roll(loop, -1, axis=0) - loop
    dd = np.einsum("ij,ij->i", d, d)
    dd[dd == 0] = 1.0
    diff = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("qej,ej->qe", diff, d) / dd, 0.0, 1.0)
    closest = a + t[:, :, None] * d
    return np.linalg.norm(pts[:, None, :] - closest, axis=2).min(axis=1)


def build_initial_implant(
    patch: FittedPatch,
    thickness: float,
    smooth_k: int = 10,
    smooth_lam: float = 0.5,
) -> ImplantModel:
    """Offset + ruled-surface construction over a fitted patch.

    Outer surface is the patch verbatim. Inner surface is the inward
    offset, smoothed (uniform Laplacian, rim pinned) because the raw
    offset inherits the triangulated patch's roughness. A ruled band
    closes the rim into a watertight solid.
    """
    if thickness <= 0:
        raise ImplantError("thickness must be positive")
    outer = patch.mesh
    rim = _patch_rim(outer)
    # The raw offset routinely micro-folds where a coarse drawn rim sits
    # over a dense interior (boundary normals tilt inward there), and the
    # smoothing pass is what ships. Check that surface, not the raw one.
    inner = offset_surface(outer, -thickness, check=False)
    inner = laplacian_smooth(inner, k=smooth_k, lam=smooth_lam, pinned=rim)
    n_cross = self_intersection_count(inner)
    if n_cross:
        warnings.warn(
            "inner surface self-intersects after smoothing "
            "(%d triangle pairs)" % n_cross,
            stacklevel=2,
        )

    # Band runs along the reversed rim so its directed edges complement
    # the outer surface's boundary edges (and the reversed inner's).
    nv = outer.n_vertices
    ra = rim[::-1]
    band = _zip_loops(outer.vertices[ra], inner.vertices[ra])
    band_faces = np.where(band < len(ra), ra[band % len(ra)], ra[band % len(ra)] + nv)
    solid = TriMesh(
        np.concatenate([outer.vertices, inner.vertices]),
        np.concatenate([outer.faces, inner.faces[:, ::-1] + nv, band_faces]),
    )
    rim_contour = SurfaceContour(
        points=outer.vertices[rim], normals=vertex_normals(outer)[rim]
    )
    model = ImplantModel(
        solid=solid,
        thickness=float(thickness),
        rim_contour=rim_contour,
        outer_patch=patch,
        provenance={
            "thickness": float(thickness),
            "smoothing": {"k": int(smooth_k), "lambda": float(smooth_lam)},
            "camera": patch.camera.to_dict(),
        },
    )
    return model


def build_final_implant(
    crania: TriMesh,
    initial: ImplantModel,
    inner_edge_contour: SurfaceContour,
    thickness: float,
    smooth_k: int = 10,
    smooth_lam: float = 0.5,
) -> ImplantModel:
    """Rebuild the implant with its rim regenerated against the defect's
    inner-edge contour.

    The contour is first lifted onto the outer patch along the view ray
    (it is usually drawn on the inner table, below the fitted surface),
    then the patch is refitted against the lifted footprint under the
    original camera and the offset/band construction reruns. With a
    contour equal to the patch boundary this is a fixed point: the lift
    is exact at patch vertices and the refit reproduces the initial
    patch.
    """
    if initial.outer_patch is None:
        raise ImplantError("initial implant carries no source patch")
    src = initial.outer_patch
    try:
        lifted = SurfaceContour(
            points=lift_to_patch(src.mesh, src.camera, inner_edge_contour.points),
            normals=inner_edge_contour.normals,
        )
        patch2 = fit_patch(src.mesh, lifted, cam=src.camera)
    except FitError as exc:
        raise ImplantError(
            "inner-edge contour footprint does not overlap the patch: %s" % exc
        ) from exc
    model = build_initial_implant(
        patch2, thickness, smooth_k=smooth_k, smooth_lam=smooth_lam
    )

    inner_rim = _patch_rim(patch2.mesh)
    inner_ring = model.solid.vertices[patch2.mesh.n_vertices + inner_rim]
    gaps = _point_to_polyline(inner_ring, inner_edge_contour.points)
    tol = 2.0 * mean_edge_length(crania)
    provenance = dict(model.provenance)
    provenance.update(
        {
            "rim_max_gap": float(gaps.max()),
            "rim_fit_tolerance": float(tol),
            "rim_fit_ok": bool(gaps.max() <= tol),
        }
    )
    return ImplantModel(
        solid=model.solid,
        thickness=model.thickness,
        rim_contour=model.rim_contour,
        outer_patch=model.outer_patch,
        provenance=provenance,
    )
