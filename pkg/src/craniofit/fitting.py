"""Surface patch fitting: select points near a contour, project them
through a camera, triangulate in screen space, lift back to 3D.

The patch is a height field over the view plane, so its quality depends
on the camera: triangles seen edge-on fold over. fit_patch validates
that every triangle still faces the eye.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .camera import ViewCamera, default_contour_camera
from .contour import (
    SurfaceContour,
    _boundary_distance,
    _winding_number,
    build_implicit,
    eval_implicit,
)
from .core import TriMesh, _UnionFind, boundary_loops, compact, mesh_stats, unit
from .delaunay import delaunay_indices
from .predicates import orient2d


class FitError(ValueError):
    pass


def collect_patch_points(mesh: TriMesh, contour: SurfaceContour) -> np.ndarray:
    """Mesh vertices inside or on the contour region, plus the contour
    points themselves. Raises FitError when no mesh vertex qualifies."""
    region = build_implicit(contour)
    vals = eval_implicit(region, mesh.vertices)
    picked = mesh.vertices[vals <= 0.0]
    if picked.shape[0] == 0:
        raise FitError("contour selects no mesh vertices")
    return np.concatenate([picked, contour.points], axis=0)


def project_dedup(
    points: np.ndarray,
    cam: ViewCamera,
    bin_pixels: float = 1.0,
) -> np.ndarray:
    """Keep one point per screen-space bin, the one nearest the eye.

    bin_pixels sets the bin edge length in pixels; it is the knob that
    controls patch point density. Depth ties keep the earlier point.
    Output preserves input order. Perspective cameras silently drop
    points behind the eye and error only when none remain.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise FitError("expected at least one 3D point")
    if bin_pixels <= 0.0:
        raise FitError("bin_pixels must be positive")

    keep = np.arange(pts.shape[0])
    if cam.projection == "perspective":
        forward = unit(np.asarray(cam.look_at) - np.asarray(cam.eye))
        depth_all = (pts - np.asarray(cam.eye)) @ forward
        keep = keep[depth_all > 1e-12]
        if keep.size == 0:
            raise FitError("all points behind the camera")
    display, depth = cam.world_to_display(pts[keep])

    bins = np.floor(display / bin_pixels).astype(np.int64)
    best: dict[tuple[int, int], tuple[float, int]] = {}
    rows: dict[int, int] = {}
    for row in range(keep.size):
        key = (int(bins[row, 0]), int(bins[row, 1]))
        cand = (float(depth[row]), int(keep[row]))
        rows[int(keep[row])] = row
        if key not in best or cand < best[key]:
            best[key] = cand
    survivors = sorted(idx for _, idx in best.values())

    # A sample sitting near a bin edge splits its neighbors into
    # adjacent pixels even when they are far closer than a bin, and
    # such pairs become knife-edge slivers in the triangulation (they
    # cross once the patch is offset). Merge survivors closer than a
    # bin fraction, front-most wins as above.
    if len(survivors) > 1:
        srows = [rows[idx] for idx in survivors]
        pairs = cKDTree(display[srows]).query_pairs(
            0.35 * bin_pixels, output_type="ndarray"
        )
        if len(pairs):
            uf = _UnionFind(len(survivors))
            for a, b in pairs:
                uf.union(int(a), int(b))
            merged: dict[int, tuple[float, int]] = {}
            for i, idx in enumerate(survivors):
                root = uf.find(i)
                cand = (float(depth[srows[i]]), idx)
                if root not in merged or cand < merged[root]:
                    merged[root] = cand
            survivors = sorted(idx for _, idx in merged.values())
    return pts[survivors]


def delaunay_fit(
    points: np.ndarray,
    cam: ViewCamera,
    contour: SurfaceContour | None = None,
    trim_slack_px: float = 0.75,
) -> TriMesh:
    """Triangulate the screen-space projection of points and lift the
    connectivity back to 3D.

    Triangles are CCW on screen, which makes the lifted normals face
    the eye. When a contour is given, triangles whose projected
    centroid falls outside the projected contour polygon are removed
    (Delaunay fills the convex hull; the patch should fill the contour
    footprint instead). Slivers whose centroid lies within
    trim_slack_px of the polygon survive the trim: rim points sit on
    the polygon itself, and cutting their slivers can pinch the rim.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise FitError("expected (N,3) points")
    if pts.shape[0] < 3:
        raise FitError("need at least 3 points")
    display, _ = cam.world_to_display(pts)
    try:
        faces = delaunay_indices(display)
    except ValueError as exc:
        raise FitError(str(exc)) from exc

    if contour is not None:
        poly, _ = cam.world_to_display(contour.points)
        centroids = display[faces].mean(axis=1)
        keep = _winding_number(centroids, poly) != 0
        if trim_slack_px > 0.0:
            keep |= _boundary_distance(centroids, poly) <= trim_slack_px
        faces = faces[keep]
        if faces.shape[0] == 0:
            raise FitError("no triangles inside the contour footprint")
    return compact(TriMesh(vertices=pts, faces=faces))


def lift_to_patch(patch: TriMesh, cam: ViewCamera, points) -> np.ndarray:
    """Move each point onto the patch surface point under the same pixel.

    Barycentric interpolation inside the face that covers the point's
    projection. A point that coincides with a patch vertex on screen
    comes back as exactly that vertex (its weight is x/x = 1), so a
    contour equal to the patch boundary round-trips unchanged. Raises
    FitError when some projection is not covered by any face.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise FitError("expected at least one 3D point")
    if patch.n_faces == 0:
        raise FitError("patch has no faces")
    display, _ = cam.world_to_display(pts)
    vdisp, vdepth = cam.world_to_display(patch.vertices)
    tri = vdisp[patch.faces]
    a, b, c = tri[None, :, 0], tri[None, :, 1], tri[None, :, 2]
    x = display[:, None, :]

    def edge(p, q):
        return (q[..., 0] - p[..., 0]) * (x[..., 1] - p[..., 1]) - (
            q[..., 1] - p[..., 1]
        ) * (x[..., 0] - p[..., 0])

    # Signed doubled areas; faces are CCW on screen so the full-face
    # area wa+wb+wc is positive and the weights sum to 1.
    wa = edge(b, c)
    wb = edge(c, a)
    wc = edge(a, b)
    total = wa + wb + wc
    diag = float(np.linalg.norm(vdisp.max(axis=0) - vdisp.min(axis=0)))
    slack = 1e-9 * diag * diag
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.minimum(np.minimum(wa, wb), wc) / total
    score[(wa < -slack) | (wb < -slack) | (wc < -slack)] = -np.inf
    score[total <= 0.0] = -np.inf
    pick = np.argmax(score, axis=1)
    rows = np.arange(pts.shape[0])
    if not np.all(np.isfinite(score[rows, pick])):
        misses = int(np.sum(~np.isfinite(score[rows, pick])))
        raise FitError(
            "%d point(s) project outside the fitted patch" % misses
        )
    fa, fb, fc = (patch.faces[pick, k] for k in range(3))
    u = wa[rows, pick] / total[rows, pick]
    v = wb[rows, pick] / total[rows, pick]
    w = wc[rows, pick] / total[rows, pick]
    if cam.projection == "perspective":
        # Screen barycentrics need the depth correction to interpolate
        # world positions; no exactness claim on this branch.
        u, v, w = u / vdepth[fa], v / vdepth[fb], w / vdepth[fc]
        s = u + v + w
        u, v, w = u / s, v / s, w / s
    verts = patch.vertices
    return u[:, None] * verts[fa] + v[:, None] * verts[fb] + w[:, None] * verts[fc]


@dataclass(frozen=True)
class FittedPatch:
    """Open disk-topology surface spanning a contour."""

    mesh: TriMesh
    contour: SurfaceContour
    camera: ViewCamera

    def __post_init__(self):
        stats = mesh_stats(self.mesh)
        loops = boundary_loops(self.mesh)
        if stats.euler_characteristic != 1 or len(loops) != 1:
            raise FitError(
                "patch is not a disk: chi=%d, %d boundary loops"
                % (stats.euler_characteristic, len(loops))
            )


def fit_patch(
    mesh: TriMesh,
    contour: SurfaceContour,
    cam: ViewCamera | None = None,
    bin_pixels: float = 1.0,
) -> FittedPatch:
    """Full fitting chain: collect, dedup, triangulate, trim, validate.

    Also rejects fold-overs: every patch triangle normal must have a
    positive dot product with the direction from the patch toward the
    eye, otherwise the camera sees the surface edge-on somewhere and
    the height-field assumption broke.
    """
    if cam is None:
        cam = default_contour_camera(contour)
    pts = collect_patch_points(mesh, contour)

    # Mesh vertices a fraction of a pixel inside the rim would pair
    # with the contour points into knife-edge triangles (and those
    # cross when the patch is offset later). Cull them; the contour
    # points themselves still pin the rim exactly.
    nm = pts.shape[0] - contour.points.shape[0]
    display, _ = cam.world_to_display(pts[:nm])
    poly, _ = cam.world_to_display(contour.points)
    keep = _boundary_distance(display, poly) >= 0.5 * bin_pixels
    pts = np.concatenate([pts[:nm][keep], pts[nm:]], axis=0)

    pts = project_dedup(pts, cam, bin_pixels=bin_pixels)
    patch = delaunay_fit(
        pts, cam, contour=contour, trim_slack_px=0.75 * bin_pixels
    )

    # Facing the eye == projected CCW; decide with the exact predicate so
    # screen-space slivers along the rim do not misreport as folds.
    display, _ = cam.world_to_display(patch.vertices)
    for a, b, c in patch.faces:
        if orient2d(*display[a], *display[b], *display[c]) <= 0:
            raise FitError("fold-over: some patch triangles face away from the eye")
    return FittedPatch(mesh=patch, contour=contour, camera=cam)
