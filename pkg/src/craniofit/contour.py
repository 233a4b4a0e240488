"""Closed surface contours and loop-prism implicit clipping.

A contour drawn on a mesh defines an infinite prism: the loop swept
along the normalized mean of its per-point surface normals. The implicit
value of a query point is the 2D distance from its projection (along the
sweep direction) to the projected loop polygon, negative inside,
positive outside, zero on the swept wall. Clipping a mesh by that field
splits straddling triangles along the interpolated zero crossing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TriMesh, compact, unit

_CHUNK = 65536


def _projection_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed (u, v, direction) frame; u from the least-aligned axis."""
    a = int(np.argmin(np.abs(direction)))
    e = np.zeros(3)
    e[a] = 1.0
    u = unit(e - (e @ direction) * direction)
    v = np.cross(direction, u)
    return u, v


def _polygon_area(poly2: np.ndarray) -> float:
    x, y = poly2[:, 0], poly2[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_self_intersect(poly2: np.ndarray) -> bool:
    """Any proper crossing between non-adjacent closed-polyline segments."""
    n = len(poly2)
    a = poly2
    b = np.roll(poly2, -1, axis=0)
    for i in range(n - 2):
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if len(js) == 0:
            continue
        p, r = a[i], b[i] - a[i]
        q, s = a[js], b[js] - a[js]
        rxs = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        t_num = qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]
        u_num = qp[:, 0] * r[1] - qp[:, 1] * r[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = t_num / rxs
            u = u_num / rxs
        hit = (np.abs(rxs) > 1e-15) & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        if np.any(hit):
            return True
    return False


@dataclass(frozen=True)
class SurfaceContour:
    """Closed loop of points on a host mesh with per-point surface normals."""

    points: np.ndarray
    normals: np.ndarray
    host: str | None = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        n = np.asarray(self.normals, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3 or len(p) < 3:
            raise ValueError("contour needs at least 3 points of shape (N,3)")
        if n.shape != p.shape:
            raise ValueError("one normal per contour point required")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(n))):
            raise ValueError("non-finite contour data")
        gaps = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
        if np.any(gaps < 1e-9):
            raise ValueError("consecutive contour points coincide")
        lens = np.linalg.norm(n, axis=1)
        if np.any(lens < 1e-12):
            raise ValueError("zero-length contour normal")
        # Normalize only rows that need it: already-unit normals must
        # survive serialize/parse/construct cycles bit-for-bit, and
        # repeated division drifts by an ulp without ever settling.
        off = np.abs(lens - 1.0) >= 1e-12
        if np.any(off):
            n = np.where(off[:, None], n / lens[:, None], n)

        mean = n.mean(axis=0)
        if np.linalg.norm(mean) < 1e-6:
            raise ValueError("contour normals cancel; sweep direction undefined")
        direction = unit(mean)
        u, v = _projection_basis(direction)
        poly2 = np.stack([p @ u, p @ v], axis=1)
        diag = float(np.linalg.norm(poly2.max(axis=0) - poly2.min(axis=0)))
        if abs(_polygon_area(poly2)) < 1e-12 * max(diag, 1e-9) ** 2:
            raise ValueError("contour is degenerate (zero projected area)")
        if _segments_self_intersect(poly2):
            raise ValueError("contour self-intersects in its projection")

        object.__setattr__(self, "points", p)
        object.__setattr__(self, "normals", n)

    @property
    def mean_normal(self) -> np.ndarray:
        return unit(self.normals.mean(axis=0))

    def bbox_diagonal(self) -> float:
        return float(
            np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0))
        )


@dataclass(frozen=True)
class LoopImplicitRegion:
    """Infinite prism: the loop swept along +-direction."""

    loop: SurfaceContour
    direction: np.ndarray

    def __post_init__(self):
        d = unit(np.asarray(self.direction, dtype=np.float64))
        if d @ self.loop.mean_normal <= 0:
            raise ValueError("sweep direction opposes the contour normals")
        object.__setattr__(self, "direction", d)
        u, v = _projection_basis(d)
        poly2 = np.stack([self.loop.points @ u, self.loop.points @ v], axis=1)
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_poly2", poly2)

    def diameter(self) -> float:
        p = self._poly2
        return float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))


def build_implicit(contour: SurfaceContour) -> LoopImplicitRegion:
    """Sweep direction = normalized mean of the per-point surface normals."""
    return LoopImplicitRegion(contour, contour.mean_normal)


def _winding_number(q: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Winding number of each 2D query point about the closed polygon."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    wn = np.zeros(len(q), dtype=np.int64)
    for i in range(len(a)):
        ax, ay = a[i]
        bx, by = b[i]
        cross = (bx - ax) * (q[:, 1] - ay) - (q[:, 0] - ax) * (by - ay)
        up = (ay <= q[:, 1]) & (by > q[:, 1]) & (cross > 0)
        dn = (ay > q[:, 1]) & (by <= q[:, 1]) & (cross < 0)
        wn += up.astype(np.int64) - dn.astype(np.int64)
    return wn


def _boundary_distance(q: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """2D distance from each query point to the closed polyline."""
    a = poly
    d = np.roll(poly, -1, axis=0) - poly
    dd = np.einsum("ij,ij->i", d, d)
    diff = q[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("qej,ej->qe", diff, d) / dd, 0.0, 1.0)
    closest = a + t[:, :, None] * d
    dist = np.linalg.norm(q[:, None, :] - closest, axis=2)
    return dist.min(axis=1)


def eval_implicit(region: LoopImplicitRegion, p) -> np.ndarray | float:
    """Signed prism field: negative inside, positive outside, zero on
    the wall; magnitude is the projected distance to the loop polygon."""
    pts = np.asarray(p, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    poly = region._poly2
    out = np.empty(len(pts))
    # Bound the Q x E distance matrix to a few MB per chunk.
    step = max(256, 4_000_000 // max(len(poly), 1))
    for lo in range(0, len(pts), step):
        chunk = pts[lo : lo + step]
        q = np.stack([chunk @ region._u, chunk @ region._v], axis=1)
        dist = _boundary_distance(q, poly)
        inside = _winding_number(q, poly) != 0
        out[lo : lo + len(chunk)] = np.where(inside, -dist, dist)
    return float(out[0]) if single else out


def _refine_crossings(
    eval_fn, pa: np.ndarray, pb: np.ndarray, sa: np.ndarray, sb: np.ndarray, tol: float
) -> np.ndarray:
    """Bisect the sign changes of the true field along segments pa-pb.

    Linear interpolation is exact while one polygon edge stays the
    closest feature; near polygon corners it drifts, so bisection pins
    each crossing until |field| <= tol. All segments advance together,
    one vectorized field evaluation per step.
    """
    t = np.clip(sa / (sa - sb), 1e-9, 1.0 - 1e-9)
    p = pa + t[:, None] * (pb - pa)
    s = np.asarray(eval_fn(p), dtype=np.float64).reshape(-1)
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    slo = sa.copy()
    done = np.abs(s) <= tol
    for _ in range(60):
        if done.all():
            break
        act = ~done
        same = (s > 0) == (slo > 0)
        m = act & same
        lo[m] = t[m]
        slo[m] = s[m]
        m = act & ~same
        hi[m] = t[m]
        t[act] = 0.5 * (lo[act] + hi[act])
        p[act] = pa[act] + t[act, None] * (pb[act] - pa[act])
        s[act] = np.asarray(eval_fn(p[act]), dtype=np.float64).reshape(-1)
        done[act] = np.abs(s[act]) <= tol
    return p


def _clip_by_scalar(mesh: TriMesh, eval_fn, snap_tol: float, keep: str) -> TriMesh:
    """Split mesh along the zero set of a scalar field.

    Vertices with |field| < snap_tol count as exactly on the boundary,
    so re-clipping a clipped patch is a no-op. Crossing points are
    shared by both sides, which keeps the area partition exact.
    """
    if keep not in ("inside", "outside"):
        raise ValueError("keep must be 'inside' or 'outside'")
    if mesh.n_faces == 0:
        return mesh

    raw = np.empty(mesh.n_vertices)
    for lo in range(0, mesh.n_vertices, _CHUNK):
        raw[lo : lo + _CHUNK] = eval_fn(mesh.vertices[lo : lo + _CHUNK])
    raw = np.where(np.abs(raw) < snap_tol, 0.0, raw)
    s = -raw if keep == "outside" else raw

    fs = s[mesh.faces]
    neg_all = np.all(fs <= 0, axis=1)
    pos_any = np.any(fs > 0, axis=1)
    keep_whole = neg_all
    if keep == "outside":
        # Triangles lying exactly on the wall belong to the inside
        # result only, so the two keeps partition the input area.
        keep_whole = neg_all & np.any(fs < 0, axis=1)
    cross = pos_any & np.any(fs < 0, axis=1)
    cross_idx = np.nonzero(cross)[0]

    def cut_edges(tri, sv):
        neg = [i for i in range(3) if sv[i] < 0]
        pos = [i for i in range(3) if sv[i] > 0]
        zero = [i for i in range(3) if sv[i] == 0]
        if len(zero) == 1:
            return ((int(tri[pos[0]]), int(tri[neg[0]])),)
        lone = neg[0] if len(neg) == 1 else pos[0]
        a, b, c = lone, (lone + 1) % 3, (lone + 2) % 3
        return ((int(tri[a]), int(tri[b])), (int(tri[c]), int(tri[a])))

    # Collect every cut edge first and bisect them as one batch: the
    # field evaluation is vectorized over points, and one scalar
    # bisection per edge used to dominate clip time.
    keys: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for f_idx in cross_idx:
        for a, b in cut_edges(mesh.faces[f_idx], fs[f_idx]):
            key = (a, b) if a < b else (b, a)
            if key not in seen:
                seen.add(key)
                keys.append(key)

    base = mesh.n_vertices
    extra_verts = np.zeros((0, 3))
    cross_cache: dict[tuple[int, int], int] = {}
    if keys:
        ka = np.array([k[0] for k in keys])
        kb = np.array([k[1] for k in keys])
        extra_verts = _refine_crossings(
            eval_fn,
            mesh.vertices[ka],
            mesh.vertices[kb],
            raw[ka],
            raw[kb],
            0.5 * snap_tol,
        )
        cross_cache = {key: base + i for i, key in enumerate(keys)}

    whole_faces = mesh.faces[keep_whole]
    extra_faces: list[tuple[int, int, int]] = []

    def crossing(a: int, b: int) -> int:
        return cross_cache[(a, b) if a < b else (b, a)]

    for f_idx in cross_idx:
        tri = mesh.faces[f_idx]
        sv = fs[f_idx]
        neg = [i for i in range(3) if sv[i] < 0]
        pos = [i for i in range(3) if sv[i] > 0]
        zero = [i for i in range(3) if sv[i] == 0]
        if len(zero) == 1:
            # One vertex on the wall, one strictly each side: one cut.
            z, p_, n_ = zero[0], pos[0], neg[0]
            x = crossing(int(tri[p_]), int(tri[n_]))
            # Preserve winding: replace the positive vertex with x in
            # the original cyclic order.
            corner = [int(tri[0]), int(tri[1]), int(tri[2])]
            kept = corner.copy()
            kept[p_] = x
            extra_faces.append(tuple(kept))
        elif len(neg) == 1:
            # Lone kept vertex: single triangle survives.
            n_ = neg[0]
            a, b, c = (n_, (n_ + 1) % 3, (n_ + 2) % 3)
            xab = crossing(int(tri[a]), int(tri[b]))
            xca = crossing(int(tri[c]), int(tri[a]))
            extra_faces.append((int(tri[a]), xab, xca))
        else:
            # Lone dropped vertex: kept quad split into two triangles.
            p_ = pos[0]
            a, b, c = (p_, (p_ + 1) % 3, (p_ + 2) % 3)
            xab = crossing(int(tri[a]), int(tri[b]))
            xca = crossing(int(tri[c]), int(tri[a]))
            extra_faces.append((xab, int(tri[b]), int(tri[c])))
            extra_faces.append((xab, int(tri[c]), xca))

    verts = mesh.vertices
    if len(extra_verts):
        verts = np.concatenate([verts, extra_verts], axis=0)
    faces = np.concatenate(
        [whole_faces, np.array(extra_faces, dtype=np.int64).reshape(-1, 3)], axis=0
    )
    return compact(TriMesh(verts, faces))


def clip_mesh_by_implicit(
    mesh: TriMesh, region: LoopImplicitRegion, keep: str = "inside"
) -> TriMesh:
    """Clip along the prism wall; keep='inside' keeps the covered patch."""
    snap = 1e-6 * region.diameter()
    return _clip_by_scalar(mesh, lambda p: eval_implicit(region, p), snap, keep)


def clip_mesh_by_plane(mesh: TriMesh, plane, keep: str = "inside") -> TriMesh:
    """Clip by a plane's signed distance; inside = negative side. Test
    and tooling helper sharing the prism clipping machinery."""
    diag = float(
        np.linalg.norm(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0))
    ) if mesh.n_vertices else 1.0
    return _clip_by_scalar(
        mesh, lambda p: np.atleast_1d(plane.signed_distance(p)), 1e-9 * diag, keep
    )
