"""Shared test helpers: small mesh builders and slow reference oracles."""

import itertools

import numpy as np

from craniofit.camera import ViewCamera
from craniofit.contour import SurfaceContour
from craniofit.core import TriMesh
from craniofit.fitting import FittedPatch
from craniofit.predicates import incircle, orient2d


def box_mesh(lo, hi) -> TriMesh:
    """Axis-aligned box as 12 outward-oriented triangles."""
    lx, ly, lz = lo
    hx, hy, hz = hi
    v = np.array(
        [
            [lx, ly, lz], [hx, ly, lz], [hx, hy, lz], [lx, hy, lz],
            [lx, ly, hz], [hx, ly, hz], [hx, hy, hz], [lx, hy, hz],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7],
            [0, 1, 5], [0, 5, 4], [1, 2, 6], [1, 6, 5],
            [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7],
        ],
        dtype=np.int64,
    )
    return TriMesh(v, f)


def point_tri_distance(p, a, b, c) -> float:
    """Exact point-triangle distance by vertex/edge/plane decomposition.

    Deliberately a different formulation from the production code: the
    minimum over three vertices, three clamped segment feet, and the
    plane foot when it falls inside the triangle.
    """
    p, a, b, c = (np.asarray(x, dtype=np.float64) for x in (p, a, b, c))
    best = min(np.linalg.norm(p - a), np.linalg.norm(p - b), np.linalg.norm(p - c))
    for s, e in ((a, b), (b, c), (c, a)):
        d = e - s
        t = np.clip(np.dot(p - s, d) / np.dot(d, d), 0.0, 1.0)
        best = min(best, np.linalg.norm(p - (s + t * d)))
    n = np.cross(b - a, c - a)
    nn = np.dot(n, n)
    if nn > 0:
        foot = p - (np.dot(p - a, n) / nn) * n
        s1 = np.dot(np.cross(b - a, foot - a), n)
        s2 = np.dot(np.cross(c - b, foot - b), n)
        s3 = np.dot(np.cross(a - c, foot - c), n)
        if s1 >= 0 and s2 >= 0 and s3 >= 0:
            best = min(best, abs(np.dot(p - a, n)) / np.sqrt(nn))
    return float(best)


def brute_force_distances(points, mesh: TriMesh) -> np.ndarray:
    """Dense all-pairs point-to-triangle minimum, no spatial structure.

    Same vertex/edge/plane decomposition as point_tri_distance, just
    evaluated for every (point, triangle) pair at once.
    """
    p = np.asarray(points, dtype=np.float64)[:, None, :]
    tri = mesh.corners()
    best = np.full((p.shape[0], tri.shape[0]), np.inf)
    for j in range(3):
        best = np.minimum(best, np.linalg.norm(p - tri[None, :, j, :], axis=2))
    for s, e in ((0, 1), (1, 2), (2, 0)):
        a = tri[:, s, :]
        d = tri[:, e, :] - a
        dd = np.einsum("ij,ij->i", d, d)
        t = np.clip(np.einsum("nfj,fj->nf", p - a[None], d) / dd, 0.0, 1.0)
        foot = a[None] + t[:, :, None] * d[None]
        best = np.minimum(best, np.linalg.norm(p - foot, axis=2))
    a, b, c = tri[:, 0, :], tri[:, 1, :], tri[:, 2, :]
    n = np.cross(b - a, c - a)
    nn = np.einsum("ij,ij->i", n, n)
    ok = nn > 0
    safe = np.where(ok, nn, 1.0)
    h = np.einsum("nfj,fj->nf", p - a[None], n)
    foot = p - (h / safe)[:, :, None] * n[None]
    s1 = np.einsum("nfj,fj->nf", np.cross((b - a)[None], foot - a[None]), n)
    s2 = np.einsum("nfj,fj->nf", np.cross((c - b)[None], foot - b[None]), n)
    s3 = np.einsum("nfj,fj->nf", np.cross((a - c)[None], foot - c[None]), n)
    inside = (s1 >= 0) & (s2 >= 0) & (s3 >= 0) & ok[None, :]
    best = np.where(inside, np.minimum(best, np.abs(h) / np.sqrt(safe)), best)
    return best.min(axis=1)


def polar_patch(radius, half_angle_deg, rings, seg, flat=False, center=(0, 0, 0)):
    """Structured cap (or flat disk) with its rim exactly on the closing
    circle, so analytic volumes apply without boundary raggedness."""
    half = np.radians(half_angle_deg)
    apex_z = 0.0 if flat else radius
    vs = [np.array([0.0, 0.0, apex_z])]
    faces = []
    for k in range(1, rings + 1):
        phi = np.linspace(0, 2 * np.pi, seg, endpoint=False)
        if flat:
            rr = radius * k / rings
            ring = np.stack([rr * np.cos(phi), rr * np.sin(phi), np.zeros(seg)], axis=1)
        else:
            th = half * k / rings
            ring = np.stack(
                [
                    radius * np.sin(th) * np.cos(phi),
                    radius * np.sin(th) * np.sin(phi),
                    np.full(seg, radius * np.cos(th)),
                ],
                axis=1,
            )
        vs.append(ring)
    V = np.concatenate([np.array([vs[0]]), *vs[1:]], axis=0) + np.asarray(center, float)
    for j in range(seg):
        faces.append([0, 1 + j, 1 + (j + 1) % seg])
    for k in range(rings - 1):
        a0, b0 = 1 + k * seg, 1 + (k + 1) * seg
        for j in range(seg):
            jn = (j + 1) % seg
            faces.append([a0 + j, b0 + j, b0 + jn])
            faces.append([a0 + j, b0 + jn, a0 + jn])
    mesh = TriMesh(V, np.array(faces, dtype=np.int64))
    rim = V[1 + (rings - 1) * seg:]
    if flat:
        normals = np.tile([0.0, 0.0, 1.0], (seg, 1))
    else:
        normals = (rim - np.asarray(center, float))
        normals /= np.linalg.norm(normals, axis=1)[:, None]
    contour = SurfaceContour(points=rim, normals=normals)
    cam = ViewCamera(
        eye=np.asarray(center, float) + [0, 0, radius + 100.0],
        look_at=center, up=(0, 1, 0), scale=0.2,
    )
    return FittedPatch(mesh=mesh, contour=contour, camera=cam)


def canon(tri):
    """Rotate an index triple to start at its smallest member, keeping
    orientation."""
    a, b, c = (int(x) for x in tri)
    if a <= b and a <= c:
        return (a, b, c)
    if b <= a and b <= c:
        return (b, c, a)
    return (c, a, b)


def brute_force_delaunay(pts):
    """All CCW triples whose open circumcircle is empty, by exhaustive
    enumeration with the exact predicates. For points with no 4
    cocircular this is the unique Delaunay triangulation."""
    n = len(pts)
    out = set()
    for i, j, k in itertools.combinations(range(n), 3):
        s = orient2d(*pts[i], *pts[j], *pts[k])
        if s == 0:
            continue
        t = (i, j, k) if s > 0 else (i, k, j)
        empty = True
        for m in range(n):
            if m in t:
                continue
            if incircle(*pts[t[0]], *pts[t[1]], *pts[t[2]], *pts[m]) > 0:
                empty = False
                break
        if empty:
            out.add(canon(t))
    return out


def circle_loop(n, r, z=0.0, center=(0.0, 0.0)) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.stack(
        [center[0] + r * np.cos(t), center[1] + r * np.sin(t), np.full(n, float(z))],
        axis=1,
    )
