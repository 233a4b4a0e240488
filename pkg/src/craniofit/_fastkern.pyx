# cython: language_level=3
"""Compiled hot kernels.

Every kernel has a numpy twin in the package and must produce
bit-identical output (same IEEE ops, no FMA: built with
-ffp-contract=off). The sweep here is organized edge-pass style:
per-row crossing counts and trim windows first, then prefix-sum
allocation, then one generation pass that touches only active spans.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, floor, sqrt

cnp.import_array()

from .mc_tables import CORNER_OFFSETS, N_CASE_TRIS, TRI_TABLE

cdef cnp.int8_t[:, ::1] _TRI = np.ascontiguousarray(TRI_TABLE, dtype=np.int8)
cdef cnp.int8_t[::1] _NT = np.ascontiguousarray(N_CASE_TRIS, dtype=np.int8)
cdef cnp.int64_t[:, ::1] _CORNER = np.ascontiguousarray(CORNER_OFFSETS, dtype=np.int64)

# Edge e: low-corner offset (3) + axis, derived from the table module.
cdef cnp.int64_t[:, ::1] _EDGE = np.array(
    [
        (0, 0, 0, 0), (1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 0, 1),
        (0, 0, 1, 0), (1, 0, 1, 1), (0, 1, 1, 0), (0, 0, 1, 1),
        (0, 0, 0, 2), (1, 0, 0, 2), (1, 1, 0, 2), (0, 1, 0, 2),
    ],
    dtype=np.int64,
)


def mc_sweep(double[:, :, ::1] s, double iso, double[::1] origin, double[::1] spacing):
    """Marching sweep over a C-contiguous (nx,ny,nz) sample grid.

    Returns (verts (N,3) float64, faces (M,3) int64), elementwise equal
    to the numpy fallback's output.
    """
    cdef Py_ssize_t nx = s.shape[0], ny = s.shape[1], nz = s.shape[2]
    cdef Py_ssize_t i, j, k, e, c, n, w, vid
    cdef int case_idx, ntri, t0
    cdef double s0, s1, t

    cdef cnp.uint8_t[:, :, ::1] below = np.empty((nx, ny, nz), dtype=np.uint8)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                below[i, j, k] = 1 if s[i, j, k] < iso else 0

    # Pass 1: per-row crossing counts and trim windows for each axis.
    cdef cnp.int64_t[:, ::1] xcnt = np.zeros((nx - 1, ny), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ycnt = np.zeros((nx, ny - 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] zcnt = np.zeros((nx, ny), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] xw0 = np.full((nx - 1, ny), nz, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] xw1 = np.full((nx - 1, ny), -1, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] yw0 = np.full((nx, ny - 1), nz, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] yw1 = np.full((nx, ny - 1), -1, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] zw0 = np.full((nx, ny), nz, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] zw1 = np.full((nx, ny), -1, dtype=np.int64)

    for i in range(nx - 1):
        for j in range(ny):
            for k in range(nz):
                if below[i, j, k] != below[i + 1, j, k]:
                    xcnt[i, j] += 1
                    if k < xw0[i, j]:
                        xw0[i, j] = k
                    xw1[i, j] = k
    for i in range(nx):
        for j in range(ny - 1):
            for k in range(nz):
                if below[i, j, k] != below[i, j + 1, k]:
                    ycnt[i, j] += 1
                    if k < yw0[i, j]:
                        yw0[i, j] = k
                    yw1[i, j] = k
    for i in range(nx):
        for j in range(ny):
            for k in range(nz - 1):
                if below[i, j, k] != below[i, j, k + 1]:
                    zcnt[i, j] += 1
                    if k < zw0[i, j]:
                        zw0[i, j] = k
                    zw1[i, j] = k

    # Pass 2: per cell row, count triangles inside the trimmed window.
    cdef cnp.int64_t[:, ::1] tcnt = np.zeros((nx - 1, ny - 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] cw0 = np.zeros((nx - 1, ny - 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] cw1 = np.zeros((nx - 1, ny - 1), dtype=np.int64)
    cdef Py_ssize_t k0, k1
    cdef cnp.int64_t v

    for i in range(nx - 1):
        for j in range(ny - 1):
            k0 = nz
            k1 = -1
            v = zw0[i, j]
            if v < k0: k0 = v
            v = zw0[i + 1, j]
            if v < k0: k0 = v
            v = zw0[i, j + 1]
            if v < k0: k0 = v
            v = zw0[i + 1, j + 1]
            if v < k0: k0 = v
            v = xw0[i, j] - 1
            if v < k0: k0 = v
            v = xw0[i, j + 1] - 1
            if v < k0: k0 = v
            v = yw0[i, j] - 1
            if v < k0: k0 = v
            v = yw0[i + 1, j] - 1
            if v < k0: k0 = v
            v = zw1[i, j]
            if v > k1: k1 = v
            v = zw1[i + 1, j]
            if v > k1: k1 = v
            v = zw1[i, j + 1]
            if v > k1: k1 = v
            v = zw1[i + 1, j + 1]
            if v > k1: k1 = v
            v = xw1[i, j]
            if v > k1: k1 = v
            v = xw1[i, j + 1]
            if v > k1: k1 = v
            v = yw1[i, j]
            if v > k1: k1 = v
            v = yw1[i + 1, j]
            if v > k1: k1 = v
            if k0 < 0: k0 = 0
            if k1 > nz - 2: k1 = nz - 2
            cw0[i, j] = k0
            cw1[i, j] = k1
            if k1 < k0:
                continue
            for k in range(k0, k1 + 1):
                case_idx = (
                    below[i, j, k]
                    | (below[i + 1, j, k] << 1)
                    | (below[i + 1, j + 1, k] << 2)
                    | (below[i, j + 1, k] << 3)
                    | (below[i, j, k + 1] << 4)
                    | (below[i + 1, j, k + 1] << 5)
                    | (below[i + 1, j + 1, k + 1] << 6)
                    | (below[i, j + 1, k + 1] << 7)
                )
                tcnt[i, j] += _NT[case_idx]

    # Pass 3: prefix-sum allocation. Vertex ids come in three blocks
    # (x, y, z edges) numbered in row-major scan order per block.
    nxc = int(np.asarray(xcnt).sum())
    nyc = int(np.asarray(ycnt).sum())
    nzc = int(np.asarray(zcnt).sum())
    ntris = int(np.asarray(tcnt).sum())
    xbase_np = np.concatenate([[0], np.cumsum(np.asarray(xcnt).ravel())])[:-1]
    ybase_np = nxc + np.concatenate([[0], np.cumsum(np.asarray(ycnt).ravel())])[:-1]
    zbase_np = nxc + nyc + np.concatenate([[0], np.cumsum(np.asarray(zcnt).ravel())])[:-1]
    tbase_np = np.concatenate([[0], np.cumsum(np.asarray(tcnt).ravel())])[:-1]
    cdef cnp.int64_t[::1] xbase = np.ascontiguousarray(xbase_np, dtype=np.int64)
    cdef cnp.int64_t[::1] ybase = np.ascontiguousarray(ybase_np, dtype=np.int64)
    cdef cnp.int64_t[::1] zbase = np.ascontiguousarray(zbase_np, dtype=np.int64)
    cdef cnp.int64_t[::1] tbase = np.ascontiguousarray(tbase_np, dtype=np.int64)

    verts_np = np.empty((nxc + nyc + nzc, 3), dtype=np.float64)
    faces_np = np.empty((ntris, 3), dtype=np.int64)
    if ntris == 0:
        return np.zeros((0, 3), dtype=np.float64), np.zeros((0, 3), dtype=np.int64)
    cdef double[:, ::1] verts = verts_np
    cdef cnp.int64_t[:, ::1] faces = faces_np

    cdef cnp.int64_t[:, :, ::1] vid_x = np.empty((nx - 1, ny, nz), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] vid_y = np.empty((nx, ny - 1, nz), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] vid_z = np.empty((nx, ny, nz - 1), dtype=np.int64)

    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double hx = spacing[0], hy = spacing[1], hz = spacing[2]

    # Pass 4a: interpolate one vertex per crossed edge.
    for i in range(nx - 1):
        for j in range(ny):
            vid = xbase[i * ny + j]
            if xw1[i, j] < 0:
                continue
            for k in range(xw0[i, j], xw1[i, j] + 1):
                if below[i, j, k] != below[i + 1, j, k]:
                    s0 = s[i, j, k]
                    s1 = s[i + 1, j, k]
                    t = (iso - s0) / (s1 - s0)
                    verts[vid, 0] = ox + hx * (i + t)
                    verts[vid, 1] = oy + hy * j
                    verts[vid, 2] = oz + hz * k
                    vid_x[i, j, k] = vid
                    vid += 1
    for i in range(nx):
        for j in range(ny - 1):
            vid = ybase[i * (ny - 1) + j]
            if yw1[i, j] < 0:
                continue
            for k in range(yw0[i, j], yw1[i, j] + 1):
                if below[i, j, k] != below[i, j + 1, k]:
                    s0 = s[i, j, k]
                    s1 = s[i, j + 1, k]
                    t = (iso - s0) / (s1 - s0)
                    verts[vid, 0] = ox + hx * i
                    verts[vid, 1] = oy + hy * (j + t)
                    verts[vid, 2] = oz + hz * k
                    vid_y[i, j, k] = vid
                    vid += 1
    for i in range(nx):
        for j in range(ny):
            vid = zbase[i * ny + j]
            if zw1[i, j] < 0:
                continue
            for k in range(zw0[i, j], zw1[i, j] + 1):
                if below[i, j, k] != below[i, j, k + 1]:
                    s0 = s[i, j, k]
                    s1 = s[i, j, k + 1]
                    t = (iso - s0) / (s1 - s0)
                    verts[vid, 0] = ox + hx * i
                    verts[vid, 1] = oy + hy * j
                    verts[vid, 2] = oz + hz * (k + t)
                    vid_z[i, j, k] = vid
                    vid += 1

    # Pass 4b: emit triangles from the case table.
    cdef Py_ssize_t ei, ej, ek, ax
    for i in range(nx - 1):
        for j in range(ny - 1):
            if cw1[i, j] < cw0[i, j]:
                continue
            w = tbase[i * (ny - 1) + j]
            for k in range(cw0[i, j], cw1[i, j] + 1):
                case_idx = (
                    below[i, j, k]
                    | (below[i + 1, j, k] << 1)
                    | (below[i + 1, j + 1, k] << 2)
                    | (below[i, j + 1, k] << 3)
                    | (below[i, j, k + 1] << 4)
                    | (below[i + 1, j, k + 1] << 5)
                    | (below[i + 1, j + 1, k + 1] << 6)
                    | (below[i, j + 1, k + 1] << 7)
                )
                ntri = _NT[case_idx]
                for t0 in range(ntri * 3):
                    e = _TRI[case_idx, t0]
                    ei = i + _EDGE[e, 0]
                    ej = j + _EDGE[e, 1]
                    ek = k + _EDGE[e, 2]
                    ax = _EDGE[e, 3]
                    if ax == 0:
                        vid = vid_x[ei, ej, ek]
                    elif ax == 1:
                        vid = vid_y[ei, ej, ek]
                    else:
                        vid = vid_z[ei, ej, ek]
                    faces[w + t0 // 3, t0 % 3] = vid
                w += ntri

    return verts_np, faces_np


cdef inline double _tri_sqdist(const double* t, double p0, double p1, double p2) noexcept nogil:
    """Squared point-triangle distance, Voronoi-region walk.

    The branch order here is the first-match reading of the fallback's
    where-cascade (there the last overwrite wins, so the cascade runs
    in the opposite order). Dot products are left-associated to match
    the numpy route bit for bit.
    """
    cdef double a0 = t[0], a1 = t[1], a2 = t[2]
    cdef double b0 = t[3], b1 = t[4], b2 = t[5]
    cdef double c0 = t[6], c1 = t[7], c2 = t[8]
    cdef double ab0 = b0 - a0, ab1 = b1 - a1, ab2 = b2 - a2
    cdef double ac0 = c0 - a0, ac1 = c1 - a1, ac2 = c2 - a2
    cdef double ap0 = p0 - a0, ap1 = p1 - a1, ap2 = p2 - a2
    cdef double d1 = ab0 * ap0 + ab1 * ap1 + ab2 * ap2
    cdef double d2 = ac0 * ap0 + ac1 * ap1 + ac2 * ap2
    cdef double bp0 = p0 - b0, bp1 = p1 - b1, bp2 = p2 - b2
    cdef double d3 = ab0 * bp0 + ab1 * bp1 + ab2 * bp2
    cdef double d4 = ac0 * bp0 + ac1 * bp1 + ac2 * bp2
    cdef double cp0 = p0 - c0, cp1 = p1 - c1, cp2 = p2 - c2
    cdef double d5 = ab0 * cp0 + ab1 * cp1 + ab2 * cp2
    cdef double d6 = ac0 * cp0 + ac1 * cp1 + ac2 * cp2
    cdef double vc = d1 * d4 - d3 * d2
    cdef double vb = d5 * d2 - d1 * d6
    cdef double va = d3 * d6 - d5 * d4
    cdef double s, v, w, denom, q0, q1, q2, e0, e1, e2
    if d1 <= 0.0 and d2 <= 0.0:
        q0 = a0
        q1 = a1
        q2 = a2
    elif d3 >= 0.0 and d4 <= d3:
        q0 = b0
        q1 = b1
        q2 = b2
    elif vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        s = d1 / (d1 - d3)
        q0 = a0 + s * ab0
        q1 = a1 + s * ab1
        q2 = a2 + s * ab2
    elif d6 >= 0.0 and d5 <= d6:
        q0 = c0
        q1 = c1
        q2 = c2
    elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        s = d2 / (d2 - d6)
        q0 = a0 + s * ac0
        q1 = a1 + s * ac1
        q2 = a2 + s * ac2
    elif va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
        s = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        q0 = b0 + s * (c0 - b0)
        q1 = b1 + s * (c1 - b1)
        q2 = b2 + s * (c2 - b2)
    else:
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        q0 = a0 + v * ab0 + w * ac0
        q1 = a1 + v * ab1 + w * ac1
        q2 = a2 + v * ab2 + w * ac2
    e0 = p0 - q0
    e1 = p1 - q1
    e2 = p2 - q2
    return e0 * e0 + e1 * e1 + e2 * e2


cdef inline double _box_sqdist(const double* lo, const double* hi, double p0, double p1, double p2) noexcept nogil:
    cdef double d, sq = 0.0
    d = lo[0] - p0
    if d < 0.0:
        d = p0 - hi[0]
    if d > 0.0:
        sq += d * d
    d = lo[1] - p1
    if d < 0.0:
        d = p1 - hi[1]
    if d > 0.0:
        sq += d * d
    d = lo[2] - p2
    if d < 0.0:
        d = p2 - hi[2]
    if d > 0.0:
        sq += d * d
    return sq


def bvh_distance(
    double[:, ::1] pts,
    double[:, :, ::1] tris,
    double[:, ::1] lo,
    double[:, ::1] hi,
    cnp.int64_t[::1] left,
    cnp.int64_t[::1] right,
    cnp.int64_t[::1] start,
    cnp.int64_t[::1] count,
    cnp.int64_t[::1] order,
):
    """Minimum point-to-mesh distance over the flat BVH arrays.

    Branch-and-bound with squared AABB lower bounds; a node is pruned
    only when its bound already reaches the best exact squared distance
    found, so the minimum equals the fallback's candidate-set minimum
    and the final sqrt matches it bit for bit.
    """
    cdef Py_ssize_t nq = pts.shape[0]
    out_np = np.empty(nq, dtype=np.float64)
    cdef double[::1] out = out_np
    # Median split by count halves each level: depth stays < 64 for
    # any face count an int64 can hold, and ordered DFS pushes at most
    # one extra node per level.
    cdef Py_ssize_t stack[128]
    cdef Py_ssize_t sp, node, l, r, f, q
    cdef double best, dl, dr, px, py, pz
    with nogil:
        for q in range(nq):
            px = pts[q, 0]
            py = pts[q, 1]
            pz = pts[q, 2]
            best = INFINITY
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if _box_sqdist(&lo[node, 0], &hi[node, 0], px, py, pz) >= best:
                    continue
                l = left[node]
                if l < 0:
                    for f in range(start[node], start[node] + count[node]):
                        dl = _tri_sqdist(&tris[order[f], 0, 0], px, py, pz)
                        if dl < best:
                            best = dl
                else:
                    r = right[node]
                    dl = _box_sqdist(&lo[l, 0], &hi[l, 0], px, py, pz)
                    dr = _box_sqdist(&lo[r, 0], &hi[r, 0], px, py, pz)
                    if dl <= dr:
                        stack[sp] = r
                        sp += 1
                        stack[sp] = l
                        sp += 1
                    else:
                        stack[sp] = l
                        sp += 1
                        stack[sp] = r
                        sp += 1
            out[q] = sqrt(best)
    return out_np


cdef void _parity_axis(
    double[:, :, ::1] tris,
    double[::1] lo,
    double voxel,
    cnp.int64_t[::1] dims,
    Py_ssize_t axis,
    cnp.uint8_t[:, :, ::1] votes,
    cnp.uint8_t[:, :, ::1] flips,
) noexcept nogil:
    """One column-parity pass; adds the inside mask into votes."""
    cdef Py_ssize_t u = (axis + 1) % 3, v = (axis + 2) % 3
    cdef Py_ssize_t nu = dims[u], nv = dims[v], nw = dims[axis]
    cdef Py_ssize_t nf = tris.shape[0]
    cdef Py_ssize_t f, d, i, j, w
    cdef double av[3]
    cdef double bv[3]
    cdef double cv[3]
    cdef double x0, y0, x1, y1, x2, y2, area2, tmp
    cdef double mn, mx, px, py, wstar
    cdef double dx1, dy1, dx2, dy2, dx3, dy3, e
    cdef double eb0, eb1, eb2, ec0, ec1, ec2, n0, n1, n2, nuu, nvv, nax
    cdef long long ilo, ihi, jlo, jhi, lay
    cdef bint tl1, tl2, tl3, cover
    cdef cnp.uint8_t acc, par

    for f in range(nf):
        for d in range(3):
            av[d] = tris[f, 0, d]
            bv[d] = tris[f, 1, d]
            cv[d] = tris[f, 2, d]
        x0 = av[u]
        y0 = av[v]
        x1 = bv[u]
        y1 = bv[v]
        x2 = cv[u]
        y2 = cv[v]
        area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            tmp = x1
            x1 = x2
            x2 = tmp
            tmp = y1
            y1 = y2
            y2 = tmp
            for d in range(3):
                tmp = bv[d]
                bv[d] = cv[d]
                cv[d] = tmp
            area2 = -area2
        mn = x0
        if x1 < mn:
            mn = x1
        if x2 < mn:
            mn = x2
        mx = x0
        if x1 > mx:
            mx = x1
        if x2 > mx:
            mx = x2
        ilo = <long long>floor((mn - lo[u]) / voxel - 0.5)
        if ilo < 0:
            ilo = 0
        ihi = <long long>ceil((mx - lo[u]) / voxel - 0.5)
        if ihi > nu - 1:
            ihi = nu - 1
        mn = y0
        if y1 < mn:
            mn = y1
        if y2 < mn:
            mn = y2
        mx = y0
        if y1 > mx:
            mx = y1
        if y2 > mx:
            mx = y2
        jlo = <long long>floor((mn - lo[v]) / voxel - 0.5)
        if jlo < 0:
            jlo = 0
        jhi = <long long>ceil((mx - lo[v]) / voxel - 0.5)
        if jhi > nv - 1:
            jhi = nv - 1
        if ilo > ihi or jlo > jhi:
            continue

        dx1 = x1 - x0
        dy1 = y1 - y0
        dx2 = x2 - x1
        dy2 = y2 - y1
        dx3 = x0 - x2
        dy3 = y0 - y2
        tl1 = dy1 < 0.0 or (dy1 == 0.0 and dx1 < 0.0)
        tl2 = dy2 < 0.0 or (dy2 == 0.0 and dx2 < 0.0)
        tl3 = dy3 < 0.0 or (dy3 == 0.0 and dx3 < 0.0)
        eb0 = bv[0] - av[0]
        eb1 = bv[1] - av[1]
        eb2 = bv[2] - av[2]
        ec0 = cv[0] - av[0]
        ec1 = cv[1] - av[1]
        ec2 = cv[2] - av[2]
        n0 = eb1 * ec2 - eb2 * ec1
        n1 = eb2 * ec0 - eb0 * ec2
        n2 = eb0 * ec1 - eb1 * ec0
        if u == 0:
            nuu = n0
        elif u == 1:
            nuu = n1
        else:
            nuu = n2
        if v == 0:
            nvv = n0
        elif v == 1:
            nvv = n1
        else:
            nvv = n2
        if axis == 0:
            nax = n0
        elif axis == 1:
            nax = n1
        else:
            nax = n2

        for i in range(ilo, ihi + 1):
            px = lo[u] + ((<double>i + 0.5) * voxel)
            for j in range(jlo, jhi + 1):
                py = lo[v] + ((<double>j + 0.5) * voxel)
                e = dx1 * (py - y0) - dy1 * (px - x0)
                cover = e > 0.0 or (e == 0.0 and tl1)
                if cover:
                    e = dx2 * (py - y1) - dy2 * (px - x1)
                    cover = e > 0.0 or (e == 0.0 and tl2)
                if cover:
                    e = dx3 * (py - y2) - dy3 * (px - x2)
                    cover = e > 0.0 or (e == 0.0 and tl3)
                if not cover:
                    continue
                wstar = av[axis] + (nuu * (av[u] - px) + nvv * (av[v] - py)) / nax
                lay = <long long>ceil((wstar - lo[axis]) / voxel - 0.5)
                if lay < 0:
                    lay = 0
                if lay > nw:
                    lay = nw
                flips[i, j, lay] = <cnp.uint8_t>(flips[i, j, lay] + 1)

    # Prefix parity per column, accumulated into the (x,y,z) vote grid.
    # uint8 wrap matches the fallback's cumsum dtype; only the low bit
    # is read.
    for i in range(nu):
        for j in range(nv):
            acc = 0
            for w in range(nw):
                acc = <cnp.uint8_t>(acc + flips[i, j, w])
                par = acc & 1
                if axis == 0:
                    votes[w, i, j] = <cnp.uint8_t>(votes[w, i, j] + par)
                elif axis == 1:
                    votes[j, w, i] = <cnp.uint8_t>(votes[j, w, i] + par)
                else:
                    votes[i, j, w] = <cnp.uint8_t>(votes[i, j, w] + par)


def voxelize_parity(
    double[:, :, ::1] tris,
    double[::1] lo,
    double voxel,
    cnp.int64_t[::1] dims,
):
    """Inside mask over voxel centers, 2-of-3 column-parity majority.

    Same rasterization as the numpy route: pixel-center coverage with
    a top-left tie rule, crossings bucketed at the first layer whose
    center lies past the plane intersection.
    """
    cdef Py_ssize_t nx = dims[0], ny = dims[1], nz = dims[2]
    votes_np = np.zeros((nx, ny, nz), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] votes = votes_np
    cdef Py_ssize_t axis, i, j, k
    cdef cnp.uint8_t[:, :, ::1] flips
    for axis in range(3):
        flips = np.zeros(
            (dims[(axis + 1) % 3], dims[(axis + 2) % 3], dims[axis] + 1),
            dtype=np.uint8,
        )
        with nogil:
            _parity_axis(tris, lo, voxel, dims, axis, votes, flips)
    with nogil:
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    votes[i, j, k] = 1 if votes[i, j, k] >= 2 else 0
    return votes_np
