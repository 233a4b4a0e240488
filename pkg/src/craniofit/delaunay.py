"""Incremental 2D Delaunay triangulation (Bowyer-Watson with a ghost
vertex), built on filtered exact predicates.

Deterministic by construction: points are inserted in lexicographic
order and cocircular ties never evict an existing triangle, so the same
point set always yields the same triangulation.
"""

from __future__ import annotations

import numpy as np

from .predicates import incircle, orient2d

INF = -1


class _Mesh2D:
    """Triangle soup with directed-edge adjacency. Ghost triangles carry
    the INF vertex in their last slot and pave the outside of the hull."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edge: dict[tuple[int, int], int] = {}
        self._next = 0
        self.last = 0

    def add(self, a: int, b: int, c: int) -> int:
        if a == INF:
            a, b, c = b, c, a
        elif b == INF:
            a, b, c = c, a, b
        tid = self._next
        self._next += 1
        self.tris[tid] = (a, b, c)
        self.edge[(a, b)] = tid
        self.edge[(b, c)] = tid
        self.edge[(c, a)] = tid
        self.last = tid
        return tid

    def remove(self, tid: int) -> None:
        a, b, c = self.tris.pop(tid)
        for key in ((a, b), (b, c), (c, a)):
            if self.edge.get(key) == tid:
                del self.edge[key]

    def conflicts(self, tid: int, p: int) -> bool:
        a, b, c = self.tris[tid]
        px, py = self.pts[p]
        if c == INF:
            # Ghost (a,b,INF) covers the open half plane left of a->b,
            # plus the closed hull segment itself.
            s = orient2d(*self.pts[a], *self.pts[b], px, py)
            if s > 0:
                return True
            if s < 0:
                return False
            lo_x, hi_x = sorted((self.pts[a][0], self.pts[b][0]))
            lo_y, hi_y = sorted((self.pts[a][1], self.pts[b][1]))
            return lo_x <= px <= hi_x and lo_y <= py <= hi_y
        return incircle(*self.pts[a], *self.pts[b], *self.pts[c], px, py) > 0

    def locate(self, p: int) -> int:
        """Visibility walk to a triangle conflicting with p."""
        tid = self.last if self.last in self.tris else next(iter(self.tris))
        px, py = self.pts[p]
        for _ in range(4 * len(self.tris) + 16):
            a, b, c = self.tris[tid]
            if c == INF:
                if self.conflicts(tid, p):
                    return tid
                tid = self.edge[(b, a)]
                continue
            moved = False
            for u, v in ((a, b), (b, c), (c, a)):
                if orient2d(*self.pts[u], *self.pts[v], px, py) < 0:
                    tid = self.edge[(v, u)]
                    moved = True
                    break
            if not moved:
                return tid
        # Safety net: exhaustive scan (cannot fail for a valid state).
        for tid, _ in self.tris.items():
            if self.conflicts(tid, p):
                return tid
        raise RuntimeError("point location failed")

    def insert(self, p: int) -> None:
        t0 = self.locate(p)
        if not self.conflicts(t0, p):
            # locate landed on the containing triangle; it always
            # conflicts unless p duplicates a vertex.
            raise RuntimeError("insertion into non-conflicting region")
        # Grow the conflict cavity.
        cavity = {t0}
        stack = [t0]
        while stack:
            tid = stack.pop()
            a, b, c = self.tris[tid]
            for u, v in ((a, b), (b, c), (c, a)):
                nb = self.edge.get((v, u))
                if nb is None or nb in cavity:
                    continue
                if self.conflicts(nb, p):
                    cavity.add(nb)
                    stack.append(nb)
        # Boundary of the cavity, as directed edges of removed triangles.
        border = []
        for tid in cavity:
            a, b, c = self.tris[tid]
            for u, v in ((a, b), (b, c), (c, a)):
                nb = self.edge.get((v, u))
                if nb is None or nb not in cavity:
                    border.append((u, v))
        for tid in cavity:
            self.remove(tid)
        for u, v in border:
            self.add(u, v, p)


def delaunay_indices(points2d: np.ndarray) -> np.ndarray:
    """Delaunay triangulation of a 2D point set.

    Returns (T,3) CCW index triples into points2d. Exact duplicates
    collapse onto their first occurrence. Raises if fewer than 3
    distinct points or all points are collinear.
    """
    pts = np.asarray(points2d, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected (N,2) points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    chain: list[int] = []
    for idx in order:
        if chain and pts[chain[-1]][0] == pts[idx][0] and pts[chain[-1]][1] == pts[idx][1]:
            continue
        chain.append(int(idx))
    if len(chain) < 3:
        raise ValueError("need at least 3 distinct points")

    # First non-collinear point closes the initial triangle.
    p0, p1 = chain[0], chain[1]
    k = None
    for pos in range(2, len(chain)):
        if orient2d(*pts[p0], *pts[p1], *pts[chain[pos]]) != 0:
            k = pos
            break
    if k is None:
        raise ValueError("all points are collinear")
    pk = chain[k]
    rest = [chain[i] for i in range(2, len(chain)) if i != k]

    m = _Mesh2D(pts)
    if orient2d(*pts[p0], *pts[p1], *pts[pk]) > 0:
        a, b, c = p0, p1, pk
    else:
        a, b, c = p0, pk, p1
    m.add(a, b, c)
    m.add(b, a, INF)
    m.add(c, b, INF)
    m.add(a, c, INF)

    for p in rest:
        m.insert(p)

    out = [t for t in m.tris.values() if t[2] != INF]
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 3)


def triangulation_boundary(tris: np.ndarray) -> set[tuple[int, int]]:
    """Directed edges appearing exactly once (the hull for Delaunay)."""
    seen: set[tuple[int, int]] = set()
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            seen.add((int(u), int(v)))
    return {(u, v) for (u, v) in seen if (v, u) not in seen}
