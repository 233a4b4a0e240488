"""Geometric foundation: planes, homogeneous transforms, triangle meshes.

Positions are millimeters, directions are unit vectors. All types are
immutable values after construction and every operation is a pure
function, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

ATOL = 1e-9


def unit(v) -> np.ndarray:
    """Normalize v, rejecting near-zero input.

    Idempotent: input already unit to 1e-12 passes through unchanged,
    so a normalized vector survives serialize/parse/construct cycles
    bit-for-bit (repeated division drifts by an ulp and never settles).
    """
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-30:
        raise ValueError("cannot normalize a zero-length vector")
    if abs(n - 1.0) < 1e-12:
        return v
    return v / n


def _as_point(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite coordinates")
    return p


@dataclass(frozen=True)
class Plane:
    """Oriented plane given by a point on it and a unit normal."""

    origin: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", _as_point(self.origin))
        n = _as_point(self.normal)
        if abs(np.linalg.norm(n) - 1.0) > ATOL:
            n = unit(n)
        object.__setattr__(self, "normal", n)

    def signed_distance(self, pts) -> np.ndarray:
        """Distance along the normal; positive on the normal side."""
        pts = np.asarray(pts, dtype=np.float64)
        return (pts - self.origin) @ self.normal


def reflect_point(p, plane: Plane) -> np.ndarray:
    """Mirror p across the plane: p - 2((p-o)·n)n."""
    p = np.asarray(p, dtype=np.float64)
    d = (p - plane.origin) @ plane.normal
    return p - 2.0 * np.multiply.outer(d, plane.normal)


@dataclass(frozen=True)
class Transform4:
    """4x4 homogeneous transform acting on column vectors."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError("transform must be 4x4")
        if np.max(np.abs(m[3] - (0.0, 0.0, 0.0, 1.0))) > ATOL:
            raise ValueError("last row must be (0,0,0,1)")
        object.__setattr__(self, "m", m)

    @staticmethod
    def identity() -> "Transform4":
        return Transform4(np.eye(4))

    @staticmethod
    def translation(v) -> "Transform4":
        m = np.eye(4)
        m[:3, 3] = _as_point(v)
        return Transform4(m)

    @staticmethod
    def from_linear(a, t=(0.0, 0.0, 0.0)) -> "Transform4":
        m = np.eye(4)
        m[:3, :3] = np.asarray(a, dtype=np.float64)
        m[:3, 3] = _as_point(t)
        return Transform4(m)

    @property
    def linear(self) -> np.ndarray:
        return self.m[:3, :3]

    @property
    def translation_part(self) -> np.ndarray:
        return self.m[:3, 3]

    def compose(self, other: "Transform4") -> "Transform4":
        """self after other: (self @ other)(x) = self(other(x))."""
        return Transform4(self.m @ other.m)

    __matmul__ = compose

    def inverse(self) -> "Transform4":
        return Transform4(np.linalg.inv(self.m))

    def apply_points(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.linear.T + self.translation_part

    def apply_vectors(self, vecs) -> np.ndarray:
        vecs = np.asarray(vecs, dtype=np.float64)
        return vecs @ self.linear.T

    def det3(self) -> float:
        return float(np.linalg.det(self.linear))

    def assert_orthonormal(self, atol: float = ATOL) -> None:
        a = self.linear
        if np.max(np.abs(a @ a.T - np.eye(3))) > atol:
            raise ValueError("upper 3x3 block is not orthonormal")


def _rotation_to_x(n: np.ndarray) -> np.ndarray:
    """Minimal-angle rotation matrix taking unit vector n onto +X."""
    x = np.array([1.0, 0.0, 0.0])
    c = float(n @ x)
    if c > 1.0 - 1e-14:
        return np.eye(3)
    if c < -1.0 + 1e-14:
        # Anti-aligned: half turn about Y.
        return np.diag([-1.0, 1.0, -1.0])
    axis = unit(np.cross(n, x))
    s = float(np.linalg.norm(np.cross(n, x)))
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def reflection_transform(plane: Plane) -> Transform4:
    """Mirror across an arbitrary plane as a five-step composite.

    Translate the plane origin to the world origin, rotate the normal
    onto +X, mirror across the YZ plane, then undo the rotation and the
    translation. Equivalent to the direct Householder construction; the
    decomposition is kept because the intermediate frames are reused by
    interactive tooling.
    """
    t1 = Transform4.translation(-plane.origin)
    t2 = Transform4.from_linear(_rotation_to_x(plane.normal))
    t3 = Transform4.from_linear(np.diag([-1.0, 1.0, 1.0]))
    t = t1.inverse() @ t2.inverse() @ t3 @ t2 @ t1
    t.assert_orthonormal(1e-7)
    return t


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle mesh. vertices (V,3) float64, faces (F,3) int."""

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (V,3)")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError("faces must be (F,3)")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        if f.size and (
            np.any(f[:, 0] == f[:, 1])
            or np.any(f[:, 1] == f[:, 2])
            or np.any(f[:, 2] == f[:, 0])
        ):
            raise ValueError("face references a vertex twice")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if self.normals is not None:
            n = np.asarray(self.normals, dtype=np.float64)
            if n.shape != v.shape:
                raise ValueError("normals count must equal vertex count")
            object.__setattr__(self, "normals", n)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def corners(self) -> np.ndarray:
        """Per-face corner positions, shape (F,3,3)."""
        return self.vertices[self.faces]


def face_areas_normals(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Triangle areas and unit normals (zero normal for degenerate faces)."""
    c = mesh.corners()
    cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    nrm = np.linalg.norm(cr, axis=1)
    areas = 0.5 * nrm
    with np.errstate(invalid="ignore", divide="ignore"):
        normals = np.where(nrm[:, None] > 0, cr / np.maximum(nrm, 1e-300)[:, None], 0.0)
    return areas, normals


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Area-weighted average of incident face normals, unit length."""
    c = mesh.corners()
    cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])  # 2*area*normal
    acc = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(acc, mesh.faces[:, k], cr)
    lens = np.linalg.norm(acc, axis=1)
    lens[lens == 0] = 1.0
    return acc / lens[:, None]


@dataclass(frozen=True)
class MeshStats:
    n_vertices: int
    n_faces: int
    n_edges: int
    n_boundary_edges: int
    euler_characteristic: int
    is_watertight: bool
    area: float
    signed_volume: float


def _directed_edges(faces: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )


def mesh_stats(mesh: TriMesh) -> MeshStats:
    """Area, divergence-theorem signed volume and edge topology counts.

    Watertight means every undirected edge carries exactly two faces
    with opposite direction. chi counts only vertices referenced by a
    face so stray unreferenced vertices do not disturb it.
    """
    areas, _ = face_areas_normals(mesh)
    c = mesh.corners()
    vol = float(np.einsum("ij,ij->", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0)

    if mesh.n_faces == 0:
        return MeshStats(mesh.n_vertices, 0, 0, 0, 0, False, 0.0, 0.0)

    de = _directed_edges(mesh.faces)
    und = np.sort(de, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    n_edges = len(uniq)
    n_boundary = int(np.sum(counts == 1))
    n_ref_vertices = len(np.unique(mesh.faces))
    chi = n_ref_vertices - n_edges + mesh.n_faces

    watertight = bool(np.all(counts == 2))
    if watertight:
        # Consistent orientation: no directed edge may repeat.
        duniq = np.unique(de, axis=0)
        watertight = len(duniq) == len(de)

    return MeshStats(
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
        n_edges=n_edges,
        n_boundary_edges=n_boundary,
        euler_characteristic=int(chi),
        is_watertight=watertight,
        area=float(areas.sum()),
        signed_volume=vol,
    )


def mean_edge_length(mesh: TriMesh) -> float:
    """Mean length over unique undirected edges. Handy resolution scale:
    fit tolerances in this package default to a multiple of it."""
    e = np.unique(np.sort(_directed_edges(mesh.faces), axis=1), axis=0)
    return float(
        np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean()
    )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        # Lowest index survives so welding is order-stable.
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb


def weld_vertices(mesh: TriMesh, tol: float = 1e-6) -> TriMesh:
    """Merge vertices closer than tol; lowest original index survives.

    Exact duplicates collapse first (cheap), then remaining survivors
    within tol are clustered with a KD-tree pair query. Idempotent:
    after one pass all survivors are pairwise farther than tol apart.
    """
    v, f = mesh.vertices, mesh.faces
    if len(v) == 0:
        return mesh
    uniq, first, inverse = np.unique(
        v.view([("", v.dtype)] * 3).ravel(), return_index=True, return_inverse=True
    )
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    inverse = rank[inverse]
    pts = v[np.sort(first)]

    if tol > 0 and len(pts) > 1:
        uf = _UnionFind(len(pts))
        for a, b in cKDTree(pts).query_pairs(tol, output_type="ndarray"):
            uf.union(int(a), int(b))
        root = np.array([uf.find(i) for i in range(len(pts))])
        keep = np.unique(root)
        remap = np.zeros(len(pts), dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        pts = pts[keep]
        inverse = remap[root[inverse]]

    new_faces = inverse[f] if f.size else f
    if new_faces.size:
        degenerate = (
            (new_faces[:, 0] == new_faces[:, 1])
            | (new_faces[:, 1] == new_faces[:, 2])
            | (new_faces[:, 2] == new_faces[:, 0])
        )
        new_faces = new_faces[~degenerate]
    return TriMesh(pts, new_faces)


def compact(mesh: TriMesh) -> TriMesh:
    """Drop vertices not referenced by any face."""
    if mesh.n_faces == 0:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    used = np.unique(mesh.faces)
    remap = np.zeros(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(mesh.vertices[used], remap[mesh.faces])


def split_components(mesh: TriMesh) -> list[TriMesh]:
    """Connected components by shared vertices, compacted, ordered by
    lowest original vertex index (deterministic)."""
    if mesh.n_faces == 0:
        return []
    uf = _UnionFind(mesh.n_vertices)
    for a, b, c in mesh.faces:
        uf.union(int(a), int(b))
        uf.union(int(a), int(c))
    roots = np.array([uf.find(int(v)) for v in range(mesh.n_vertices)])
    face_root = roots[mesh.faces[:, 0]]
    out = []
    for r in np.unique(face_root):
        out.append(compact(TriMesh(mesh.vertices, mesh.faces[face_root == r])))
    return out


def boundary_loops(mesh: TriMesh) -> list[np.ndarray]:
    """Ordered boundary loops, winding with the adjacent faces.

    Requires each boundary vertex to have one outgoing boundary edge
    (manifold with boundary); raises otherwise.
    """
    de = _directed_edges(mesh.faces)
    pairs = set(map(tuple, de))
    boundary = [(a, b) for a, b in pairs if (b, a) not in pairs]
    nxt: dict[int, int] = {}
    for a, b in boundary:
        if a in nxt:
            raise ValueError("non-manifold boundary at vertex %d" % a)
        nxt[a] = b
    loops = []
    seen: set[int] = set()
    for a, _ in sorted(boundary):
        if a in seen:
            continue
        loop = [a]
        seen.add(a)
        cur = nxt[a]
        while cur != a:
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        loops.append(np.array(loop, dtype=np.int64))
    return loops


def sharp_edges(mesh: TriMesh, angle_deg: float = 45.0) -> np.ndarray:
    """Interior edges whose faces meet at a dihedral above the threshold.

    Returns (n, 2) vertex index pairs. On a segmented skull these trace
    the defect-edge creases; smooth anatomy stays below a 45 degree
    default by a wide margin at CT-scale tessellation.
    """
    de = _directed_edges(mesh.faces)
    # _directed_edges groups by edge slot, so the owning face cycles.
    face_of = np.tile(np.arange(mesh.n_faces), 3)
    key = np.sort(de, axis=1)
    order = np.lexsort((key[:, 1], key[:, 0]))
    key, face_of = key[order], face_of[order]
    paired = np.all(key[:-1] == key[1:], axis=1)
    fa, fb = face_of[:-1][paired], face_of[1:][paired]
    _, normals = face_areas_normals(mesh)
    cosang = np.einsum("ij,ij->i", normals[fa], normals[fb])
    crease = cosang < np.cos(np.radians(angle_deg))
    return key[:-1][paired][crease]


def transform_mesh(mesh: TriMesh, t: Transform4) -> TriMesh:
    """Map vertices through t; reversed winding under reflections keeps
    the outward orientation."""
    v = t.apply_points(mesh.vertices)
    f = mesh.faces
    if t.det3() < 0:
        f = f[:, ::-1]
    out = TriMesh(v, f)
    if mesh.normals is not None:
        out = TriMesh(v, f, vertex_normals(out))
    return out
