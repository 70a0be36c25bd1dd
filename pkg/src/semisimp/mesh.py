"""Indexed triangle mesh: construction checks, adjacency queries, collapse
legality. Meshes are immutable once constructed and safe to share."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .kernels import K

log = logging.getLogger("semisimp")

UNIT_NORMAL_TOL = 1e-6


class MeshError(ValueError):
    """Invalid mesh structure (bad indices, duplicate faces, ...)."""


@dataclass(frozen=True)
class Plane:
    """Plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        n = np.sqrt(self.a * self.a + self.b * self.b + self.c * self.c)
        if n == 0.0:
            raise ValueError("plane normal must be nonzero")
        if abs(n - 1.0) > 1e-9:
            object.__setattr__(self, "a", self.a / n)
            object.__setattr__(self, "b", self.b / n)
            object.__setattr__(self, "c", self.c / n)
            object.__setattr__(self, "d", self.d / n)

    @classmethod
    def from_points(cls, p0, p1, p2) -> "Plane":
        p0 = np.asarray(p0, dtype=float)
        n = np.cross(np.asarray(p1, dtype=float) - p0,
                     np.asarray(p2, dtype=float) - p0)
        ln = np.linalg.norm(n)
        if ln == 0.0:
            raise ValueError("degenerate triangle has no plane")
        n = n / ln
        return cls(n[0], n[1], n[2], -float(n @ p0))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def signed_distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.a * x[0] + self.b * x[1] + self.c * x[2] + self.d)


@dataclass(frozen=True)
class VertexRecord:
    position: np.ndarray
    texcoord: Optional[np.ndarray] = None
    normal: Optional[np.ndarray] = None


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh with optional per-vertex texcoords and normals.

    Faces are counterclockwise triples of vertex indices. Construction
    rejects out-of-range or repeated indices and duplicate faces; an edge
    shared by more than two faces is allowed (the mesh is then simply not
    manifold).
    """

    positions: np.ndarray  # (V, 3) float64
    faces: np.ndarray      # (F, 3) int64
    texcoords: Optional[np.ndarray] = None  # (V, 2)
    normals: Optional[np.ndarray] = None    # (V, 3), unit length

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        fcs = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise MeshError("positions must have shape (V, 3)")
        if fcs.size == 0:
            fcs = fcs.reshape(0, 3)
        if fcs.ndim != 2 or fcs.shape[1] != 3:
            raise MeshError("faces must have shape (F, 3)")
        nv = len(pos)
        if fcs.size and (fcs.min() < 0 or fcs.max() >= nv):
            raise MeshError("face index out of range")
        if np.any((fcs[:, 0] == fcs[:, 1]) | (fcs[:, 1] == fcs[:, 2])
                  | (fcs[:, 0] == fcs[:, 2])):
            raise MeshError("face with repeated vertex index")
        tri = np.sort(fcs, axis=1)
        uniq = np.unique(tri, axis=0)
        if len(uniq) != len(tri):
            raise MeshError("duplicate face (same unordered vertex triple)")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "faces", fcs)
        for name, width in (("texcoords", 2), ("normals", 3)):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
                if arr.shape != (nv, width):
                    raise MeshError(f"{name} must have shape (V, {width})")
                object.__setattr__(self, name, arr)
        if self.normals is not None and len(self.normals):
            lens = np.linalg.norm(self.normals, axis=1)
            if np.any(np.abs(lens - 1.0) > UNIT_NORMAL_TOL):
                raise MeshError("vertex normals must be unit length")
        for arr in (self.positions, self.faces, self.texcoords, self.normals):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def vertex(self, i: int) -> VertexRecord:
        return VertexRecord(
            position=self.positions[i],
            texcoord=None if self.texcoords is None else self.texcoords[i],
            normal=None if self.normals is None else self.normals[i],
        )

    # ---- derived adjacency (cached) ----

    @cached_property
    def edge_faces(self) -> dict[tuple[int, int], list[int]]:
        """Unordered edge -> incident face indices."""
        out: dict[tuple[int, int], list[int]] = {}
        for fi, (a, b, c) in enumerate(self.faces):
            for u, v in ((a, b), (b, c), (c, a)):
                out.setdefault(_edge_key(int(u), int(v)), []).append(fi)
        return out

    @cached_property
    def boundary_edges(self) -> set[tuple[int, int]]:
        return {e for e, fs in self.edge_faces.items() if len(fs) == 1}

    @cached_property
    def vertex_faces(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for fi, face in enumerate(self.faces):
            for v in face:
                out[int(v)].append(fi)
        return out

    @cached_property
    def csr_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) of the undirected vertex graph, sorted."""
        if len(self.faces) == 0:
            indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
            return indptr, np.empty(0, dtype=np.int64)
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                            self.faces[:, [2, 0]]])
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        both = np.concatenate([e, e[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=self.n_vertices)
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, np.ascontiguousarray(both[:, 1])

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.csr_adjacency
        return indices[indptr[v]:indptr[v + 1]]

    @cached_property
    def is_manifold(self) -> bool:
        return all(len(fs) <= 2 for fs in self.edge_faces.values())


def hop_neighborhood(mesh: Mesh, v: int, r: int) -> dict[int, int]:
    """Vertices within r edge hops of v, mapped to their hop distance."""
    if not 0 <= v < mesh.n_vertices:
        raise IndexError(f"vertex {v} out of range")
    if r < 0:
        raise ValueError("radius must be >= 0")
    indptr, indices = mesh.csr_adjacency
    hops = K.bfs_hops(indptr, indices, v, r)
    reached = np.nonzero(hops >= 0)[0]
    return {int(i): int(hops[i]) for i in reached}


# ---- collapse legality ----
#
# The topological half is the link condition for 2-complexes: the common
# edge-graph neighbors of u and v must be exactly the third vertices of the
# faces containing (u, v), and u and v must not sit opposite one another
# across any shared edge (two faces (u,a,b) and (v,a,b) would merge into
# duplicates). The geometric half rejects placements that reverse any
# surviving face normal.


def link_condition_ok(u_nbrs: set, v_nbrs: set, third_vertices: set,
                      opp_pairs_u: set, opp_pairs_v: set) -> bool:
    if (u_nbrs & v_nbrs) != third_vertices:
        return False
    return not (opp_pairs_u & opp_pairs_v)


def placement_flips_normal(old_tris: np.ndarray, new_tris: np.ndarray) -> bool:
    if len(old_tris) == 0:
        return False
    return K.any_normal_flip(old_tris, new_tris)


def collapse_is_legal(mesh: Mesh, u: int, v: int,
                      placement: Optional[np.ndarray] = None) -> bool:
    """Whether collapsing edge (u, v) to ``placement`` (default midpoint)
    keeps the mesh valid. Raises ValueError if (u, v) is not an edge."""
    key = _edge_key(u, v)
    edge_fs = mesh.edge_faces.get(key)
    if edge_fs is None:
        raise ValueError(f"({u}, {v}) is not an edge of the mesh")
    third = set()
    for fi in edge_fs:
        for w in mesh.faces[fi]:
            w = int(w)
            if w != u and w != v:
                third.add(w)
    u_nbrs = set(int(x) for x in mesh.neighbors(u))
    v_nbrs = set(int(x) for x in mesh.neighbors(v))

    def opposite_pairs(a: int, b: int) -> set[frozenset]:
        pairs = set()
        for fi in mesh.vertex_faces[a]:
            corners = [int(x) for x in mesh.faces[fi]]
            if b in corners:
                continue
            pairs.add(frozenset(c for c in corners if c != a))
        return pairs

    if not link_condition_ok(u_nbrs, v_nbrs, third,
                             opposite_pairs(u, v), opposite_pairs(v, u)):
        return False

    if placement is None:
        placement = 0.5 * (mesh.positions[u] + mesh.positions[v])
    placement = np.asarray(placement, dtype=np.float64)
    surviving = []
    for a in (u, v):
        for fi in mesh.vertex_faces[a]:
            corners = [int(x) for x in mesh.faces[fi]]
            if u in corners and v in corners:
                continue
            surviving.append((fi, a))
    if not surviving:
        return True
    old_tris = np.empty((len(surviving), 3, 3))
    new_tris = np.empty((len(surviving), 3, 3))
    for i, (fi, moved) in enumerate(surviving):
        corners = mesh.faces[fi]
        old_tris[i] = mesh.positions[corners]
        new_tris[i] = old_tris[i]
        for c in range(3):
            if int(corners[c]) == moved:
                new_tris[i, c] = placement
    return not placement_flips_normal(old_tris, new_tris)
