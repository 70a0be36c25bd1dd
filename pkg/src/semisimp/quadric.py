"""Quadric error metric: symmetric 4x4 forms summarizing squared
point-to-plane distances, plus the constrained minimizer used as the
collapse placement rule."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .kernels import K
from .mesh import Mesh, Plane

log = logging.getLogger("semisimp")

PLACEMENT_MODES = ("optimal", "subset")


@dataclass(frozen=True)
class QuadricConfig:
    """Knobs of the error metric.

    boundary_weight scales the per-boundary-edge penalty quadric (which is
    already scaled by squared edge length); placement picks the collapse
    position rule: "optimal" minimizes the quadric with an endpoint/midpoint
    fallback near singularity, "subset" always picks the best of the two
    endpoints and the midpoint.
    """

    boundary_weight: float = 1000.0
    placement: str = "optimal"

    def __post_init__(self):
        if self.placement not in PLACEMENT_MODES:
            raise ValueError(f"placement must be one of {PLACEMENT_MODES}")
        if self.boundary_weight < 0:
            raise ValueError("boundary_weight must be >= 0")


@dataclass(frozen=True)
class Quadric:
    """10 packed coefficients of a symmetric 4x4 form; see kernels for the
    layout. Values are immutable and add coefficient-wise."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(10))

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.coeffs, dtype=np.float64))
        if c.shape != (10,):
            raise ValueError("quadric needs exactly 10 coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other: "Quadric") -> "Quadric":
        return Quadric(self.coeffs + other.coeffs)

    def evaluate(self, x) -> float:
        return float(K.quadric_eval(self.coeffs, np.asarray(x, dtype=float))[0])

    @property
    def matrix(self) -> np.ndarray:
        q = self.coeffs
        return np.array([
            [q[0], q[1], q[2], q[3]],
            [q[1], q[4], q[5], q[6]],
            [q[2], q[5], q[7], q[8]],
            [q[3], q[6], q[8], q[9]],
        ])


def quadric_from_plane(plane: Plane, weight: float = 1.0) -> Quadric:
    """w * p p^T; evaluates to w * (signed distance)^2."""
    if weight < 0:
        raise ValueError("weight must be >= 0")
    q = K.plane_quadrics(plane.coefficients[None, :], np.array([weight]))
    return Quadric(q[0])


def evaluate(q: Quadric, x) -> float:
    return q.evaluate(x)


def _boundary_penalty_terms(mesh: Mesh):
    """Penalty planes for boundary edges: through the edge, perpendicular to
    the one incident face, weighted by squared edge length."""
    edges = sorted(mesh.boundary_edges)
    if not edges:
        return (np.empty((0, 2), dtype=np.int64), np.empty((0, 4)),
                np.empty(0))
    earr = np.array(edges, dtype=np.int64)
    face_idx = np.array([mesh.edge_faces[e][0] for e in edges], dtype=np.int64)
    planes, _ = K.face_planes(mesh.positions, mesh.faces)
    fn = planes[face_idx, :3]
    p0 = mesh.positions[earr[:, 0]]
    p1 = mesh.positions[earr[:, 1]]
    edge_vec = p1 - p0
    pn = np.cross(edge_vec, fn)
    ln = np.linalg.norm(pn, axis=1)
    ok = ln > 0.0
    pn[ok] = pn[ok] / ln[ok, None]
    pn[~ok] = 0.0
    pen_planes = np.concatenate([pn, -np.einsum("ij,ij->i", pn, p0)[:, None]],
                                axis=1)
    weights = np.einsum("ij,ij->i", edge_vec, edge_vec)
    weights[~ok] = 0.0
    return earr, pen_planes, weights


def mesh_vertex_quadrics(mesh: Mesh, cfg: QuadricConfig) -> np.ndarray:
    """(V, 10) array: per vertex, the sum of area-weighted incident face
    quadrics plus boundary penalties on incident boundary edges."""
    planes, areas = K.face_planes(mesh.positions, mesh.faces)
    n_degenerate = int(np.sum(areas == 0.0))
    if n_degenerate:
        log.warning("%d zero-area faces contribute no quadric", n_degenerate)
    fq = K.plane_quadrics(planes, areas)
    out = K.accumulate_face_quadrics(mesh.n_vertices, mesh.faces, fq)
    if cfg.boundary_weight > 0.0:
        earr, pen_planes, weights = _boundary_penalty_terms(mesh)
        if len(earr):
            pq = K.plane_quadrics(pen_planes, cfg.boundary_weight * weights)
            K.scatter_add_quadrics(out, earr[:, 0], pq)
            K.scatter_add_quadrics(out, earr[:, 1], pq)
    return out


def vertex_quadric(mesh: Mesh, v: int, cfg: QuadricConfig) -> Quadric:
    """Quadric of one vertex (see mesh_vertex_quadrics)."""
    if not 0 <= v < mesh.n_vertices:
        raise IndexError(f"vertex {v} out of range")
    return Quadric(mesh_vertex_quadrics(mesh, cfg)[v])


def optimal_placement(q: Quadric, u, v,
                      mode: str = "optimal") -> tuple[np.ndarray, float]:
    """Collapse placement for a merged vertex with quadric q and endpoint
    positions u, v. Returns (position, error >= 0)."""
    if mode not in PLACEMENT_MODES:
        raise ValueError(f"mode must be one of {PLACEMENT_MODES}")
    pos, err = K.solve_placements(q.coeffs, np.asarray(u, dtype=float),
                                  np.asarray(v, dtype=float),
                                  mode == "subset")
    return pos[0], float(err[0])
