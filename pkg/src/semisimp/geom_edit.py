"""Vertex repositioning in a cut with propagation: falloff-weighted
neighbor displacement, detail-vector re-emission for descendants (direct or
attenuated), and quadric re-summation plus repositioning for ancestors."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hierarchy import Cut, Hierarchy, OrderList, cut_at, mapped_cut_faces
from .kernels import K
from .quadric import QuadricConfig

DESCENDANT_MODES = ("off", "direct", "attenuated")

# Evaluated falloff weights are clamped to this band no matter how far the
# user drags the control ordinates.
FALLOFF_GUARD = (-0.25, 1.25)


@dataclass(frozen=True)
class FalloffCurve:
    """Cubic Bezier profile over hop distance, pinned to 1 at the center and
    0 at the radius; y1/y2 are the user-controlled inner ordinates."""

    y1: float = 1.0
    y2: float = 0.0

    def evaluate(self, u: float) -> float:
        if u <= 0.0:
            return 1.0
        if u >= 1.0:
            return 0.0
        s = 1.0 - u
        b = (s * s * s
             + 3.0 * s * s * u * self.y1
             + 3.0 * s * u * u * self.y2)
        return min(max(b, FALLOFF_GUARD[0]), FALLOFF_GUARD[1])


def falloff_weight(curve: FalloffCurve, i: int, r: int) -> float:
    """B(i) over the hop-distance domain [0, r]; 0 outside the support."""
    if i < 0:
        raise ValueError("hop distance must be >= 0")
    if i == 0:
        return 1.0
    if i >= r:
        return 0.0
    return curve.evaluate(i / r)


@dataclass(frozen=True)
class EditOptions:
    radius: int = 0
    falloff: FalloffCurve = field(default_factory=FalloffCurve)
    ancestors: bool = False
    descendants: str = "off"

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if self.descendants not in DESCENDANT_MODES:
            raise ValueError(f"descendants must be one of {DESCENDANT_MODES}")


@dataclass(frozen=True)
class LocalFrame:
    origin: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def to_local(self, points: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(points) - self.origin
        return rel @ np.stack([self.x, self.y, self.z]).T

    def to_global(self, coords: np.ndarray) -> np.ndarray:
        return self.origin + np.atleast_2d(coords) @ np.stack(
            [self.x, self.y, self.z])


def attenuation_factor(eps_c: float, eps_m: float) -> float:
    """sqrt(eps_c / eps_m) clamped to [0, 1]; 0 when eps_m is zero. Equals 1
    at the manipulated node itself and 0 at leaves."""
    if eps_c < 0 or eps_m < 0:
        raise ValueError("errors must be >= 0")
    if eps_m == 0.0:
        return 0.0
    return min(1.0, np.sqrt(eps_c / eps_m))


class _CutMesh:
    """Connectivity of one cut; positions are read live from the hierarchy
    so frames recomputed after a move see the moved geometry."""

    def __init__(self, h: Hierarchy, cut: Cut):
        self.h = h
        self.faces = mapped_cut_faces(h, cut)
        self.node_faces: dict[int, list[int]] = {int(n): []
                                                 for n in cut.node_ids}
        edge_count: dict[tuple[int, int], int] = {}
        self.nbrs: dict[int, set[int]] = {int(n): set() for n in cut.node_ids}
        for fi, (a, b, c) in enumerate(self.faces):
            a, b, c = int(a), int(b), int(c)
            for n in (a, b, c):
                self.node_faces[n].append(fi)
            for u, v in ((a, b), (b, c), (c, a)):
                self.nbrs[u].add(v)
                self.nbrs[v].add(u)
                key = (u, v) if u < v else (v, u)
                edge_count[key] = edge_count.get(key, 0) + 1
        self.boundary_edges = {e for e, n in edge_count.items() if n == 1}

    def hops_from(self, m: int, r: int) -> dict[int, int]:
        out = {m: 0}
        frontier = deque([m])
        while frontier:
            n = frontier.popleft()
            d = out[n]
            if d == r:
                continue
            for w in self.nbrs[n]:
                if w not in out:
                    out[w] = d + 1
                    frontier.append(w)
        return out

    def frame(self, m: int) -> LocalFrame:
        pos = self.h.position
        origin = pos[m].copy()
        fids = self.node_faces[m]
        z = np.zeros(3)
        for fi in fids:
            a, b, c = self.faces[fi]
            n = np.cross(pos[b] - pos[a], pos[c] - pos[a])
            ln = np.linalg.norm(n)
            if ln > 0.0:
                z += n / ln
        ln = np.linalg.norm(z)
        if ln < 1e-12:
            # degenerate average: first nonzero face normal, else global +z
            z = np.array([0.0, 0.0, 1.0])
            for fi in fids:
                a, b, c = self.faces[fi]
                n = np.cross(pos[b] - pos[a], pos[c] - pos[a])
                ln = np.linalg.norm(n)
                if ln > 0.0:
                    z = n / ln
                    break
        else:
            z = z / ln

        y = None
        nbrs = sorted(self.nbrs[m])
        if nbrs:
            edge = pos[nbrs[0]] - origin
            proj = edge - (edge @ z) * z
            ln = np.linalg.norm(proj)
            if ln > 1e-12:
                y = proj / ln
        if y is None:
            # reference edge missing or parallel to z: least-aligned axis
            axis = int(np.argmin(np.abs(z)))
            e = np.zeros(3)
            e[axis] = 1.0
            proj = e - (e @ z) * z
            y = proj / np.linalg.norm(proj)
        x = np.cross(y, z)
        return LocalFrame(origin=origin, x=x, y=y, z=z)


def local_frame(h: Hierarchy, cut: Cut, m: int) -> LocalFrame:
    """Orthonormal frame at cut node m: z averages the surrounding cut face
    normals, y is the projected reference edge, x = y x z."""
    if m not in cut:
        raise ValueError(f"node {m} is not in the cut")
    return _CutMesh(h, cut).frame(m)


@dataclass
class VertexEditRecord:
    """Everything needed to undo one vertex edit."""

    node: int
    delta: np.ndarray
    options: EditOptions
    lod: int
    old_positions: dict[int, np.ndarray] = field(default_factory=dict)
    old_quadrics: dict[int, np.ndarray] = field(default_factory=dict)
    old_errors: dict[int, float] = field(default_factory=dict)

    def remember_position(self, h: Hierarchy, n: int):
        if n not in self.old_positions:
            self.old_positions[n] = h.position[n].copy()

    def moved_nodes(self) -> list[int]:
        return sorted(self.old_positions)


def _strict_descendants(h: Hierarchy, n: int) -> np.ndarray:
    out = []
    stack = [int(h.children[n, 0]), int(h.children[n, 1])] \
        if not h.is_leaf(n) else []
    while stack:
        x = stack.pop()
        out.append(x)
        if not h.is_leaf(x):
            stack.append(int(h.children[x, 0]))
            stack.append(int(h.children[x, 1]))
    return np.array(sorted(out), dtype=np.int64)


def _cut_vertex_quadric(cm: _CutMesh, n: int, cfg: QuadricConfig) -> np.ndarray:
    """Quadric of cut node n from its surrounding cut faces (area weighted,
    plus boundary penalties), mirroring the leaf construction."""
    pos = cm.h.position
    fids = cm.node_faces[n]
    total = np.zeros(10)
    if fids:
        tris = np.array([[pos[a], pos[b], pos[c]]
                         for a, b, c in cm.faces[fids]])
        corners = np.arange(3 * len(fids), dtype=np.int64).reshape(-1, 3)
        planes, areas = K.face_planes(tris.reshape(-1, 3), corners)
        total += K.plane_quadrics(planes, areas).sum(axis=0)
    if cfg.boundary_weight > 0.0:
        for e in sorted(cm.boundary_edges):
            if n not in e:
                continue
            fis = [fi for fi in cm.node_faces[e[0]]
                   if fi in set(cm.node_faces[e[1]])]
            if not fis:
                continue
            a, b, c = cm.faces[fis[0]]
            fn = np.cross(pos[b] - pos[a], pos[c] - pos[a])
            ln = np.linalg.norm(fn)
            if ln == 0.0:
                continue
            fn = fn / ln
            edge_vec = pos[e[1]] - pos[e[0]]
            pn = np.cross(edge_vec, fn)
            ln = np.linalg.norm(pn)
            if ln == 0.0:
                continue
            pn = pn / ln
            plane = np.concatenate([pn, [-pn @ pos[e[0]]]])
            w = cfg.boundary_weight * float(edge_vec @ edge_vec)
            total += K.plane_quadrics(plane[None, :], np.array([w]))[0]
    return total


def apply_vertex_edit(h: Hierarchy, order: OrderList, pos: int, m: int,
                      delta, opts: EditOptions,
                      cfg: Optional[QuadricConfig] = None) -> VertexEditRecord:
    """Move cut node m by delta with propagation per ``opts``:

    1. every cut node within ``opts.radius`` hops moves by its
       falloff-weighted share of delta;
    2. if enabled, each moved node's descendants are re-emitted from its
       recomputed local frame (directly, or attenuated by sqrt of the error
       ratio so leaves never move);
    3. if enabled, each moved node's quadric is rebuilt from its
       surrounding cut faces and every ancestor is re-summed and
       repositioned at its quadric minimum, once, bottom-up.
    """
    cfg = cfg or QuadricConfig()
    cut = cut_at(h, order, pos)
    if m not in cut:
        raise ValueError(f"node {m} is not in the cut at position {pos}")
    delta = np.asarray(delta, dtype=np.float64).reshape(3)
    rec = VertexEditRecord(node=m, delta=delta.copy(), options=opts, lod=pos)
    cm = _CutMesh(h, cut)

    hops = cm.hops_from(m, opts.radius)
    disp: dict[int, np.ndarray] = {}
    for n in sorted(hops):
        w = falloff_weight(opts.falloff, hops[n], opts.radius)
        d = w * delta
        if np.any(d != 0.0):
            disp[n] = d
    moved = sorted(disp)

    detail: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    if opts.descendants != "off":
        for x in moved:
            ids = _strict_descendants(h, x)
            if len(ids):
                frame_pre = cm.frame(x)
                detail[x] = (ids, frame_pre.to_local(h.position[ids]))

    for n in moved:
        rec.remember_position(h, n)
        h.position[n] = h.position[n] + disp[n]

    for x in moved:
        if x not in detail:
            continue
        ids, coords = detail[x]
        frame_post = cm.frame(x)
        new_global = frame_post.to_global(coords)
        if opts.descendants == "direct":
            for i, n in enumerate(ids):
                rec.remember_position(h, int(n))
            h.position[ids] = new_global
        else:
            eps_m = float(h.error[x])
            for i, n in enumerate(ids):
                t = attenuation_factor(float(h.error[n]), eps_m)
                if t > 0.0:
                    n = int(n)
                    rec.remember_position(h, n)
                    h.position[n] = h.position[n] + t * (new_global[i]
                                                         - h.position[n])

    if opts.ancestors:
        for x in moved:
            rec.old_quadrics[x] = h.quad[x].copy()
            h.quad[x] = _cut_vertex_quadric(cm, x, cfg)
        oidx = {n: i for i, n in enumerate(order)}
        anc = set()
        for x in moved:
            anc.update(h.ancestors(x))
        for a in sorted(anc, key=lambda n: oidx[n]):
            rec.remember_position(h, a)
            rec.old_quadrics.setdefault(a, h.quad[a].copy())
            rec.old_errors.setdefault(a, float(h.error[a]))
            c1, c2 = int(h.children[a, 0]), int(h.children[a, 1])
            h.quad[a] = h.quad[c1] + h.quad[c2]
            p, e = K.solve_placements(h.quad[a], h.position[c1],
                                      h.position[c2], False)
            h.position[a] = p[0]
            h.error[a] = float(e[0])
    return rec


def undo_vertex_edit(h: Hierarchy, rec: VertexEditRecord):
    for n, p in rec.old_positions.items():
        h.position[n] = p
    for n, q in rec.old_quadrics.items():
        h.quad[n] = q
    for n, e in rec.old_errors.items():
        h.error[n] = e
