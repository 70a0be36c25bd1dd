"""Greedy edge-collapse search: a candidate queue sorted by quadric error,
lazy invalidation, and incremental cut connectivity. Running it to
exhaustion produces the simplification hierarchy and its order list."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hierarchy import Hierarchy, OrderList, cut_at
from .kernels import K
from .mesh import Mesh, link_condition_ok, placement_flips_normal
from .quadric import QuadricConfig, mesh_vertex_quadrics

log = logging.getLogger("semisimp")


class Cancelled(Exception):
    """A long-running simplification was cancelled by its driver."""


@dataclass(order=True)
class Candidate:
    """Queue entry: ordered by error, then edge key, then freshness stamp."""

    error: float
    edge: tuple[int, int]
    serial: int
    position: np.ndarray = field(compare=False)


class EngineState:
    """Mutable search state over the current cut.

    Candidates are invalidated lazily: ``current`` maps each live edge to
    the serial of its one valid queue entry; stale entries are dropped when
    popped. Edges rejected for legality go to ``dormant`` and are retried
    when a collapse changes their neighborhood. While ``blocking`` is on,
    edges whose endpoints carry different side labels are parked in
    ``blocked`` instead of the queue (segmented resimplification).
    """

    def __init__(self, h: Hierarchy, order: OrderList, cfg: QuadricConfig,
                 live: set[int], fcorners: np.ndarray,
                 face_alive: np.ndarray):
        self.h = h
        self.order = order
        self.cfg = cfg
        self.live = live
        self.fcorners = fcorners
        self.face_alive = face_alive
        self.node_faces: dict[int, set[int]] = {n: set() for n in live}
        for f in np.nonzero(face_alive)[0]:
            for c in fcorners[f]:
                self.node_faces[int(c)].add(int(f))
        self.nbrs: dict[int, set[int]] = {n: set() for n in live}
        for n in live:
            self.nbrs[n] = self._face_neighbors(n)
        self.heap: list[Candidate] = []
        self.current: dict[tuple[int, int], int] = {}
        self.dormant: set[tuple[int, int]] = set()
        self.blocked: set[tuple[int, int]] = set()
        self.side: Optional[dict[int, int]] = None
        self.blocking = False
        self.patch_live = 0
        self._serial = itertools.count()
        self.on_collapse: Optional[Callable] = None

    # ---- connectivity ----

    def _face_neighbors(self, n: int) -> set[int]:
        out: set[int] = set()
        for f in self.node_faces[n]:
            if not self.face_alive[f]:
                continue
            for c in self.fcorners[f]:
                c = int(c)
                if c != n:
                    out.add(c)
        return out

    def cut_edges(self) -> list[tuple[int, int]]:
        out = []
        for n in sorted(self.live):
            for w in self.nbrs[n]:
                if n < w:
                    out.append((n, w))
        return out

    # ---- queue ----

    def _enqueue(self, edges: list[tuple[int, int]]):
        queued = []
        for e in edges:
            if self.blocking and self.side is not None \
                    and self.side[e[0]] != self.side[e[1]]:
                self.blocked.add(e)
                continue
            queued.append(e)
        if not queued:
            return
        idx = np.array(queued, dtype=np.int64)
        quads = self.h.quad[idx[:, 0]] + self.h.quad[idx[:, 1]]
        upos = self.h.position[idx[:, 0]]
        vpos = self.h.position[idx[:, 1]]
        pos, err = K.solve_placements(quads, upos, vpos,
                                      self.cfg.placement == "subset")
        for i, e in enumerate(queued):
            serial = next(self._serial)
            self.current[e] = serial
            self.dormant.discard(e)
            heapq.heappush(self.heap,
                           Candidate(float(err[i]), e, serial, pos[i].copy()))

    # ---- legality on the current cut ----

    def _collapse_legal(self, u: int, v: int, placement: np.ndarray) -> bool:
        third = set()
        both = self.node_faces[u] & self.node_faces[v]
        for f in both:
            if not self.face_alive[f]:
                continue
            for c in self.fcorners[f]:
                c = int(c)
                if c != u and c != v:
                    third.add(c)

        def opposite_pairs(a: int, b: int) -> set[frozenset]:
            pairs = set()
            for f in self.node_faces[a]:
                if not self.face_alive[f]:
                    continue
                corners = [int(x) for x in self.fcorners[f]]
                if b in corners:
                    continue
                pairs.add(frozenset(c for c in corners if c != a))
            return pairs

        if not link_condition_ok(self.nbrs[u], self.nbrs[v], third,
                                 opposite_pairs(u, v), opposite_pairs(v, u)):
            return False

        surviving = []
        for a in (u, v):
            for f in self.node_faces[a]:
                if not self.face_alive[f] or f in both:
                    continue
                surviving.append((f, a))
        if not surviving:
            return True
        old_tris = np.empty((len(surviving), 3, 3))
        new_tris = np.empty((len(surviving), 3, 3))
        for i, (f, moved) in enumerate(surviving):
            corners = self.fcorners[f]
            old_tris[i] = self.h.position[corners]
            new_tris[i] = old_tris[i]
            for c in range(3):
                if int(corners[c]) == moved:
                    new_tris[i, c] = placement
        return not placement_flips_normal(old_tris, new_tris)

    # ---- collapse application ----

    def _inherit_attributes(self, u: int, v: int, placement: np.ndarray):
        du = float(np.sum((self.h.position[u] - placement) ** 2))
        dv = float(np.sum((self.h.position[v] - placement) ** 2))
        donor = u if du <= dv else v
        if du == dv:
            donor = min(u, v)
        tex = None if self.h.texcoord is None else self.h.texcoord[donor]
        nrm = None if self.h.normal is None else self.h.normal[donor]
        return tex, nrm

    def apply_collapse(self, u: int, v: int, placement: np.ndarray,
                       error: float) -> int:
        tex, nrm = self._inherit_attributes(u, v, placement)
        nid = self.h.add_interior(min(u, v), max(u, v), placement, error,
                                  self.h.quad[u] + self.h.quad[v], tex, nrm)
        self.order.append(nid)

        if self.side is not None:
            su, sv = self.side[u], self.side[v]
            self.side[nid] = su if su == sv else 2
            if su == 1 and sv == 1:
                self.patch_live -= 1

        region = (self.nbrs[u] | self.nbrs[v]) - {u, v}
        affected = self.node_faces[u] | self.node_faces[v]
        self.live.discard(u)
        self.live.discard(v)
        self.live.add(nid)
        self.node_faces[nid] = set()
        for f in affected:
            if not self.face_alive[f]:
                continue
            row = self.fcorners[f]
            for c in range(3):
                if row[c] == u or row[c] == v:
                    row[c] = nid
            a, b, c0 = int(row[0]), int(row[1]), int(row[2])
            if a == b or b == c0 or a == c0:
                self.face_alive[f] = False
                for x in {a, b, c0}:
                    if x != nid and x in self.node_faces:
                        self.node_faces[x].discard(f)
            else:
                self.node_faces[nid].add(f)
        del self.node_faces[u]
        del self.node_faces[v]

        self.nbrs[nid] = self._face_neighbors(nid)
        for w in region:
            self.nbrs[w] = self._face_neighbors(w)
        del self.nbrs[u]
        del self.nbrs[v]

        fresh = [(min(nid, w), max(nid, w)) for w in sorted(self.nbrs[nid])]
        touched = region | {u, v}
        stale = [e for e in sorted(self.dormant)
                 if e[0] in touched or e[1] in touched]
        self.dormant.difference_update(stale)
        revive = [e for e in stale
                  if e[0] in self.live and e[1] in self.live
                  and e[1] in self.nbrs[e[0]]]
        self._enqueue(fresh + revive)

        if self.on_collapse is not None:
            self.on_collapse(nid, (u, v))
        return nid


def init_state(mesh: Mesh, cfg: Optional[QuadricConfig] = None) -> EngineState:
    """Fresh engine over a mesh: one leaf per vertex, one candidate per edge."""
    if mesh.n_vertices == 0:
        raise ValueError("cannot simplify an empty mesh")
    cfg = cfg or QuadricConfig()
    h = Hierarchy(mesh)
    h.quad[:mesh.n_vertices] = mesh_vertex_quadrics(mesh, cfg)
    state = EngineState(
        h=h, order=[], cfg=cfg,
        live=set(range(mesh.n_vertices)),
        fcorners=mesh.faces.copy(),
        face_alive=np.ones(mesh.n_faces, dtype=bool),
    )
    state._enqueue(state.cut_edges())
    return state


def init_state_from_cut(h: Hierarchy, order: OrderList, pos: int,
                        cfg: Optional[QuadricConfig] = None,
                        patch_nodes: Optional[set[int]] = None) -> EngineState:
    """Engine state recreated at an existing cut: everything above the cut
    is discarded, candidates come from the current node quadrics. With
    ``patch_nodes``, cross-boundary candidates start out blocked."""
    cfg = cfg or QuadricConfig()
    h2, order2 = h.truncate_to_cut(order, pos)
    cut = cut_at(h2, order2, pos)
    fcorners = cut.leaf_ancestor[h2.faces]
    ok = ((fcorners[:, 0] != fcorners[:, 1])
          & (fcorners[:, 1] != fcorners[:, 2])
          & (fcorners[:, 0] != fcorners[:, 2]))
    state = EngineState(
        h=h2, order=order2, cfg=cfg,
        live=set(int(n) for n in cut.node_ids),
        fcorners=fcorners.copy(),
        face_alive=ok.copy(),
    )
    if patch_nodes is not None:
        state.side = {n: (1 if n in patch_nodes else 0) for n in state.live}
        state.blocking = True
        state.patch_live = len(patch_nodes)
    state._enqueue(state.cut_edges())
    return state


def step_collapse(state: EngineState) -> Optional[int]:
    """Apply the cheapest valid, legal, unblocked collapse; None when no
    legal candidate remains."""
    while state.heap:
        cand = heapq.heappop(state.heap)
        e = cand.edge
        if state.current.get(e) != cand.serial:
            continue
        u, v = e
        if (u not in state.live or v not in state.live
                or v not in state.nbrs[u]):
            del state.current[e]
            continue
        if not state._collapse_legal(u, v, cand.position):
            del state.current[e]
            state.dormant.add(e)
            continue
        del state.current[e]
        return state.apply_collapse(u, v, cand.position, cand.error)
    return None


def unblock(state: EngineState):
    """Reinsert cross-boundary candidates (minus any made redundant) and
    lift the segmented constraint."""
    state.blocking = False
    pend = []
    for e in sorted(state.blocked):
        a, b = e
        if a in state.live and b in state.live and b in state.nbrs[a]:
            pend.append(e)
    state.blocked.clear()
    state._enqueue(pend)


def run_to_exhaustion(state: EngineState,
                      stop: Optional[Callable[[EngineState], bool]] = None,
                      progress: Optional[Callable[[int], None]] = None,
                      cancel: Optional[Callable[[], bool]] = None) -> int:
    """step_collapse until no candidate remains (or ``stop`` fires).
    Returns the number of collapses applied."""
    done = 0
    while True:
        if stop is not None and stop(state):
            return done
        if cancel is not None and cancel():
            raise Cancelled()
        nid = step_collapse(state)
        if nid is None:
            return done
        done += 1
        if progress is not None:
            progress(done)


def build_hierarchy(mesh: Mesh, cfg: Optional[QuadricConfig] = None
                    ) -> tuple[Hierarchy, OrderList]:
    """Run the greedy search to completion over a mesh."""
    state = init_state(mesh, cfg)
    n = run_to_exhaustion(state)
    log.info("built hierarchy: %d vertices, %d collapses, %d final nodes",
             mesh.n_vertices, n, len(state.live))
    return state.h, state.order


def build_hierarchy_random(mesh: Mesh, cfg: Optional[QuadricConfig],
                           seed: int) -> tuple[Hierarchy, OrderList]:
    """Baseline: collapses picked uniformly among legal cut edges instead of
    by error; placement and quadric propagation are unchanged."""
    cfg = cfg or QuadricConfig()
    state = init_state(mesh, cfg)
    rng = np.random.default_rng(seed)
    while True:
        edges = state.cut_edges()
        if not edges:
            return state.h, state.order
        perm = rng.permutation(len(edges))
        applied = False
        for i in perm:
            u, v = edges[i]
            quads = state.h.quad[u] + state.h.quad[v]
            pos, err = K.solve_placements(quads, state.h.position[u],
                                          state.h.position[v],
                                          cfg.placement == "subset")
            if state._collapse_legal(u, v, pos[0]):
                state.apply_collapse(u, v, pos[0].copy(), float(err[0]))
                applied = True
                break
        if not applied:
            return state.h, state.order
