"""Hierarchy manipulation: carve a user-selected patch out of the current
cut and rebuild everything above the cut with segmented resimplification,
so the patch collapses to a single subtree before merging with its
surround."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

from .engine import init_state_from_cut, run_to_exhaustion, unblock
from .geom_edit import _CutMesh
from .hierarchy import Hierarchy, OrderList, cut_at
from .quadric import QuadricConfig

log = logging.getLogger("semisimp")


class PatchError(ValueError):
    pass


@dataclass(frozen=True)
class Patch:
    """Edge-connected subset of a cut, with its derived boundary edges
    (cut edges having exactly one endpoint inside)."""

    nodes: frozenset
    boundary_edges: frozenset
    lod: int


def define_patch(h: Hierarchy, order: OrderList, pos: int,
                 selection) -> Patch:
    """Validate a selection as a patch: nonempty, inside the cut, and
    edge-connected in the cut mesh."""
    nodes = {int(n) for n in selection}
    if not nodes:
        raise PatchError("patch selection is empty")
    cut = cut_at(h, order, pos)
    for n in sorted(nodes):
        if n not in cut:
            raise PatchError(f"node {n} is not in the cut at position {pos}")
    cm = _CutMesh(h, cut)
    seen = set()
    stack = [min(nodes)]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        for w in cm.nbrs[n]:
            if w in nodes and w not in seen:
                stack.append(w)
    if seen != nodes:
        components = [sorted(seen)]
        remaining = nodes - seen
        while remaining:
            comp = set()
            stack = [min(remaining)]
            while stack:
                n = stack.pop()
                if n in comp:
                    continue
                comp.add(n)
                for w in cm.nbrs[n]:
                    if w in remaining and w not in comp:
                        stack.append(w)
            components.append(sorted(comp))
            remaining -= comp
        raise PatchError(
            f"patch selection is not edge-connected; components: {components}")
    boundary = set()
    for n in sorted(nodes):
        for w in sorted(cm.nbrs[n]):
            if w not in nodes:
                boundary.add((n, w) if n < w else (w, n))
    return Patch(nodes=frozenset(nodes), boundary_edges=frozenset(boundary),
                 lod=pos)


def resimplify_segmented(h: Hierarchy, order: OrderList, pos: int,
                         patch: Patch, cfg: Optional[QuadricConfig] = None,
                         progress: Optional[Callable[[int, int], None]] = None,
                         cancel: Optional[Callable[[], bool]] = None,
                         on_collapse: Optional[Callable] = None
                         ) -> tuple[Hierarchy, OrderList]:
    """Rebuild the hierarchy above the current cut with the patch kept
    separate until it reduces to a single node.

    Everything above the cut is discarded (prior order and geometry edits
    up there become obsolete; nodes at or below the cut are preserved
    verbatim). The greedy engine restarts from the cut with cross-boundary
    candidates blocked; once the patch is a single node they are reinserted
    (minus any made redundant) and simplification runs to completion.
    """
    cfg = cfg or QuadricConfig()
    cut = cut_at(h, order, pos)
    for n in sorted(patch.nodes):
        if n not in cut:
            raise PatchError(f"patch node {n} is not in the cut at {pos}")

    state = init_state_from_cut(h, order, pos, cfg,
                                patch_nodes=set(patch.nodes))
    total_estimate = len(state.live) - 1
    done_box = [0]

    def report(done: int):
        done_box[0] += 1
        if progress is not None:
            progress(done_box[0], total_estimate)

    phase = ["segmented"]
    if on_collapse is not None:
        state.on_collapse = lambda nid, edge: on_collapse(phase[0], nid, edge)

    run_to_exhaustion(state, stop=lambda s: s.patch_live <= 1,
                      progress=report, cancel=cancel)
    if state.patch_live > 1:
        raise PatchError(
            f"patch cannot be reduced to a single node: stuck at "
            f"{state.patch_live} nodes (no legal internal collapse remains)")

    phase[0] = "merged"
    unblock(state)
    run_to_exhaustion(state, progress=report, cancel=cancel)
    log.info("segmented resimplification: %d collapses above position %d",
             done_box[0], pos)
    return state.h, state.order
