"""Order-list manipulation. Every operation returns a new list that is a
permutation of the input and still a linear extension of the hierarchy's
partial order: moving a collapse drags along whichever ancestors or
descendants would otherwise end up on the wrong side of it."""

from __future__ import annotations

from dataclasses import dataclass

from .hierarchy import Hierarchy, OrderList, Cut, cut_at


class ReorderError(ValueError):
    pass


@dataclass(frozen=True)
class ReorderAction:
    node: int
    source: int
    destination: int

    @property
    def kind(self) -> str:
        return "refining" if self.destination > self.source else "simplifying"


def _check_selection(h: Hierarchy, cut: Cut, selection) -> list[int]:
    nodes = sorted(int(n) for n in selection)
    for n in nodes:
        if n not in cut:
            raise ReorderError(f"node {n} is not in the current cut")
    return nodes


def move_element(order: OrderList, h: Hierarchy, i: int, k: int) -> OrderList:
    """Move the collapse at index i to index k.

    Refining (i < k): ancestors of the moved element inside the crossed
    range are relocated just past it, keeping their relative order.
    Simplifying (k < i): likewise for descendants, relocated just before it.
    """
    n = len(order)
    if not (0 <= i < n and 0 <= k < n):
        raise ReorderError(f"indices ({i}, {k}) out of range for {n} entries")
    if i == k:
        raise ReorderError("source and destination are equal")
    c = order[i]
    if i < k:
        window = order[i + 1:k + 1]
        anc = set(h.ancestors(c))
        dragged = [x for x in window if x in anc]
        rest = [x for x in window if x not in anc]
        return order[:i] + rest + [c] + dragged + order[k + 1:]
    window = order[k:i]
    desc = set(h.subtree_interior(c)) - {c}
    dragged = [x for x in window if x in desc]
    rest = [x for x in window if x not in desc]
    return order[:k] + dragged + [c] + rest + order[i + 1:]


def local_simplify(h: Hierarchy, order: OrderList, pos: int,
                   selection) -> tuple[OrderList, int]:
    """Replace each selected cut node by its parent: the parent's collapse
    is reordered to happen at the current LOD position, dragging any not yet
    performed sibling-subtree collapses with it, and the LOD position
    advances past it."""
    cut = cut_at(h, order, pos)
    nodes = _check_selection(h, cut, selection)
    for s in nodes:
        if h.parent[s] == -1:
            raise ReorderError(f"node {s} is a root and cannot be simplified")
    out = list(order)
    for s in nodes:
        p = int(h.parent[s])
        j = out.index(p)
        if j < pos:
            continue  # an earlier move already applied this parent
        if j > pos:
            desc = set(h.subtree_interior(p)) - {p}
            window = out[pos:j]
            dragged = [x for x in window if x in desc]
            rest = [x for x in window if x not in desc]
            out = out[:pos] + dragged + [p] + rest + out[j + 1:]
            pos = pos + len(dragged) + 1
        else:
            pos = j + 1
    return out, pos


def local_refine(h: Hierarchy, order: OrderList, pos: int,
                 selection) -> tuple[OrderList, int]:
    """Replace each selected interior cut node by its children: its collapse
    is delayed to just past the adjusted LOD position."""
    cut = cut_at(h, order, pos)
    nodes = _check_selection(h, cut, selection)
    for s in nodes:
        if h.is_leaf(s):
            raise ReorderError(f"node {s} is a leaf and cannot be refined")
    out = list(order)
    for s in nodes:
        j = out.index(s)
        # s is in the cut, so no ancestor of s sits in (j, pos): plain splice
        if j != pos - 1:
            out = out[:j] + out[j + 1:pos] + [s] + out[pos:]
        pos -= 1
    return out, pos


def preserve_feature(h: Hierarchy, order: OrderList, from_pos: int,
                     to_pos: int, selection) -> OrderList:
    """Keep the selected nodes of the cut at from_pos visible at the later,
    coarser position to_pos by refining their ancestors' collapses past
    to_pos; an equal number of independent collapses move up to fill the
    budget."""
    n = len(order)
    if not (0 <= from_pos <= to_pos <= n):
        raise ReorderError(
            f"need 0 <= from_pos <= to_pos <= {n}, got ({from_pos}, {to_pos})")
    cut = cut_at(h, order, from_pos)
    nodes = _check_selection(h, cut, selection)
    if from_pos == to_pos or not nodes:
        return list(order)
    blocked = set()
    for s in nodes:
        blocked.update(h.ancestors(s))
    expelled = [x for x in order[:to_pos] if x in blocked]
    if not expelled:
        return list(order)
    eligible = [x for x in order[to_pos:] if x not in blocked]
    if len(eligible) < len(expelled):
        raise ReorderError(
            f"cannot keep selection visible at position {to_pos}: "
            f"{len(expelled)} collapses must move past it but only "
            f"{len(eligible)} independent collapses are available")
    pulled = eligible[:len(expelled)]
    pulled_set = set(pulled)
    expelled_set = set(expelled)
    keep = [x for x in order[:to_pos] if x not in expelled_set]
    rest = [x for x in order[to_pos:] if x not in pulled_set]
    return keep + pulled + expelled + rest


def eliminate_feature(h: Hierarchy, order: OrderList, from_pos: int,
                      to_pos: int, selection) -> OrderList:
    """Make the selected nodes of the cut at from_pos visible at the
    earlier, finer position to_pos by pulling the collapses that produce
    them (and their subtrees) before to_pos."""
    n = len(order)
    if not (0 <= to_pos <= from_pos <= n):
        raise ReorderError(
            f"need 0 <= to_pos <= from_pos <= {n}, got ({from_pos}, {to_pos})")
    cut = cut_at(h, order, from_pos)
    nodes = _check_selection(h, cut, selection)
    if from_pos == to_pos or not nodes:
        return list(order)
    needed = set()
    for s in nodes:
        needed.update(h.subtree_interior(s))
    if len(needed) > to_pos:
        raise ReorderError(
            f"selection needs {len(needed)} collapses but only {to_pos} fit "
            f"before position {to_pos} (deficit {len(needed) - to_pos})")
    quota = to_pos - len(needed)
    kept = set()
    for x in order[:to_pos]:
        if x not in needed and quota > 0:
            kept.add(x)
            quota -= 1
    front_set = needed | kept
    front = [x for x in order if x in front_set]
    back = [x for x in order if x not in front_set]
    return front + back
