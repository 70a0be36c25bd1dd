"""Simplification hierarchy: a binary forest over the original vertices in
which every interior node is one edge collapse, plus the order list (a
linear extension of the forest's partial order), LOD positions, cuts, and
JSON persistence."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh import Mesh
from .quadric import QuadricConfig, mesh_vertex_quadrics

log = logging.getLogger("semisimp")

FORMAT_VERSION = "semisimp-hierarchy/1"

OrderList = list  # list[int]: interior node ids, early end first


class HierarchyLoadError(ValueError):
    """Hierarchy file rejected; message names the offending field."""


class Hierarchy:
    """Node table of the simplification forest.

    Leaves are node ids [0, n_leaves) and correspond one-to-one with the
    original vertices; interior nodes are appended as collapses happen.
    ``in_use`` distinguishes existing nodes from slots dropped by
    repartitioning (ids are never reused).
    """

    def __init__(self, mesh: Mesh):
        v = mesh.n_vertices
        cap = max(2 * v, 8)
        self.n_leaves = v
        self.count = v
        self.faces = mesh.faces
        self.children = np.full((cap, 2), -1, dtype=np.int64)
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.position = np.zeros((cap, 3))
        self.position[:v] = mesh.positions
        self.error = np.zeros(cap)
        self.quad = np.zeros((cap, 10))
        self.in_use = np.zeros(cap, dtype=bool)
        self.in_use[:v] = True
        self.texcoord: Optional[np.ndarray] = None
        self.normal: Optional[np.ndarray] = None
        if mesh.texcoords is not None:
            self.texcoord = np.zeros((cap, 2))
            self.texcoord[:v] = mesh.texcoords
        if mesh.normals is not None:
            self.normal = np.zeros((cap, 3))
            self.normal[:v] = mesh.normals

    # ---- structure ----

    def _grow(self, need: int):
        cap = len(self.parent)
        if need <= cap:
            return
        new_cap = max(need, cap + cap // 2 + 8)
        def grown(arr, fill=0):
            out = np.full((new_cap,) + arr.shape[1:], fill, dtype=arr.dtype)
            out[:cap] = arr
            return out
        self.children = grown(self.children, -1)
        self.parent = grown(self.parent, -1)
        self.position = grown(self.position, 0.0)
        self.error = grown(self.error, 0.0)
        self.quad = grown(self.quad, 0.0)
        self.in_use = grown(self.in_use, False)
        if self.texcoord is not None:
            self.texcoord = grown(self.texcoord, 0.0)
        if self.normal is not None:
            self.normal = grown(self.normal, 0.0)

    def add_interior(self, c1: int, c2: int, position, error: float,
                     quad, texcoord=None, normal=None) -> int:
        if self.parent[c1] != -1 or self.parent[c2] != -1:
            raise ValueError("child already has a parent")
        nid = self.count
        self._grow(nid + 1)
        self.count = nid + 1
        self.children[nid] = (c1, c2)
        self.parent[c1] = nid
        self.parent[c2] = nid
        self.position[nid] = position
        self.error[nid] = error
        self.quad[nid] = quad
        self.in_use[nid] = True
        if self.texcoord is not None and texcoord is not None:
            self.texcoord[nid] = texcoord
        if self.normal is not None and normal is not None:
            self.normal[nid] = normal
        return nid

    def is_leaf(self, n: int) -> bool:
        return self.children[n, 0] < 0

    def node_ids(self) -> np.ndarray:
        return np.nonzero(self.in_use[:self.count])[0]

    @property
    def n_nodes(self) -> int:
        return int(np.sum(self.in_use[:self.count]))

    def ancestors(self, n: int) -> list[int]:
        out = []
        p = int(self.parent[n])
        while p != -1:
            out.append(p)
            p = int(self.parent[p])
        return out

    def subtree_interior(self, n: int) -> list[int]:
        """Interior nodes of n's subtree, n included if interior."""
        out = []
        stack = [n]
        while stack:
            x = stack.pop()
            if not self.is_leaf(x):
                out.append(x)
                stack.append(int(self.children[x, 0]))
                stack.append(int(self.children[x, 1]))
        return out

    def clone(self) -> "Hierarchy":
        out = object.__new__(Hierarchy)
        out.n_leaves = self.n_leaves
        out.count = self.count
        out.faces = self.faces
        for name in ("children", "parent", "position", "error", "quad",
                     "in_use"):
            setattr(out, name, getattr(self, name).copy())
        out.texcoord = None if self.texcoord is None else self.texcoord.copy()
        out.normal = None if self.normal is None else self.normal.copy()
        return out

    def truncate_to_cut(self, order: OrderList, k: int) -> tuple["Hierarchy", OrderList]:
        """Copy with everything above the cut at k removed. Kept nodes keep
        their ids, positions and errors verbatim."""
        out = self.clone()
        for n in order[k:]:
            out.in_use[n] = False
            for c in out.children[n]:
                c = int(c)
                if c >= 0 and out.in_use[c]:
                    out.parent[c] = -1
        return out, list(order[:k])


@dataclass(frozen=True)
class Cut:
    """One horizontal slice of the hierarchy: the model after k collapses."""

    k: int
    node_ids: np.ndarray        # sorted, the cut's nodes
    leaf_ancestor: np.ndarray   # (n_leaves,) leaf id -> cut node id

    @property
    def node_set(self) -> frozenset:
        return frozenset(int(n) for n in self.node_ids)

    def __contains__(self, n: int) -> bool:
        idx = np.searchsorted(self.node_ids, n)
        return idx < len(self.node_ids) and self.node_ids[idx] == n


def _order_index(h: Hierarchy, order: OrderList) -> np.ndarray:
    oidx = np.full(h.count, -1, dtype=np.int64)
    for i, n in enumerate(order):
        oidx[n] = i
    return oidx


def cut_at(h: Hierarchy, order: OrderList, k: int) -> Cut:
    """Nodes live after applying the first k collapses of the order list."""
    if not 0 <= k <= len(order):
        raise IndexError(f"LOD position {k} out of range [0, {len(order)}]")
    oidx = _order_index(h, order)
    produced = np.zeros(h.count, dtype=bool)
    produced[:h.n_leaves] = True
    produced |= (oidx >= 0) & (oidx < k)
    parent = h.parent[:h.count]
    has_live_parent = parent >= 0
    parent_produced = np.zeros(h.count, dtype=bool)
    pp = parent[has_live_parent]
    parent_produced[has_live_parent] = produced[pp]
    in_cut = h.in_use[:h.count] & produced & ~parent_produced

    jump = np.arange(h.count, dtype=np.int64)
    for n in order[:k]:
        jump[h.children[n, 0]] = n
        jump[h.children[n, 1]] = n
    while True:
        jj = jump[jump]
        if np.array_equal(jj, jump):
            break
        jump = jj
    return Cut(k=k, node_ids=np.nonzero(in_cut)[0],
               leaf_ancestor=jump[:h.n_leaves])


def mapped_cut_faces(h: Hierarchy, cut: Cut) -> np.ndarray:
    """Original faces with corners mapped to their cut ancestors, degenerate
    faces dropped, duplicate unordered triples reduced to the first."""
    mapped = cut.leaf_ancestor[h.faces]
    ok = ((mapped[:, 0] != mapped[:, 1]) & (mapped[:, 1] != mapped[:, 2])
          & (mapped[:, 0] != mapped[:, 2]))
    mapped = mapped[ok]
    if len(mapped) == 0:
        return mapped.reshape(0, 3)
    canon = np.sort(mapped, axis=1)
    _, first = np.unique(canon, axis=0, return_index=True)
    return mapped[np.sort(first)]


def cut_face_count(h: Hierarchy, order: OrderList, k: int) -> int:
    return len(mapped_cut_faces(h, cut_at(h, order, k)))


def extract_mesh(h: Hierarchy, cut: Cut) -> Mesh:
    """Mesh of one cut: cut nodes as vertices, original faces corner-mapped
    to their cut ancestors."""
    nodes = cut.node_ids
    mapped = mapped_cut_faces(h, cut)
    local = np.searchsorted(nodes, mapped)
    return Mesh(
        positions=h.position[nodes],
        faces=local,
        texcoords=None if h.texcoord is None else h.texcoord[nodes],
        normals=None if h.normal is None else _renorm(h.normal[nodes]),
    )


def _renorm(normals: np.ndarray) -> np.ndarray:
    out = normals.copy()
    lens = np.linalg.norm(out, axis=1)
    bad = lens < 1e-12
    out[bad] = (0.0, 0.0, 1.0)
    lens[bad] = 1.0
    return out / lens[:, None]


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, message: str):
        self.violations.append(Violation(kind, message))

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


def validate(h: Hierarchy, order: OrderList,
             n_partition_samples: int = 10) -> ValidationReport:
    """Check forest shape, order-list linear extension, leaf errors, and the
    cut partition property at sampled LOD positions."""
    rep = ValidationReport()
    ids = h.node_ids()
    id_set = set(int(i) for i in ids)

    for n in ids:
        n = int(n)
        c1, c2 = int(h.children[n, 0]), int(h.children[n, 1])
        if (c1 < 0) != (c2 < 0):
            rep.add("shape", f"node {n} has exactly one child")
            continue
        if c1 >= 0:
            for c in (c1, c2):
                if c not in id_set:
                    rep.add("shape", f"node {n} has missing child {c}")
                elif int(h.parent[c]) != n:
                    rep.add("shape",
                            f"child {c} of {n} has parent {int(h.parent[c])}")
        p = int(h.parent[n])
        if p != -1:
            if p not in id_set:
                rep.add("shape", f"node {n} has missing parent {p}")
            elif n not in (int(h.children[p, 0]), int(h.children[p, 1])):
                rep.add("shape", f"node {n} not among children of parent {p}")

    for n in range(h.n_leaves):
        if h.in_use[n] and not h.is_leaf(n):
            rep.add("shape", f"leaf slot {n} has children")
        if h.in_use[n] and h.error[n] != 0.0:
            rep.add("leaf-error", f"leaf {n} has error {h.error[n]}")

    interior = [int(n) for n in ids if not h.is_leaf(n)]
    seen = set()
    for n in order:
        if n in seen:
            rep.add("order", f"node {n} appears twice in order list")
        seen.add(n)
        if n not in id_set or h.is_leaf(n):
            rep.add("order", f"order entry {n} is not a live interior node")
    for n in interior:
        if n not in seen:
            rep.add("order", f"interior node {n} missing from order list")

    oidx = _order_index(h, order)
    for i, n in enumerate(order):
        if n not in id_set or h.is_leaf(n):
            continue
        for c in h.children[n]:
            c = int(c)
            if c >= 0 and not h.is_leaf(c) and c in id_set:
                if oidx[c] < 0 or oidx[c] >= i:
                    rep.add("linear-extension",
                            f"child {c} ordered at {int(oidx[c])}, "
                            f"parent {n} at {i}")

    if not rep.ok:
        return rep  # partition checks assume a sane forest

    rng = np.random.default_rng(20260810)
    ks = sorted({0, len(order),
                 *(int(x) for x in rng.integers(0, len(order) + 1,
                                                n_partition_samples))})
    parent = h.parent[:h.count]
    for k in ks:
        cut = cut_at(h, order, k)
        in_cut = np.zeros(h.count, dtype=bool)
        in_cut[cut.node_ids] = True
        hits = np.zeros(h.n_leaves, dtype=np.int64)
        cur = np.arange(h.n_leaves, dtype=np.int64)
        alive = np.ones(h.n_leaves, dtype=bool)
        guard = 0
        while np.any(alive):
            hits[alive] += in_cut[cur[alive]]
            nxt = parent[cur[alive]]
            sub_alive = nxt >= 0
            idx = np.nonzero(alive)[0]
            cur[idx[sub_alive]] = nxt[sub_alive]
            alive[idx[~sub_alive]] = False
            guard += 1
            if guard > h.count + 2:
                rep.add("shape", "parent chain does not terminate (cycle)")
                return rep
        bad = np.nonzero(hits != 1)[0]
        if len(bad):
            rep.add("partition",
                    f"k={k}: {len(bad)} leaves covered by {hits[bad[0]]} cut "
                    f"nodes (first leaf {int(bad[0])})")
    return rep


# ---- persistence ----


def _canonical_ids(h: Hierarchy, order: OrderList) -> dict[int, int]:
    mapping = {i: i for i in range(h.n_leaves)}
    for i, n in enumerate(order):
        mapping[int(n)] = h.n_leaves + i
    return mapping


def save_hierarchy(h: Hierarchy, order: OrderList) -> bytes:
    """Serialize as versioned JSON. Interior node ids are canonicalized to
    n_leaves + order position, making ids dense."""
    mapping = _canonical_ids(h, order)
    ids = sorted(int(n) for n in h.node_ids())
    if len(ids) != len(mapping):
        raise ValueError("hierarchy has nodes outside leaves + order list")
    nodes = []
    for n in ids:
        entry: dict = {"id": mapping[n]}
        if h.is_leaf(n):
            entry["children"] = None
        else:
            entry["children"] = [mapping[int(h.children[n, 0])],
                                 mapping[int(h.children[n, 1])]]
        entry["position"] = [float(x) for x in h.position[n]]
        entry["error"] = float(h.error[n])
        if h.texcoord is not None:
            entry["texcoord"] = [float(x) for x in h.texcoord[n]]
        if h.normal is not None:
            entry["normal"] = [float(x) for x in h.normal[n]]
        nodes.append(entry)
    nodes.sort(key=lambda e: e["id"])
    doc = {
        "version": FORMAT_VERSION,
        "nodes": nodes,
        "order": [mapping[int(n)] for n in order],
        "leaf_vertex_map": [[i, i] for i in range(h.n_leaves)],
        "faces": [[int(a), int(b), int(c)] for a, b, c in h.faces],
    }
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def _expect(cond: bool, fieldname: str, why: str):
    if not cond:
        raise HierarchyLoadError(f"field {fieldname}: {why}")


def load_hierarchy(data: bytes | str,
                   cfg: Optional[QuadricConfig] = None
                   ) -> tuple[Hierarchy, OrderList]:
    """Parse a hierarchy file. Load is syntactic; run validate() for the
    semantic contracts. Node quadrics are rebuilt deterministically from the
    leaf geometry (cfg defaults to QuadricConfig())."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise HierarchyLoadError(f"field <root>: not valid JSON ({exc})")
    _expect(isinstance(doc, dict), "<root>", "must be an object")
    _expect(doc.get("version") == FORMAT_VERSION, "version",
            f"expected {FORMAT_VERSION!r}, got {doc.get('version')!r}")
    for key in ("nodes", "order", "leaf_vertex_map", "faces"):
        _expect(key in doc, key, "missing")
        _expect(isinstance(doc[key], list), key, "must be an array")

    nodes = doc["nodes"]
    n_total = len(nodes)
    _expect(n_total > 0, "nodes", "must not be empty")
    seen_ids = set()
    leaves = []
    for i, entry in enumerate(nodes):
        f = f"nodes[{i}]"
        _expect(isinstance(entry, dict), f, "must be an object")
        _expect(isinstance(entry.get("id"), int), f + ".id",
                "must be an integer")
        nid = entry["id"]
        _expect(0 <= nid < n_total, f + ".id", "ids must be dense in [0, N)")
        _expect(nid not in seen_ids, f + ".id", "duplicate id")
        seen_ids.add(nid)
        ch = entry.get("children", None)
        if ch is not None:
            _expect(isinstance(ch, list) and len(ch) == 2
                    and all(isinstance(c, int) for c in ch),
                    f + ".children", "must be null or two integer ids")
        else:
            leaves.append(nid)
        pos = entry.get("position")
        _expect(isinstance(pos, list) and len(pos) == 3
                and all(isinstance(x, (int, float)) for x in pos),
                f + ".position", "must be [x, y, z]")
        err = entry.get("error")
        _expect(isinstance(err, (int, float)) and err >= 0, f + ".error",
                "must be a number >= 0")

    n_leaves = len(leaves)
    _expect(sorted(leaves) == list(range(n_leaves)), "nodes",
            "leaf nodes must occupy ids 0..V-1")

    lvm = doc["leaf_vertex_map"]
    _expect(len(lvm) == n_leaves, "leaf_vertex_map",
            f"must have one entry per leaf ({n_leaves})")
    for i, pair in enumerate(lvm):
        _expect(isinstance(pair, list) and len(pair) == 2
                and pair[0] == pair[1] == i, f"leaf_vertex_map[{i}]",
                "must be the identity pair [i, i]")

    by_id = {e["id"]: e for e in nodes}
    positions = np.array([by_id[i]["position"] for i in range(n_leaves)],
                         dtype=np.float64)
    faces = []
    for i, tri in enumerate(doc["faces"]):
        _expect(isinstance(tri, list) and len(tri) == 3
                and all(isinstance(x, int) for x in tri), f"faces[{i}]",
                "must be three vertex indices")
        _expect(all(0 <= x < n_leaves for x in tri), f"faces[{i}]",
                "vertex index out of range")
        faces.append(tri)

    has_uv = any("texcoord" in e for e in nodes)
    has_n = any("normal" in e for e in nodes)
    uv = np.zeros((n_leaves, 2)) if has_uv else None
    nr = None
    if has_n:
        nr = np.zeros((n_leaves, 3))
        nr[:, 2] = 1.0
    for i in range(n_leaves):
        e = by_id[i]
        if has_uv and "texcoord" in e:
            _expect(isinstance(e["texcoord"], list) and len(e["texcoord"]) == 2,
                    f"nodes[{i}].texcoord", "must be [u, v]")
            uv[i] = e["texcoord"]
        if has_n and "normal" in e:
            _expect(isinstance(e["normal"], list) and len(e["normal"]) == 3,
                    f"nodes[{i}].normal", "must be [x, y, z]")
            nr[i] = e["normal"]
    if nr is not None:
        nr = _renorm(nr)

    try:
        mesh = Mesh(positions=positions,
                    faces=np.array(faces, dtype=np.int64).reshape(-1, 3),
                    texcoords=uv, normals=nr)
    except ValueError as exc:
        raise HierarchyLoadError(f"field faces: {exc}") from exc

    h = Hierarchy(mesh)
    h._grow(n_total)
    h.count = n_total
    h.in_use[:n_total] = True
    for nid in range(n_leaves, n_total):
        e = by_id[nid]
        ch = e.get("children")
        _expect(ch is not None, f"nodes[{nid}].children",
                "interior node needs children")
        for c in ch:
            _expect(0 <= c < n_total, f"nodes[{nid}].children",
                    f"unknown node id {c}")
        h.children[nid] = ch
        for c in ch:
            h.parent[c] = nid
        h.position[nid] = e["position"]
        h.error[nid] = e["error"]
        if h.texcoord is not None and "texcoord" in e:
            h.texcoord[nid] = e["texcoord"]
        if h.normal is not None and "normal" in e:
            h.normal[nid] = e["normal"]

    order = []
    for i, n in enumerate(doc["order"]):
        _expect(isinstance(n, int), f"order[{i}]", "must be an integer id")
        _expect(n_leaves <= n < n_total if isinstance(n, int) else False,
                f"order[{i}]", f"unknown interior node id {n}")
        order.append(n)

    cfg = cfg or QuadricConfig()
    h.quad[:n_leaves] = mesh_vertex_quadrics(mesh, cfg)
    for n in order:
        c1, c2 = h.children[n]
        h.quad[n] = h.quad[c1] + h.quad[c2]
    return h, order
