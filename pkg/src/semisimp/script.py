"""Replayable edit scripts: a JSON command list covering every interactive
operation, applied deterministically so identical inputs produce
bit-identical outputs."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geom_edit, reorder, repartition
from .engine import build_hierarchy
from .hierarchy import Hierarchy, OrderList, cut_at, cut_face_count, \
    extract_mesh, save_hierarchy
from .mesh import Mesh
from .obj_io import save_obj
from .quadric import QuadricConfig

log = logging.getLogger("semisimp")

SCRIPT_VERSION = "semisimp-script/1"

COMMAND_OPS = (
    "set_lod", "move_element", "local_simplify", "local_refine",
    "preserve_feature", "eliminate_feature", "vertex_edit", "define_patch",
    "resimplify", "save_lod", "save_hierarchy",
)


class ScriptError(ValueError):
    pass


class ReplayError(RuntimeError):
    def __init__(self, index: int, op: str, reason: str):
        super().__init__(f"command {index} ({op}): {reason}")
        self.index = index
        self.op = op
        self.reason = reason


@dataclass
class EditScript:
    commands: list = field(default_factory=list)
    quadric_config: Optional[QuadricConfig] = None

    def to_json(self) -> bytes:
        doc: dict = {"version": SCRIPT_VERSION, "commands": self.commands}
        if self.quadric_config is not None:
            doc["quadric_config"] = {
                "boundary_weight": self.quadric_config.boundary_weight,
                "placement": self.quadric_config.placement,
            }
        return json.dumps(doc, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "EditScript":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"not valid JSON: {exc}")
        if not isinstance(doc, dict) or doc.get("version") != SCRIPT_VERSION:
            raise ScriptError(
                f"expected version {SCRIPT_VERSION!r}, got "
                f"{doc.get('version') if isinstance(doc, dict) else doc!r}")
        commands = doc.get("commands")
        if not isinstance(commands, list):
            raise ScriptError("commands must be an array")
        for i, cmd in enumerate(commands):
            if not isinstance(cmd, dict) or cmd.get("op") not in COMMAND_OPS:
                raise ScriptError(f"commands[{i}]: unknown op "
                                  f"{cmd.get('op') if isinstance(cmd, dict) else cmd!r}")
        cfg = None
        if "quadric_config" in doc:
            qc = doc["quadric_config"]
            cfg = QuadricConfig(boundary_weight=qc.get("boundary_weight", 1000.0),
                                placement=qc.get("placement", "optimal"))
        return cls(commands=commands, quadric_config=cfg)


def parse_edit_options(obj: dict) -> geom_edit.EditOptions:
    falloff = obj.get("falloff", [1.0, 0.0])
    return geom_edit.EditOptions(
        radius=int(obj.get("radius", 0)),
        falloff=geom_edit.FalloffCurve(float(falloff[0]), float(falloff[1])),
        ancestors=bool(obj.get("ancestors", False)),
        descendants=str(obj.get("descendants", "off")),
    )


def edit_options_payload(opts: geom_edit.EditOptions) -> dict:
    return {
        "radius": opts.radius,
        "falloff": [opts.falloff.y1, opts.falloff.y2],
        "ancestors": opts.ancestors,
        "descendants": opts.descendants,
    }


def resolve_lod(h: Hierarchy, order: OrderList, lod=None, vertices=None,
                faces=None) -> tuple[int, Optional[str]]:
    """Map a --lod/--vertices/--faces target to a cut position k.

    Vertex targets are exact when achievable. Face targets pick the finest
    cut within the budget (smallest k with face count <= target); face
    counts are monotone non-increasing in k.
    """
    given = [x is not None for x in (lod, vertices, faces)]
    if sum(given) != 1:
        raise ValueError("specify exactly one of lod / vertices / faces")
    n = len(order)
    if lod is not None:
        if not 0 <= lod <= n:
            raise ValueError(f"LOD position {lod} out of range [0, {n}]")
        return int(lod), None
    if vertices is not None:
        v_max = h.n_leaves
        v_min = v_max - n
        if vertices > v_max:
            return 0, (f"requested {vertices} vertices but the model has "
                       f"{v_max}; using the full model")
        if vertices < v_min:
            return n, (f"no cut with {vertices} vertices exists; using the "
                       f"coarsest cut ({v_min} vertices)")
        return v_max - int(vertices), None
    lo, hi = 0, n
    if cut_face_count(h, order, n) > faces:
        return n, (f"even the coarsest cut has "
                   f"{cut_face_count(h, order, n)} faces (> {faces})")
    while lo < hi:
        mid = (lo + hi) // 2
        if cut_face_count(h, order, mid) <= faces:
            hi = mid
        else:
            lo = mid + 1
    return lo, None


@dataclass
class ReplayState:
    h: Hierarchy
    order: OrderList
    pos: int = 0
    pending_patch: Optional[repartition.Patch] = None


def replay_script(source: Mesh | tuple[Hierarchy, OrderList],
                  script: EditScript,
                  cfg: Optional[QuadricConfig] = None) -> dict[str, bytes]:
    """Run a script headless and return {relative path: bytes} for every
    declared output. Nothing is written on failure; the first failing
    command aborts with its index and reason."""
    cfg = script.quadric_config or cfg or QuadricConfig()
    if isinstance(source, Mesh):
        h, order = build_hierarchy(source, cfg)
    else:
        h, order = source
        h = h.clone()
        order = list(order)
    st = ReplayState(h=h, order=order)
    outputs: dict[str, bytes] = {}

    for i, cmd in enumerate(script.commands):
        op = cmd["op"]
        try:
            _apply_command(st, op, cmd, cfg, outputs)
        except Exception as exc:
            raise ReplayError(i, op, str(exc)) from exc
    return outputs


def _apply_command(st: ReplayState, op: str, cmd: dict, cfg: QuadricConfig,
                   outputs: dict[str, bytes]):
    if op == "set_lod":
        k = int(cmd["k"])
        if not 0 <= k <= len(st.order):
            raise ValueError(f"LOD position {k} out of range")
        st.pos = k
    elif op == "move_element":
        st.order = reorder.move_element(st.order, st.h, int(cmd["from"]),
                                        int(cmd["to"]))
    elif op == "local_simplify":
        st.order, st.pos = reorder.local_simplify(st.h, st.order, st.pos,
                                                  cmd["nodes"])
    elif op == "local_refine":
        st.order, st.pos = reorder.local_refine(st.h, st.order, st.pos,
                                                cmd["nodes"])
    elif op == "preserve_feature":
        st.order = reorder.preserve_feature(st.h, st.order, int(cmd["from"]),
                                            int(cmd["to"]), cmd["nodes"])
        st.pos = int(cmd["to"])
    elif op == "eliminate_feature":
        st.order = reorder.eliminate_feature(st.h, st.order, int(cmd["from"]),
                                             int(cmd["to"]), cmd["nodes"])
        st.pos = int(cmd["to"])
    elif op == "vertex_edit":
        opts = parse_edit_options(cmd.get("options", {}))
        geom_edit.apply_vertex_edit(st.h, st.order, st.pos, int(cmd["node"]),
                                    np.asarray(cmd["delta"], dtype=float),
                                    opts, cfg)
    elif op == "define_patch":
        st.pending_patch = repartition.define_patch(st.h, st.order, st.pos,
                                                    cmd["nodes"])
    elif op == "resimplify":
        if st.pending_patch is None:
            raise ValueError("no patch defined before resimplify")
        st.h, st.order = repartition.resimplify_segmented(
            st.h, st.order, st.pos, st.pending_patch, cfg)
        st.pending_patch = None
        st.pos = min(st.pos, len(st.order))
    elif op == "save_lod":
        k, warning = resolve_lod(st.h, st.order, lod=cmd.get("lod"),
                                 vertices=cmd.get("vertices"),
                                 faces=cmd.get("faces"))
        if warning:
            log.warning("save_lod %s: %s", cmd["path"], warning)
        mesh = extract_mesh(st.h, cut_at(st.h, st.order, k))
        outputs[cmd["path"]] = save_obj(mesh)
    elif op == "save_hierarchy":
        outputs[cmd["path"]] = save_hierarchy(st.h, st.order)
    else:  # pragma: no cover - guarded by EditScript.from_json
        raise ValueError(f"unknown op {op!r}")
