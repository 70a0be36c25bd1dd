"""Command-line entry points: build hierarchies, extract levels of detail,
validate and replay edit scripts, or serve a live editing session."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .engine import build_hierarchy
from .hierarchy import cut_at, extract_mesh, load_hierarchy, save_hierarchy, \
    validate
from .obj_io import load_obj, save_obj
from .quadric import QuadricConfig
from .script import EditScript, ReplayError, replay_script, resolve_lod

log = logging.getLogger("semisimp")


def _setup_logging():
    level = os.environ.get("SEMISIMP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _cfg_from_args(args) -> QuadricConfig:
    return QuadricConfig(boundary_weight=args.boundary_weight,
                         placement=args.placement)


def _add_cfg_flags(p: argparse.ArgumentParser):
    p.add_argument("--boundary-weight", type=float, default=1000.0,
                   help="weight of boundary penalty quadrics (default 1000)")
    p.add_argument("--placement", choices=("optimal", "subset"),
                   default="optimal",
                   help="collapse placement rule (default optimal)")


def _load_source(path: Path, cfg: QuadricConfig):
    """An input model (.obj) or hierarchy file (.json), detected by content."""
    data = path.read_bytes()
    head = data.lstrip()[:1]
    if head == b"{":
        return load_hierarchy(data, cfg)
    return load_obj(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semisimp",
        description="Semiautomatic mesh simplification: build an "
                    "edge-collapse hierarchy, extract levels of detail, "
                    "replay edit scripts, or serve a live editing session.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simplify", help="build a hierarchy from an OBJ model")
    p.add_argument("model", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _add_cfg_flags(p)

    p = sub.add_parser("extract", help="extract one level of detail as OBJ")
    p.add_argument("hierarchy", type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--vertices", type=int)
    group.add_argument("--faces", type=int)
    group.add_argument("--lod", type=int)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("apply", help="replay an edit script headless")
    p.add_argument("source", type=Path,
                   help="input model (.obj) or hierarchy (.json)")
    p.add_argument("--script", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    _add_cfg_flags(p)

    p = sub.add_parser("validate", help="check a hierarchy file's contracts")
    p.add_argument("hierarchy", type=Path)

    p = sub.add_parser("serve", help="run the live editing session service")
    p.add_argument("source", type=Path,
                   help="input model (.obj) or hierarchy (.json)")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--host", default="127.0.0.1")
    _add_cfg_flags(p)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, ReplayError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "simplify":
        cfg = _cfg_from_args(args)
        mesh = load_obj(args.model.read_bytes())
        h, order = build_hierarchy(mesh, cfg)
        args.out.write_bytes(save_hierarchy(h, order))
        print(f"{args.out}: {h.n_leaves} vertices, {len(order)} collapses")
        return 0

    if args.command == "extract":
        h, order = load_hierarchy(args.hierarchy.read_bytes())
        k, warning = resolve_lod(h, order, lod=args.lod,
                                 vertices=args.vertices, faces=args.faces)
        if warning:
            print(f"warning: {warning}", file=sys.stderr)
        mesh = extract_mesh(h, cut_at(h, order, k))
        args.out.write_bytes(save_obj(mesh))
        print(f"{args.out}: LOD {k}, {mesh.n_vertices} vertices, "
              f"{mesh.n_faces} faces")
        return 0

    if args.command == "apply":
        cfg = _cfg_from_args(args)
        script = EditScript.from_json(args.script.read_bytes())
        source = _load_source(args.source, script.quadric_config or cfg)
        try:
            outputs = replay_script(source, script, cfg)
        except ReplayError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        args.out_dir.mkdir(parents=True, exist_ok=True)
        for rel, data in sorted(outputs.items()):
            target = args.out_dir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            print(f"wrote {target}")
        return 0

    if args.command == "validate":
        h, order = load_hierarchy(args.hierarchy.read_bytes())
        report = validate(h, order)
        if report.ok:
            print(f"{args.hierarchy}: valid ({h.n_nodes} nodes, "
                  f"{len(order)} collapses)")
            return 0
        print(f"{args.hierarchy}: INVALID")
        for v in report.violations:
            print(f"  {v}")
        return 1

    if args.command == "serve":
        from .service import serve
        cfg = _cfg_from_args(args)
        source = _load_source(args.source, cfg)
        serve(source, host=args.host, port=args.port, cfg=cfg)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def main():
    _setup_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
