"""Wavefront OBJ reader/writer.

Supports v/vt/vn/f records with v, v/t, v/t/n and v//n corner forms and
negative (relative) indices. Polygons with more than three corners are
fan-triangulated. Corner attributes are welded per vertex: the first
texcoord/normal combination seen for a vertex sticks to it, later
conflicting combinations duplicate the vertex.
"""

from __future__ import annotations

import logging

import numpy as np

from .mesh import Mesh

log = logging.getLogger("semisimp")


class ObjParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _resolve_index(raw: int, count: int, what: str, line_no: int) -> int:
    if raw > 0:
        idx = raw - 1
    elif raw < 0:
        idx = count + raw
    else:
        raise ObjParseError(line_no, f"{what} index 0 is invalid")
    if not 0 <= idx < count:
        raise ObjParseError(line_no, f"{what} index {raw} out of range")
    return idx


def load_obj(data: bytes | str) -> Mesh:
    """Parse OBJ text into a Mesh."""
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data

    positions: list[list[float]] = []
    texcoords: list[list[float]] = []
    normals: list[list[float]] = []
    corners: list[list[tuple[int, int, int]]] = []  # per face: (v, t, n)
    unknown_seen: set[str] = set()

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        tag = tokens[0]
        try:
            if tag == "v":
                if len(tokens) < 4:
                    raise ObjParseError(line_no, "v needs 3 coordinates")
                positions.append([float(t) for t in tokens[1:4]])
            elif tag == "vt":
                if len(tokens) < 3:
                    raise ObjParseError(line_no, "vt needs 2 coordinates")
                texcoords.append([float(t) for t in tokens[1:3]])
            elif tag == "vn":
                if len(tokens) < 4:
                    raise ObjParseError(line_no, "vn needs 3 coordinates")
                normals.append([float(t) for t in tokens[1:4]])
            elif tag == "f":
                if len(tokens) < 4:
                    raise ObjParseError(line_no, "f needs at least 3 corners")
                face = []
                for tok in tokens[1:]:
                    parts = tok.split("/")
                    if len(parts) > 3 or not parts[0]:
                        raise ObjParseError(line_no, f"bad corner {tok!r}")
                    vi = _resolve_index(int(parts[0]), len(positions),
                                        "vertex", line_no)
                    ti = ni = -1
                    if len(parts) >= 2 and parts[1]:
                        ti = _resolve_index(int(parts[1]), len(texcoords),
                                            "texcoord", line_no)
                    if len(parts) == 3 and parts[2]:
                        ni = _resolve_index(int(parts[2]), len(normals),
                                            "normal", line_no)
                    face.append((vi, ti, ni))
                corners.append(face)
            else:
                if tag not in unknown_seen:
                    unknown_seen.add(tag)
                    log.warning("OBJ: ignoring unknown record type %r", tag)
        except ObjParseError:
            raise
        except ValueError as exc:
            raise ObjParseError(line_no, str(exc)) from exc

    n_base = len(positions)
    out_positions = [np.array(p) for p in positions]
    combo: list[tuple[int, int] | None] = [None] * n_base
    out_uv: list[tuple[int, int] | None] = []  # parallel attr slots, by combo
    dup_map: dict[tuple[int, int, int], int] = {}
    vert_attr: list[tuple[int, int]] = [(-1, -1)] * n_base

    def corner_vertex(vi: int, ti: int, ni: int) -> int:
        c = (ti, ni)
        if combo[vi] is None:
            combo[vi] = c
            vert_attr[vi] = c
            return vi
        if combo[vi] == c:
            return vi
        key = (vi, ti, ni)
        dup = dup_map.get(key)
        if dup is None:
            dup = len(out_positions)
            out_positions.append(out_positions[vi])
            vert_attr.append(c)
            dup_map[key] = dup
        return dup

    faces: list[tuple[int, int, int]] = []
    for face in corners:
        resolved = [corner_vertex(*corner) for corner in face]
        for i in range(1, len(resolved) - 1):
            tri = (resolved[0], resolved[i], resolved[i + 1])
            faces.append(tri)

    nv = len(out_positions)
    has_uv = any(t >= 0 for t, _ in vert_attr)
    has_n = any(n >= 0 for _, n in vert_attr)
    uv_arr = None
    n_arr = None
    if has_uv:
        uv_arr = np.zeros((nv, 2))
        for i, (t, _) in enumerate(vert_attr):
            if t >= 0:
                uv_arr[i] = texcoords[t]
    if has_n:
        n_arr = np.zeros((nv, 3))
        n_arr[:, 2] = 1.0
        dropped = 0
        for i, (_, n) in enumerate(vert_attr):
            if n >= 0:
                vec = np.array(normals[n], dtype=float)
                ln = np.linalg.norm(vec)
                if ln == 0.0:
                    dropped += 1
                else:
                    n_arr[i] = vec / ln
        if dropped:
            log.warning("OBJ: %d zero-length normals replaced by +z", dropped)

    return Mesh(
        positions=np.array(out_positions, dtype=np.float64).reshape(nv, 3),
        faces=np.array(faces, dtype=np.int64).reshape(len(faces), 3),
        texcoords=uv_arr,
        normals=n_arr,
    )


def save_obj(mesh: Mesh) -> bytes:
    """Serialize a Mesh as OBJ text; round-trips through load_obj."""
    lines: list[str] = []
    for p in mesh.positions:
        lines.append(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}")
    if mesh.texcoords is not None:
        for t in mesh.texcoords:
            lines.append(f"vt {float(t[0])!r} {float(t[1])!r}")
    if mesh.normals is not None:
        for n in mesh.normals:
            lines.append(f"vn {float(n[0])!r} {float(n[1])!r} "
                         f"{float(n[2])!r}")
    has_uv = mesh.texcoords is not None
    has_n = mesh.normals is not None
    for f in mesh.faces:
        parts = []
        for v in f:
            i = int(v) + 1
            if has_uv and has_n:
                parts.append(f"{i}/{i}/{i}")
            elif has_uv:
                parts.append(f"{i}/{i}")
            elif has_n:
                parts.append(f"{i}//{i}")
            else:
                parts.append(f"{i}")
        lines.append("f " + " ".join(parts))
    return ("\n".join(lines) + "\n").encode("utf-8")
