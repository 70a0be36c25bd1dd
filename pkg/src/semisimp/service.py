"""Live editing session: every manipulation exposed over a JSON message
protocol. Messages are line-delimited JSON over TCP; the same port also
accepts a standard websocket handshake for browsers. One session per
connection; commands are applied strictly in arrival order.

Request:  {"id": <int> 0, "kind": str, "payload": {...}}
Response: {"id": same, "result": {...}} or {"id": same,
           "error": {"code": str, "message": str}}
Events (server-initiated) use id 0: cut_changed, progress.
"""

from __future__ import annotations

import base64
import hashlib
import itertools
import json
import logging
import queue
import socket
import socketserver
import threading
from collections import deque
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import geom_edit, reorder, repartition
from .engine import Cancelled, build_hierarchy
from .hierarchy import Hierarchy, OrderList, cut_at, extract_mesh, \
    mapped_cut_faces, save_hierarchy, validate
from .mesh import Mesh
from .obj_io import load_obj, save_obj
from .quadric import QuadricConfig
from .script import EditScript, edit_options_payload, parse_edit_options, \
    resolve_lod

log = logging.getLogger("semisimp")

PROTOCOL_VERSION = "semisimp-session/1"

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class SessionError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class Session:
    """Protocol-independent session state and command dispatch.

    Mutating commands are atomic: precondition failures raise before any
    state changes, and long operations are computed into fresh objects that
    replace the document only on success.
    """

    def __init__(self, source: Mesh | tuple[Hierarchy, OrderList],
                 cfg: Optional[QuadricConfig] = None):
        self.cfg = cfg or QuadricConfig()
        self._install(source)
        self.greeted = False
        self._seq = itertools.count(1)

    def _install(self, source):
        if isinstance(source, Mesh):
            self.h, self.order = build_hierarchy(source, self.cfg)
        else:
            self.h, self.order = source
        self.pos = 0
        self.selection: set[int] = set()
        self.undo_stack: list[tuple] = []
        self.recorded: list[tuple[int, dict]] = []
        self.pending_patch: Optional[repartition.Patch] = None

    # ---- helpers ----

    def _cut(self):
        return cut_at(self.h, self.order, self.pos)

    def cut_payload(self) -> dict:
        cut = self._cut()
        nodes = cut.node_ids
        faces = mapped_cut_faces(self.h, cut)
        local = np.searchsorted(nodes, faces)
        sel = np.zeros(len(nodes), dtype=np.int64)
        if self.selection:
            sel_ids = np.array(sorted(self.selection), dtype=np.int64)
            idx = np.searchsorted(nodes, sel_ids)
            ok = (idx < len(nodes))
            idx = idx[ok]
            sel[idx[nodes[idx] == sel_ids[ok]]] = 1
        return {
            "lod": self.pos,
            "order_len": len(self.order),
            "nodes": [int(n) for n in nodes],
            "positions": self.h.position[nodes].tolist(),
            "faces": local.tolist(),
            "selected": sel.tolist(),
        }

    def _prune_selection(self):
        cut_set = self._cut().node_set
        self.selection &= cut_set

    def _record(self, cmd: dict) -> int:
        seq = next(self._seq)
        self.recorded.append((seq, cmd))
        return seq

    def _unrecord(self, seq: int):
        self.recorded = [(s, c) for s, c in self.recorded if s != seq]

    def _selection_arg(self, payload: dict) -> list[int]:
        nodes = payload.get("nodes")
        if nodes is None:
            nodes = sorted(self.selection)
        if not nodes:
            raise SessionError("bad_request", "no nodes given or selected")
        return [int(n) for n in nodes]

    # ---- dispatch ----

    def handle(self, msg: dict, emit: Optional[Callable[[dict], None]] = None,
               poll_cancel: Optional[Callable[[], bool]] = None) -> dict:
        """Process one message, returning the response object. ``emit``
        receives server events; ``poll_cancel`` is consulted between
        collapses during resimplification."""
        if not isinstance(msg, dict) or not isinstance(msg.get("id"), int) \
                or msg.get("id") == 0 or not isinstance(msg.get("kind"), str):
            return {"id": msg.get("id", 0) if isinstance(msg, dict) else 0,
                    "error": {"code": "bad_request",
                              "message": "need {id: int>0, kind: str}"}}
        mid = msg["id"]
        kind = msg["kind"]
        payload = msg.get("payload") or {}
        emit = emit or (lambda event: None)
        try:
            if kind == "hello":
                version = payload.get("version")
                if version != PROTOCOL_VERSION:
                    raise SessionError(
                        "version_mismatch",
                        f"server speaks {PROTOCOL_VERSION}, client sent "
                        f"{version!r}")
                self.greeted = True
                result = {"version": PROTOCOL_VERSION, "name": "semisimp"}
            elif not self.greeted:
                raise SessionError("handshake_required",
                                   "send hello before any other message")
            else:
                handler = getattr(self, f"_cmd_{kind}", None)
                if handler is None:
                    raise SessionError("unknown_kind",
                                       f"unknown message kind {kind!r}")
                result = handler(payload, emit, poll_cancel)
            return {"id": mid, "result": result or {}}
        except SessionError as exc:
            return {"id": mid, "error": {"code": exc.code,
                                         "message": exc.message}}
        except (ValueError, IndexError, KeyError, OSError) as exc:
            return {"id": mid, "error": {"code": "invalid",
                                         "message": str(exc)}}

    # ---- commands ----

    def _cmd_load_model(self, payload, emit, poll_cancel):
        if "text" in payload:
            mesh = load_obj(payload["text"])
        elif "path" in payload:
            mesh = load_obj(Path(payload["path"]).read_bytes())
        else:
            raise SessionError("bad_request", "load_model needs text or path")
        self._install(mesh)
        emit(self._cut_changed())
        return {"vertices": mesh.n_vertices, "faces": mesh.n_faces,
                "order_len": len(self.order)}

    def _cmd_get_cut(self, payload, emit, poll_cancel):
        return self.cut_payload()

    def _cut_changed(self) -> dict:
        return {"id": 0, "kind": "cut_changed", "payload": self.cut_payload()}

    def _cmd_set_lod(self, payload, emit, poll_cancel):
        k = int(payload["k"])
        if not 0 <= k <= len(self.order):
            raise SessionError("bad_request",
                               f"LOD position {k} out of range "
                               f"[0, {len(self.order)}]")
        self.pos = k
        self._prune_selection()
        self._record({"op": "set_lod", "k": k})
        emit(self._cut_changed())
        return {"lod": k}

    def _cmd_select(self, payload, emit, poll_cancel):
        mode = payload.get("mode", "set")
        nodes = {int(n) for n in payload.get("nodes", [])}
        cut_set = self._cut().node_set
        bad = nodes - cut_set
        if bad:
            raise SessionError("bad_request",
                               f"nodes not in current cut: {sorted(bad)}")
        if mode == "set":
            self.selection = nodes
        elif mode == "add":
            self.selection |= nodes
        elif mode == "remove":
            self.selection -= nodes
        elif mode == "clear":
            self.selection = set()
        else:
            raise SessionError("bad_request", f"unknown select mode {mode!r}")
        return {"selected": sorted(self.selection)}

    def _reorder_command(self, op: str, new_order: OrderList, new_pos: int,
                         cmd: dict, emit) -> dict:
        old_order, old_pos = self.order, self.pos
        seq = self._record(cmd)
        self.undo_stack.append(("order", old_order, old_pos, seq))
        self.order, self.pos = new_order, new_pos
        self._prune_selection()
        emit(self._cut_changed())
        return {"lod": self.pos, "order_len": len(self.order)}

    def _cmd_move_element(self, payload, emit, poll_cancel):
        i, k = int(payload["from"]), int(payload["to"])
        new_order = reorder.move_element(self.order, self.h, i, k)
        return self._reorder_command(
            "move_element", new_order, self.pos,
            {"op": "move_element", "from": i, "to": k}, emit)

    def _cmd_local_simplify(self, payload, emit, poll_cancel):
        nodes = self._selection_arg(payload)
        new_order, new_pos = reorder.local_simplify(self.h, self.order,
                                                    self.pos, nodes)
        return self._reorder_command(
            "local_simplify", new_order, new_pos,
            {"op": "local_simplify", "nodes": nodes}, emit)

    def _cmd_local_refine(self, payload, emit, poll_cancel):
        nodes = self._selection_arg(payload)
        new_order, new_pos = reorder.local_refine(self.h, self.order,
                                                  self.pos, nodes)
        return self._reorder_command(
            "local_refine", new_order, new_pos,
            {"op": "local_refine", "nodes": nodes}, emit)

    def _cmd_preserve_feature(self, payload, emit, poll_cancel):
        nodes = self._selection_arg(payload)
        src = int(payload.get("from", self.pos))
        dst = int(payload["to"])
        new_order = reorder.preserve_feature(self.h, self.order, src, dst,
                                             nodes)
        return self._reorder_command(
            "preserve_feature", new_order, dst,
            {"op": "preserve_feature", "from": src, "to": dst,
             "nodes": nodes}, emit)

    def _cmd_eliminate_feature(self, payload, emit, poll_cancel):
        nodes = self._selection_arg(payload)
        src = int(payload.get("from", self.pos))
        dst = int(payload["to"])
        new_order = reorder.eliminate_feature(self.h, self.order, src, dst,
                                              nodes)
        return self._reorder_command(
            "eliminate_feature", new_order, dst,
            {"op": "eliminate_feature", "from": src, "to": dst,
             "nodes": nodes}, emit)

    def _cmd_move_vertex(self, payload, emit, poll_cancel):
        node = int(payload["node"])
        delta = np.asarray(payload["delta"], dtype=float).reshape(3)
        opts = parse_edit_options(payload.get("options", {}))
        commit = bool(payload.get("commit", False))
        if not commit:
            scratch = self.h.clone()
            rec = geom_edit.apply_vertex_edit(scratch, self.order, self.pos,
                                              node, delta, opts, self.cfg)
            cut_set = self._cut().node_set
            changed = [[n, *scratch.position[n].tolist()]
                       for n in rec.moved_nodes() if n in cut_set]
            return {"preview": True, "positions": changed}
        rec = geom_edit.apply_vertex_edit(self.h, self.order, self.pos,
                                          node, delta, opts, self.cfg)
        cmd = {"op": "vertex_edit", "node": node, "delta": delta.tolist(),
               "options": edit_options_payload(opts)}
        seq = self._record(cmd)
        self.undo_stack.append(("vertex_edit", rec, seq))
        emit(self._cut_changed())
        return {"moved": len(rec.old_positions)}

    def _cmd_define_patch(self, payload, emit, poll_cancel):
        nodes = self._selection_arg(payload)
        patch = repartition.define_patch(self.h, self.order, self.pos, nodes)
        self.pending_patch = patch
        self._record({"op": "define_patch", "nodes": nodes})
        return {"nodes": sorted(patch.nodes),
                "boundary_edges": [list(e) for e in
                                   sorted(patch.boundary_edges)]}

    def _cmd_resimplify(self, payload, emit, poll_cancel):
        if self.pending_patch is None:
            raise SessionError("bad_request",
                               "define_patch before resimplify")
        old = (self.h, self.order, self.pos)

        def progress(done, total):
            if done == 1 or done % 64 == 0 or done == total:
                emit({"id": 0, "kind": "progress",
                      "payload": {"done": done, "total": total}})

        try:
            new_h, new_order = repartition.resimplify_segmented(
                self.h, self.order, self.pos, self.pending_patch, self.cfg,
                progress=progress, cancel=poll_cancel)
        except Cancelled:
            raise SessionError("cancelled",
                               "resimplification cancelled; "
                               "document unchanged")
        seq = self._record({"op": "resimplify"})
        self.undo_stack.append(("resimplify", *old, seq))
        self.h, self.order = new_h, new_order
        self.pos = min(self.pos, len(self.order))
        self.pending_patch = None
        self._prune_selection()
        emit(self._cut_changed())
        return {"order_len": len(self.order)}

    def _cmd_undo(self, payload, emit, poll_cancel):
        if not self.undo_stack:
            raise SessionError("bad_request", "nothing to undo")
        entry = self.undo_stack.pop()
        kind = entry[0]
        if kind == "vertex_edit":
            _, rec, seq = entry
            geom_edit.undo_vertex_edit(self.h, rec)
        elif kind == "order":
            _, old_order, old_pos, seq = entry
            self.order, self.pos = old_order, old_pos
        elif kind == "resimplify":
            _, old_h, old_order, old_pos, seq = entry
            self.h, self.order, self.pos = old_h, old_order, old_pos
        else:  # pragma: no cover
            raise AssertionError(kind)
        self._unrecord(seq)
        self._prune_selection()
        emit(self._cut_changed())
        return {"undone": kind}

    def _cmd_save_hierarchy(self, payload, emit, poll_cancel):
        data = save_hierarchy(self.h, self.order)
        path = payload.get("path")
        if path:
            Path(path).write_bytes(data)
            self._record({"op": "save_hierarchy", "path": path})
            return {"path": path, "bytes": len(data)}
        return {"data": data.decode("utf-8"), "bytes": len(data)}

    def _cmd_save_lod(self, payload, emit, poll_cancel):
        k, warning = resolve_lod(self.h, self.order,
                                 lod=payload.get("lod"),
                                 vertices=payload.get("vertices"),
                                 faces=payload.get("faces"))
        mesh = extract_mesh(self.h, cut_at(self.h, self.order, k))
        data = save_obj(mesh)
        path = payload.get("path")
        result = {"lod": k, "vertices": mesh.n_vertices,
                  "faces": mesh.n_faces}
        if warning:
            result["warning"] = warning
        if path:
            Path(path).write_bytes(data)
            cmd = {"op": "save_lod", "path": path, "lod": k}
            self._record(cmd)
            result["path"] = path
        else:
            result["data"] = data.decode("utf-8")
        return result

    def _cmd_record_script(self, payload, emit, poll_cancel):
        script = EditScript(commands=[c for _, c in self.recorded],
                            quadric_config=self.cfg)
        return {"script": json.loads(script.to_json().decode("utf-8"))}

    def _cmd_validate(self, payload, emit, poll_cancel):
        report = validate(self.h, self.order)
        return {"ok": report.ok,
                "violations": [str(v) for v in report.violations]}


# ---- transports ----


class _LineTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.rfile = sock.makefile("rb")
        self.lock = threading.Lock()

    def recv(self) -> Optional[dict]:
        line = self.rfile.readline()
        if not line:
            return None
        line = line.strip()
        if not line:
            return {}
        try:
            return json.loads(line.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            return {"_malformed": True}

    def send(self, obj: dict):
        data = json.dumps(obj, separators=(",", ":")).encode("utf-8") + b"\n"
        with self.lock:
            self.sock.sendall(data)


class _WebSocketTransport:
    """Minimal RFC 6455 server endpoint: text frames carry one JSON message
    each; handles fragmentation, ping/pong and close."""

    MAX_MESSAGE = 64 * 1024 * 1024

    def __init__(self, sock: socket.socket, head: bytes):
        self.sock = sock
        self.lock = threading.Lock()
        self._handshake(head)

    def _read_until(self, buf: bytes, marker: bytes) -> bytes:
        while marker not in buf:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("peer closed during handshake")
            buf += chunk
        return buf

    def _handshake(self, head: bytes):
        raw = self._read_until(head, b"\r\n\r\n")
        headers = {}
        for line in raw.split(b"\r\n")[1:]:
            if b":" in line:
                k, v = line.split(b":", 1)
                headers[k.strip().lower().decode()] = v.strip().decode()
        key = headers.get("sec-websocket-key")
        if key is None:
            self.sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            raise ConnectionError("not a websocket handshake")
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        self.sock.sendall(
            ("HTTP/1.1 101 Switching Protocols\r\n"
             "Upgrade: websocket\r\n"
             "Connection: Upgrade\r\n"
             f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())

    def _recv_exact(self, n: int) -> Optional[bytes]:
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                return None
            buf += chunk
        return buf

    def _read_frame(self):
        hdr = self._recv_exact(2)
        if hdr is None:
            return None
        fin = bool(hdr[0] & 0x80)
        opcode = hdr[0] & 0x0F
        masked = bool(hdr[1] & 0x80)
        length = hdr[1] & 0x7F
        if length == 126:
            ext = self._recv_exact(2)
            if ext is None:
                return None
            length = int.from_bytes(ext, "big")
        elif length == 127:
            ext = self._recv_exact(8)
            if ext is None:
                return None
            length = int.from_bytes(ext, "big")
        if length > self.MAX_MESSAGE:
            raise ConnectionError("websocket frame too large")
        mask = self._recv_exact(4) if masked else None
        payload = self._recv_exact(length) if length else b""
        if payload is None:
            return None
        if mask:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return fin, opcode, payload

    def recv(self) -> Optional[dict]:
        message = b""
        while True:
            frame = self._read_frame()
            if frame is None:
                return None
            fin, opcode, payload = frame
            if opcode == 0x8:  # close
                self._send_frame(0x8, b"")
                return None
            if opcode == 0x9:  # ping
                self._send_frame(0xA, payload)
                continue
            if opcode == 0xA:  # pong
                continue
            if opcode in (0x1, 0x2, 0x0):
                message += payload
                if len(message) > self.MAX_MESSAGE:
                    raise ConnectionError("websocket message too large")
                if fin:
                    try:
                        return json.loads(message.decode("utf-8"))
                    except (json.JSONDecodeError, UnicodeDecodeError):
                        return {"_malformed": True}
                continue
            log.warning("websocket: ignoring opcode %d", opcode)

    def _send_frame(self, opcode: int, payload: bytes):
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < (1 << 16):
            header += bytes([126]) + n.to_bytes(2, "big")
        else:
            header += bytes([127]) + n.to_bytes(8, "big")
        with self.lock:
            self.sock.sendall(header + payload)

    def send(self, obj: dict):
        self._send_frame(0x1, json.dumps(obj, separators=(",", ":"))
                         .encode("utf-8"))


def _pump(session: Session, transport):
    """Strictly serialized message loop with out-of-band cancel support:
    while a resimplify runs, freshly arrived messages are inspected; a
    `cancel` aborts it, everything else is processed afterwards."""
    inbox: queue.Queue = queue.Queue()
    backlog: deque = deque()

    def reader():
        try:
            while True:
                msg = transport.recv()
                inbox.put(msg)
                if msg is None:
                    return
        except (ConnectionError, OSError):
            inbox.put(None)

    threading.Thread(target=reader, daemon=True).start()
    cancel_msg = [None]

    def poll_cancel() -> bool:
        while True:
            try:
                m = inbox.get_nowait()
            except queue.Empty:
                return False
            if m is None:
                inbox.put(None)
                return True  # connection gone: stop working
            if isinstance(m, dict) and m.get("kind") == "cancel" \
                    and cancel_msg[0] is None:
                cancel_msg[0] = m
                return True
            backlog.append(m)

    while True:
        if backlog:
            msg = backlog.popleft()
        else:
            msg = inbox.get()
        if msg is None:
            return
        if isinstance(msg, dict) and msg.get("_malformed"):
            transport.send({"id": 0, "error": {
                "code": "bad_request", "message": "malformed JSON message"}})
            continue
        if isinstance(msg, dict) and msg.get("kind") == "cancel":
            transport.send({"id": msg.get("id", 0),
                            "result": {"cancelled": False}})
            continue
        response = session.handle(msg, emit=transport.send,
                                  poll_cancel=poll_cancel)
        transport.send(response)
        if cancel_msg[0] is not None:
            transport.send({"id": cancel_msg[0].get("id", 0),
                            "result": {"cancelled": True}})
            cancel_msg[0] = None


class SessionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, source, cfg: Optional[QuadricConfig] = None):
        self.source = source
        self.cfg = cfg or QuadricConfig()
        super().__init__(address, _Handler)

    def make_session(self) -> Session:
        src = self.source
        if isinstance(src, tuple):
            h, order = src
            src = (h.clone(), list(order))
        return Session(src, self.cfg)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        sock: socket.socket = self.request
        try:
            head = sock.recv(4, socket.MSG_PEEK)
            if head.startswith(b"GET"):
                transport = _WebSocketTransport(sock, b"")
            else:
                transport = _LineTransport(sock)
            session = self.server.make_session()
            _pump(session, transport)
        except (ConnectionError, OSError) as exc:
            log.info("connection ended: %s", exc)


def serve(source: Mesh | tuple[Hierarchy, OrderList], host: str = "127.0.0.1",
          port: int = 8077, cfg: Optional[QuadricConfig] = None):
    """Run the session service until interrupted."""
    server = SessionServer((host, port), source, cfg)
    bound_host, bound_port = server.server_address
    log.info("session service listening on %s:%d", bound_host, bound_port)
    print(f"semisimp session service on {bound_host}:{bound_port} "
          f"(line-delimited JSON or websocket)", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
