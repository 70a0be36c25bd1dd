import base64
import hashlib
import json
import socket
import threading
import time

import pytest

from semisimp.quadric import QuadricConfig
from semisimp.script import EditScript, replay_script
from semisimp.service import PROTOCOL_VERSION, Session, SessionServer

from meshgen import wavy_grid


@pytest.fixture()
def mesh():
    return wavy_grid(9, 9, amplitude=0.4)


@pytest.fixture()
def session(mesh):
    s = Session(mesh, QuadricConfig())
    resp = s.handle(_msg(1, "hello", {"version": PROTOCOL_VERSION}))
    assert "result" in resp
    return s


_next_id = [100]


def _msg(mid, kind, payload=None):
    return {"id": mid, "kind": kind, "payload": payload or {}}


def ask(session, kind, payload=None, events=None):
    _next_id[0] += 1
    emit = events.append if events is not None else None
    resp = session.handle(_msg(_next_id[0], kind, payload), emit=emit)
    assert resp["id"] == _next_id[0]
    return resp


def ok(session, kind, payload=None, events=None):
    resp = ask(session, kind, payload, events)
    assert "result" in resp, resp.get("error")
    return resp["result"]


class TestHandshake:
    def test_hello_required_first(self, mesh):
        s = Session(mesh)
        resp = s.handle(_msg(1, "get_cut"))
        assert resp["error"]["code"] == "handshake_required"

    def test_version_mismatch(self, mesh):
        s = Session(mesh)
        resp = s.handle(_msg(1, "hello", {"version": "other/0"}))
        assert resp["error"]["code"] == "version_mismatch"

    def test_malformed_id(self, session):
        resp = session.handle({"id": 0, "kind": "get_cut"})
        assert "error" in resp


class TestCommands:
    def test_set_lod_zero_returns_full_model(self, session, mesh):
        ok(session, "set_lod", {"k": 0})
        cut = ok(session, "get_cut")
        assert len(cut["nodes"]) == mesh.n_vertices
        assert cut["order_len"] > 0

    def test_set_lod_changes_count(self, session, mesh):
        n = ok(session, "get_cut")["order_len"]
        ok(session, "set_lod", {"k": n})
        cut = ok(session, "get_cut")
        assert len(cut["nodes"]) == mesh.n_vertices - n

    def test_unknown_kind(self, session):
        resp = ask(session, "walk_the_dog")
        assert resp["error"]["code"] == "unknown_kind"

    def test_failed_command_leaves_cut_unchanged(self, session):
        before = ok(session, "get_cut")
        resp = ask(session, "set_lod", {"k": 10 ** 9})
        assert "error" in resp
        assert ok(session, "get_cut") == before

    def test_select_modes(self, session):
        cut = ok(session, "get_cut")
        a, b = cut["nodes"][0], cut["nodes"][1]
        assert ok(session, "select", {"nodes": [a]})["selected"] == [a]
        got = ok(session, "select", {"nodes": [b], "mode": "add"})["selected"]
        assert got == sorted([a, b])
        got = ok(session, "select", {"nodes": [a], "mode": "remove"})
        assert got["selected"] == [b]
        assert ok(session, "select", {"mode": "clear"})["selected"] == []

    def test_select_outside_cut_rejected(self, session):
        n = ok(session, "get_cut")["order_len"]
        ok(session, "set_lod", {"k": n})
        resp = ask(session, "select", {"nodes": [0]})
        assert "error" in resp

    def test_local_simplify_via_selection(self, session):
        n = ok(session, "get_cut")["order_len"]
        ok(session, "set_lod", {"k": 10})
        cut = ok(session, "get_cut")
        target = cut["nodes"][0]
        ok(session, "select", {"nodes": [target]})
        events = []
        result = ok(session, "local_simplify", events=events)
        assert any(e["kind"] == "cut_changed" for e in events)
        assert result["lod"] >= 10

    def test_move_vertex_preview_does_not_mutate(self, session):
        ok(session, "set_lod", {"k": 30})
        before = ok(session, "get_cut")
        node = before["nodes"][0]
        res = ok(session, "move_vertex",
                 {"node": node, "delta": [0, 0, 0.5],
                  "options": {"radius": 1}})
        assert res["preview"] and res["positions"]
        assert ok(session, "get_cut") == before

    def test_move_vertex_commit_and_undo_bit_exact(self, session):
        ok(session, "set_lod", {"k": 30})
        before = ok(session, "get_cut")
        node = before["nodes"][0]
        ok(session, "move_vertex",
           {"node": node, "delta": [0.1, 0, 0.5], "commit": True,
            "options": {"radius": 2, "descendants": "direct",
                        "ancestors": True}})
        after = ok(session, "get_cut")
        assert after != before
        assert ok(session, "undo")["undone"] == "vertex_edit"
        assert ok(session, "get_cut") == before

    def test_undo_reorder_and_resimplify(self, session):
        ok(session, "set_lod", {"k": 12})
        before = ok(session, "get_cut")
        node = before["nodes"][0]
        ok(session, "local_simplify", {"nodes": [node]})
        ok(session, "undo")
        assert ok(session, "get_cut") == before
        ok(session, "define_patch", {"nodes": [node]})
        events = []
        ok(session, "resimplify", events=events)
        assert any(e["kind"] == "progress" for e in events)
        ok(session, "undo")
        assert ok(session, "get_cut") == before

    def test_resimplify_without_patch(self, session):
        resp = ask(session, "resimplify")
        assert resp["error"]["code"] == "bad_request"

    def test_save_lod_inline(self, session):
        res = ok(session, "save_lod", {"vertices": 40})
        assert res["vertices"] == 40
        assert "data" in res

    def test_validate_command(self, session):
        assert ok(session, "validate")["ok"]

    def test_load_model_replaces_document(self, session):
        from semisimp import save_obj
        from meshgen import grid_mesh
        small = grid_mesh(3, 3)
        events = []
        res = ok(session, "load_model",
                 {"text": save_obj(small).decode()}, events=events)
        assert res["vertices"] == 9
        assert any(e["kind"] == "cut_changed" for e in events)
        assert len(ok(session, "get_cut")["nodes"]) == 9
        assert ok(session, "record_script")["script"]["commands"] == []


class TestDeskScale:
    def test_get_cut_latency_and_100_node_position(self, desk_scale):
        mesh, h, order, _ = desk_scale
        session = Session((h.clone(), list(order)), QuadricConfig())
        ok(session, "hello", {"version": PROTOCOL_VERSION})
        k100 = mesh.n_vertices - 100
        ok(session, "set_lod", {"k": k100})
        assert len(ok(session, "get_cut")["nodes"]) == 100
        ok(session, "set_lod", {"k": 0})
        t0 = time.monotonic()
        full = ok(session, "get_cut")
        elapsed = time.monotonic() - t0
        assert len(full["nodes"]) == mesh.n_vertices
        assert elapsed < 1.0, f"get_cut took {elapsed:.2f}s"


class TestTranscript:
    def test_record_and_replay_reproduce_save(self, mesh, tmp_path):
        session = Session(mesh, QuadricConfig())
        ok(session, "hello", {"version": PROTOCOL_VERSION})
        ok(session, "set_lod", {"k": 25})
        cut = ok(session, "get_cut")
        node = cut["nodes"][2]
        ok(session, "move_vertex",
           {"node": node, "delta": [0, 0.1, 0.3], "commit": True,
            "options": {"radius": 1, "descendants": "attenuated"}})
        ok(session, "define_patch", {"nodes": [node]})
        ok(session, "resimplify")
        saved = tmp_path / "session.json"
        ok(session, "save_hierarchy", {"path": str(saved)})
        script_doc = ok(session, "record_script")["script"]
        script = EditScript.from_json(json.dumps(script_doc))
        outputs = replay_script(mesh, script)
        assert outputs[str(saved)] == saved.read_bytes()

    def test_undone_commands_drop_from_script(self, session):
        ok(session, "set_lod", {"k": 20})
        node = ok(session, "get_cut")["nodes"][0]
        ok(session, "move_vertex",
           {"node": node, "delta": [0, 0, 1.0], "commit": True})
        ok(session, "undo")
        doc = ok(session, "record_script")["script"]
        ops = [c["op"] for c in doc["commands"]]
        assert "vertex_edit" not in ops


def _recv_lines(sock_file, n):
    out = []
    for _ in range(n):
        line = sock_file.readline()
        if not line:
            break
        out.append(json.loads(line))
    return out


class TestTcpServer:
    @pytest.fixture()
    def server(self, mesh):
        srv = SessionServer(("127.0.0.1", 0), mesh, QuadricConfig())
        t = threading.Thread(target=srv.serve_forever, daemon=True)
        t.start()
        yield srv
        srv.shutdown()
        srv.server_close()

    def test_ldjson_round_trip(self, server, mesh):
        host, port = server.server_address
        with socket.create_connection((host, port), timeout=10) as sock:
            f = sock.makefile("rb")

            def send(obj):
                sock.sendall(json.dumps(obj).encode() + b"\n")

            send(_msg(1, "hello", {"version": PROTOCOL_VERSION}))
            resp = json.loads(f.readline())
            assert resp["result"]["version"] == PROTOCOL_VERSION
            send(_msg(2, "get_cut"))
            resp = json.loads(f.readline())
            assert len(resp["result"]["nodes"]) == mesh.n_vertices
            # cancel with nothing running answers immediately
            send(_msg(3, "cancel"))
            resp = json.loads(f.readline())
            assert resp["result"] == {"cancelled": False}

    def test_websocket_round_trip(self, server, mesh):
        host, port = server.server_address
        with socket.create_connection((host, port), timeout=10) as sock:
            key = base64.b64encode(b"0123456789abcdef").decode()
            sock.sendall((f"GET / HTTP/1.1\r\nHost: {host}\r\n"
                          "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                          f"Sec-WebSocket-Key: {key}\r\n"
                          "Sec-WebSocket-Version: 13\r\n\r\n").encode())
            buf = b""
            while b"\r\n\r\n" not in buf:
                buf += sock.recv(4096)
            head, rest = buf.split(b"\r\n\r\n", 1)
            assert b"101" in head.split(b"\r\n")[0]
            want = base64.b64encode(hashlib.sha1(
                (key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11").encode())
                .digest())
            assert want in head

            def send_frame(payload: bytes):
                mask = b"\x01\x02\x03\x04"
                masked = bytes(b ^ mask[i % 4]
                               for i, b in enumerate(payload))
                n = len(payload)
                assert n < 126
                sock.sendall(bytes([0x81, 0x80 | n]) + mask + masked)

            def read_frame(buf):
                while len(buf) < 2:
                    buf += sock.recv(4096)
                ln = buf[1] & 0x7F
                off = 2
                if ln == 126:
                    while len(buf) < 4:
                        buf += sock.recv(4096)
                    ln = int.from_bytes(buf[2:4], "big")
                    off = 4
                while len(buf) < off + ln:
                    buf += sock.recv(4096)
                return buf[off:off + ln], buf[off + ln:]

            send_frame(json.dumps(
                _msg(1, "hello", {"version": PROTOCOL_VERSION})).encode())
            payload, rest = read_frame(rest)
            assert json.loads(payload)["result"]["version"] \
                == PROTOCOL_VERSION
            send_frame(json.dumps(_msg(2, "get_cut")).encode())
            payload, rest = read_frame(rest)
            assert len(json.loads(payload)["result"]["nodes"]) \
                == mesh.n_vertices
