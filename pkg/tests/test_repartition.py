import numpy as np
import pytest

from semisimp import QuadricConfig, build_hierarchy, cut_at, define_patch, \
    extract_mesh, resimplify_segmented, validate
from semisimp.engine import init_state_from_cut, run_to_exhaustion
from semisimp.geom_edit import _CutMesh
from semisimp.repartition import PatchError

from meshgen import tetrahedron


def pick_blob(h, order, pos, size):
    """A connected selection grown from the lowest cut node id."""
    cut = cut_at(h, order, pos)
    cm = _CutMesh(h, cut)
    start = int(cut.node_ids[0])
    blob = {start}
    frontier = [start]
    while frontier and len(blob) < size:
        n = frontier.pop(0)
        for w in sorted(cm.nbrs[n]):
            if w not in blob:
                blob.add(w)
                frontier.append(w)
                if len(blob) >= size:
                    break
    return blob, cm


class TestDefinePatch:
    def test_single_node(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        pos = 20
        cut = cut_at(h, order, pos)
        n = int(cut.node_ids[3])
        cm = _CutMesh(h, cut)
        patch = define_patch(h, order, pos, [n])
        assert patch.nodes == frozenset([n])
        want = {(n, w) if n < w else (w, n) for w in cm.nbrs[n]}
        assert set(patch.boundary_edges) == want

    def test_blob_patch(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        pos = 15
        blob, cm = pick_blob(h, order, pos, 6)
        patch = define_patch(h, order, pos, blob)
        for (a, b) in patch.boundary_edges:
            assert (a in blob) != (b in blob)

    def test_disconnected_rejected(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        pos = 10
        cut = cut_at(h, order, pos)
        cm = _CutMesh(h, cut)
        a = int(cut.node_ids[0])
        b = next(int(n) for n in cut.node_ids
                 if int(n) != a and int(n) not in cm.nbrs[a])
        with pytest.raises(PatchError, match="components"):
            define_patch(h, order, pos, [a, b])

    def test_empty_rejected(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        with pytest.raises(PatchError, match="empty"):
            define_patch(h, order, 5, [])

    def test_outside_cut_rejected(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        cut = cut_at(h, order, len(order))
        missing = next(i for i in range(h.n_leaves) if i not in cut)
        with pytest.raises(PatchError):
            define_patch(h, order, len(order), [missing])


@pytest.fixture(scope="module")
def setup(big_hierarchy):
    mesh, h, order = big_hierarchy
    pos = 250
    blob, _ = pick_blob(h, order, pos, 12)
    patch = define_patch(h, order, pos, blob)
    trace = []
    new_h, new_order = resimplify_segmented(
        h, order, pos, patch, QuadricConfig(),
        on_collapse=lambda phase, nid, e: trace.append((phase, nid, e)))
    return mesh, h, order, pos, patch, new_h, new_order, trace


class TestResimplify:
    def test_output_validates(self, setup):
        _, _, _, _, _, new_h, new_order, _ = setup
        assert validate(new_h, new_order).ok

    def test_prefix_preserved_verbatim(self, setup):
        _, h, order, pos, _, new_h, new_order, _ = setup
        assert new_order[:pos] == order[:pos]
        kept = list(range(h.n_leaves)) + order[:pos]
        for n in kept:
            assert new_h.in_use[n]
            np.testing.assert_array_equal(new_h.position[n], h.position[n])
            assert new_h.error[n] == h.error[n]
            if not h.is_leaf(n):
                np.testing.assert_array_equal(new_h.children[n],
                                              h.children[n])

    def test_no_cross_boundary_collapse_in_segmented_phase(self, setup):
        _, _, _, _, patch, new_h, _, trace = setup
        side = {}
        for n in patch.nodes:
            side[n] = 1
        for phase, nid, (u, v) in trace:
            su = side.get(u, 0)
            sv = side.get(v, 0)
            if phase == "segmented":
                assert su == sv, f"cross-boundary collapse {(u, v)}"
            side[nid] = su if su == sv else 2

    def test_patch_reduced_to_single_subtree(self, setup):
        _, _, _, _, patch, new_h, new_order, trace = setup
        seg_patch_nodes = [nid for phase, nid, (u, v) in trace
                           if phase == "segmented"]
        # the last patch-side collapse of the segmented phase is the root
        side = {n: 1 for n in patch.nodes}
        patch_root = None
        for phase, nid, (u, v) in trace:
            if phase == "segmented" and side.get(u, 0) == 1:
                side[nid] = 1
                patch_root = nid
        assert patch_root is not None
        for n in patch.nodes:
            chain = [n] + new_h.ancestors(n)
            assert patch_root in chain

    def test_cut_unchanged_at_entry_position(self, setup):
        _, h, order, pos, _, new_h, new_order, _ = setup
        old_cut = cut_at(h, order, pos)
        new_cut = cut_at(new_h, new_order, pos)
        assert np.array_equal(old_cut.node_ids, new_cut.node_ids)
        old_mesh = extract_mesh(h, old_cut)
        new_mesh = extract_mesh(new_h, new_cut)
        np.testing.assert_array_equal(old_mesh.positions, new_mesh.positions)
        np.testing.assert_array_equal(old_mesh.faces, new_mesh.faces)

    def test_single_node_patch_equals_plain_resimplify(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        pos = 20
        cut = cut_at(h, order, pos)
        n = int(cut.node_ids[0])
        patch = define_patch(h, order, pos, [n])
        h1, o1 = resimplify_segmented(h, order, pos, patch, QuadricConfig())
        state = init_state_from_cut(h, order, pos, QuadricConfig())
        run_to_exhaustion(state)
        h2, o2 = state.h, state.order
        assert o1[20:] and len(o1) == len(o2)
        pairs1 = [tuple(h1.children[n]) for n in o1]
        pairs2 = [tuple(h2.children[n]) for n in o2]
        assert pairs1 == pairs2
        ids1 = h1.node_ids()
        np.testing.assert_array_equal(h1.position[ids1],
                                      h2.position[h2.node_ids()])

    def test_stuck_patch_reports_size(self):
        tetra = tetrahedron()
        h, order = build_hierarchy(tetra)
        patch = define_patch(h, order, 0, [0, 1])
        with pytest.raises(PatchError, match="stuck at 2"):
            resimplify_segmented(h, order, 0, patch)

    def test_progress_and_cancel(self, bumpy_hierarchy):
        from semisimp.engine import Cancelled
        _, h, order = bumpy_hierarchy
        pos = 15
        blob, _ = pick_blob(h, order, pos, 4)
        patch = define_patch(h, order, pos, blob)
        calls = []
        resimplify_segmented(h, order, pos, patch, QuadricConfig(),
                             progress=lambda d, t: calls.append((d, t)))
        assert calls and calls[-1][0] == len(calls)
        with pytest.raises(Cancelled):
            resimplify_segmented(h, order, pos, patch, QuadricConfig(),
                                 cancel=lambda: True)
