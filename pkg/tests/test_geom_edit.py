import numpy as np
import pytest

from semisimp import EditOptions, FalloffCurve, QuadricConfig, \
    apply_vertex_edit, attenuation_factor, build_hierarchy, cut_at, \
    falloff_weight, local_frame, undo_vertex_edit
from semisimp.geom_edit import _CutMesh

from meshgen import decasteljau, fan_mesh, grid_mesh, random_small_mesh


class TestFalloff:
    def test_endpoints_exact(self):
        curve = FalloffCurve(0.8, 0.3)
        for r in (1, 2, 5, 9):
            assert falloff_weight(curve, 0, r) == 1.0
            assert falloff_weight(curve, r, r) == 0.0

    def test_outside_support_is_zero(self):
        assert falloff_weight(FalloffCurve(), 7, 3) == 0.0

    def test_radius_zero(self):
        assert falloff_weight(FalloffCurve(), 0, 0) == 1.0

    def test_matches_de_casteljau(self):
        for y1, y2 in ((1.0, 0.0), (0.5, 0.5), (1.2, -0.1)):
            curve = FalloffCurve(y1, y2)
            for r in (2, 4, 10):
                for i in range(r + 1):
                    want = decasteljau([1.0, y1, y2, 0.0], i / r)
                    want = min(max(want, -0.25), 1.25)
                    got = falloff_weight(curve, i, r)
                    assert got == pytest.approx(want, abs=1e-12)

    def test_guard_band(self):
        wild = FalloffCurve(5.0, -5.0)
        vals = [falloff_weight(wild, i, 10) for i in range(11)]
        assert all(-0.25 <= v <= 1.25 for v in vals)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            falloff_weight(FalloffCurve(), -1, 3)


class TestAttenuation:
    def test_equal_errors(self):
        assert attenuation_factor(2.5, 2.5) == 1.0

    def test_leaf_is_zero(self):
        assert attenuation_factor(0.0, 3.0) == 0.0
        assert attenuation_factor(0.0, 0.0) == 0.0

    def test_quarter_ratio(self):
        assert attenuation_factor(1.0, 4.0) == pytest.approx(0.5)

    def test_clamped_to_one(self):
        assert attenuation_factor(9.0, 1.0) == 1.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            attenuation_factor(-1.0, 1.0)


def orthonormal(frame, tol=1e-9):
    axes = [frame.x, frame.y, frame.z]
    for a in axes:
        if abs(np.linalg.norm(a) - 1.0) > tol:
            return False
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(axes[i] @ axes[j]) > tol:
                return False
    return np.linalg.norm(frame.x - np.cross(frame.y, frame.z)) <= tol


class TestLocalFrame:
    def test_flat_disk_z_axis(self):
        mesh = fan_mesh(8)
        h, order = build_hierarchy(mesh, QuadricConfig())
        cut = cut_at(h, order, 0)
        frame = local_frame(h, cut, 0)
        assert abs(abs(frame.z[2]) - 1.0) < 1e-12
        assert orthonormal(frame)

    def test_sphere_vertex_radial(self, sphere_hierarchy):
        sphere, h, order = sphere_hierarchy
        cut = cut_at(h, order, 0)
        for v in range(0, sphere.n_vertices, 17):
            frame = local_frame(h, cut, v)
            radial = sphere.positions[v] / np.linalg.norm(sphere.positions[v])
            angle = np.degrees(np.arccos(np.clip(abs(frame.z @ radial),
                                                 -1, 1)))
            assert angle < 5.0

    def test_orthonormal_random_sweep(self):
        # acceptance runs 1000 cases; keep a quicker sweep here
        count = 0
        for seed in range(40):
            rng = np.random.default_rng(3000 + seed)
            mesh = random_small_mesh(rng)
            h, order = build_hierarchy(mesh, QuadricConfig())
            k = int(rng.integers(0, len(order) + 1))
            cut = cut_at(h, order, k)
            for m in cut.node_ids[:5]:
                frame = local_frame(h, cut, int(m))
                assert orthonormal(frame)
                count += 1
        assert count >= 100

    def test_round_trip_detail_vectors(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        cut = cut_at(h, order, len(order) // 2)
        m = int(next(n for n in cut.node_ids if not h.is_leaf(n)))
        frame = local_frame(h, cut, m)
        pts = h.position[:10] + 0.0
        back = frame.to_global(frame.to_local(pts))
        np.testing.assert_allclose(back, pts, atol=1e-9)

    def test_not_in_cut_rejected(self, bumpy_hierarchy):
        _, h, order = bumpy_hierarchy
        cut = cut_at(h, order, len(order))
        missing = next(i for i in range(h.n_leaves) if i not in cut)
        with pytest.raises(ValueError):
            local_frame(h, cut, missing)


def coarse_cut_interior_node(h, order, min_collapses=None):
    """A LOD position and node where the whole edit neighborhood is
    interior (so leaves can only move via descendant propagation)."""
    k = len(order) - 2
    cut = cut_at(h, order, k)
    for m in cut.node_ids:
        if not h.is_leaf(m):
            return k, int(m)
    raise AssertionError("no interior cut node found")


class TestApplyVertexEdit:
    def test_r0_moves_only_m(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k, m = coarse_cut_interior_node(h, order)
        before = h.position[:h.count].copy()
        delta = np.array([0.05, -0.02, 0.3])
        rec = apply_vertex_edit(h, order, k, m, delta, EditOptions(radius=0))
        assert rec.moved_nodes() == [m]
        np.testing.assert_array_equal(h.position[m], before[m] + delta)
        others = [i for i in range(h.count) if i != m]
        np.testing.assert_array_equal(h.position[others], before[others])

    def test_beyond_radius_unmoved(self, big_hierarchy):
        _, h0, order = big_hierarchy
        h = h0.clone()
        k = 200
        cut = cut_at(h, order, k)
        m = int(cut.node_ids[0])
        cm = _CutMesh(h, cut)
        r = 2
        hops = cm.hops_from(m, h.count)  # unbounded distances
        before = h.position[:h.count].copy()
        apply_vertex_edit(h, order, k, m, [0, 0, 0.5],
                          EditOptions(radius=r))
        for n in cut.node_ids:
            n = int(n)
            if hops.get(n, 10 ** 9) > r:
                np.testing.assert_array_equal(h.position[n], before[n])

    def test_attenuated_keeps_leaves_bit_identical(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k, m = coarse_cut_interior_node(h, order)
        leaves_before = h.position[:h.n_leaves].copy()
        opts = EditOptions(radius=2, descendants="attenuated")
        rec = apply_vertex_edit(h, order, k, m, [0.2, 0.1, 0.4], opts)
        assert all(not h.is_leaf(n) for n in rec.moved_nodes())
        np.testing.assert_array_equal(h.position[:h.n_leaves], leaves_before)

    def test_attenuated_still_moves_near_descendants(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k, m = coarse_cut_interior_node(h, order)
        interior_desc = [n for n in range(h.n_leaves, h.count)
                         if n != m and h.error[n] > 0
                         and m in h.ancestors(n)]
        before = h.position[:h.count].copy()
        opts = EditOptions(radius=0, descendants="attenuated")
        apply_vertex_edit(h, order, k, m, [0.0, 0.0, 0.8], opts)
        moved = [n for n in interior_desc
                 if not np.array_equal(h.position[n], before[n])]
        assert moved, "attenuation should still move high-error descendants"

    def test_direct_round_trip_restores(self, bumpy_hierarchy):
        # ancestors stay off: rebuilding quadrics from cut faces is lossy by
        # design, so only the neighbor + descendant phases are involutive
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k, m = coarse_cut_interior_node(h, order)
        before = h.position[:h.count].copy()
        opts = EditOptions(radius=2, descendants="direct")
        delta = np.array([0.15, -0.1, 0.25])
        apply_vertex_edit(h, order, k, m, delta, opts)
        apply_vertex_edit(h, order, k, m, -delta, opts)
        np.testing.assert_allclose(h.position[:h.count], before, atol=1e-7)

    def test_direct_zero_delta_is_exact_identity(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k, m = coarse_cut_interior_node(h, order)
        before = h.position[:h.count].copy()
        opts = EditOptions(radius=3, descendants="direct", ancestors=True)
        rec = apply_vertex_edit(h, order, k, m, [0.0, 0.0, 0.0], opts)
        np.testing.assert_array_equal(h.position[:h.count], before)
        assert rec.moved_nodes() == []

    def test_ancestor_quadrics_are_child_sums(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k = len(order) // 2
        cut = cut_at(h, order, k)
        m = int(next(n for n in cut.node_ids if not h.is_leaf(n)))
        opts = EditOptions(radius=1, ancestors=True)
        rec = apply_vertex_edit(h, order, k, m, [0.1, 0.0, 0.2], opts)
        assert rec.old_errors, "edit below the top should touch ancestors"
        for a in rec.old_errors:
            c1, c2 = int(h.children[a, 0]), int(h.children[a, 1])
            np.testing.assert_allclose(h.quad[a], h.quad[c1] + h.quad[c2],
                                       rtol=1e-12, atol=0)

    def test_coplanar_ancestors_fall_onto_plane(self):
        # boundary penalties off: the claim is about the coplanar face
        # planes, and penalty planes are perpendicular to them
        cfg = QuadricConfig(boundary_weight=0.0)
        mesh = grid_mesh(6, 6)
        h, order = build_hierarchy(mesh, cfg)
        k = len(order) // 2
        cut = cut_at(h, order, k)
        m = int(next(n for n in cut.node_ids if not h.is_leaf(n)))
        opts = EditOptions(radius=1, ancestors=True)
        rec = apply_vertex_edit(h, order, k, m, [0.3, 0.2, 0.0], opts, cfg)
        assert rec.old_errors
        for a in rec.old_errors:
            assert h.error[a] == pytest.approx(0.0, abs=1e-9)
            assert abs(h.position[a][2]) < 1e-6

    def test_not_in_cut_rejected(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        cut = cut_at(h, order, len(order))
        missing = next(i for i in range(h.n_leaves) if i not in cut)
        with pytest.raises(ValueError):
            apply_vertex_edit(h, order, len(order), missing, [0, 0, 1],
                              EditOptions())

    def test_undo_restores_exactly(self, bumpy_hierarchy):
        _, h0, order = bumpy_hierarchy
        h = h0.clone()
        k, m = coarse_cut_interior_node(h, order)
        pos_before = h.position[:h.count].copy()
        quad_before = h.quad[:h.count].copy()
        err_before = h.error[:h.count].copy()
        opts = EditOptions(radius=2, descendants="direct", ancestors=True)
        rec = apply_vertex_edit(h, order, k, m, [0.4, 0.2, -0.3], opts)
        undo_vertex_edit(h, rec)
        np.testing.assert_array_equal(h.position[:h.count], pos_before)
        np.testing.assert_array_equal(h.quad[:h.count], quad_before)
        np.testing.assert_array_equal(h.error[:h.count], err_before)
