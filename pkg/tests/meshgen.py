"""Synthetic meshes and independent brute-force oracles for the tests.

Everything here deliberately avoids the package's kernel/quadric code
paths: distances, BFS, Bezier evaluation and collapse validity are
recomputed from first principles so they can serve as oracles.
"""

from __future__ import annotations

import numpy as np

from semisimp import Mesh


# ---- generators ----

def grid_mesh(nx: int, ny: int, height=None, spacing: float = 1.0) -> Mesh:
    xs, ys = np.meshgrid(np.arange(nx, dtype=float),
                         np.arange(ny, dtype=float), indexing="ij")
    z = np.zeros_like(xs) if height is None else height(xs, ys)
    pos = np.stack([xs.ravel() * spacing, ys.ravel() * spacing, z.ravel()],
                   axis=1)
    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            c = (i + 1) * ny + j + 1
            d = i * ny + j + 1
            faces.append([a, b, c])
            faces.append([a, c, d])
    return Mesh(pos, np.array(faces, dtype=np.int64))


def wavy_grid(nx: int, ny: int, amplitude: float = 0.5,
              freq: float = 0.7) -> Mesh:
    return grid_mesh(nx, ny,
                     height=lambda x, y: amplitude * np.sin(freq * x)
                     * np.cos(freq * y))


def fan_mesh(n_rim: int, radius: float = 1.0, apex_z: float = 0.0) -> Mesh:
    """Open fan: hub vertex 0 surrounded by a partial rim (has boundary)."""
    angles = np.linspace(0.0, 1.5 * np.pi, n_rim)
    rim = np.stack([radius * np.cos(angles), radius * np.sin(angles),
                    np.zeros(n_rim)], axis=1)
    pos = np.vstack([[[0.0, 0.0, apex_z]], rim])
    faces = [[0, i + 1, i + 2] for i in range(n_rim - 1)]
    return Mesh(pos, np.array(faces, dtype=np.int64))


def tetrahedron() -> Mesh:
    pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return Mesh(pos, faces)


def icosahedron() -> Mesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    pos = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    pos /= np.linalg.norm(pos, axis=1)[:, None]
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return Mesh(pos, faces)


def icosphere(subdivisions: int, radius: float = 1.0) -> Mesh:
    mesh = icosahedron()
    pos = [p for p in mesh.positions]
    faces = [tuple(f) for f in mesh.faces]
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                p = pos[a] + pos[b]
                pos.append(p / np.linalg.norm(p))
                midpoint[key] = len(pos) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc),
                          (ab, bc, ca)]
        faces = new_faces
    return Mesh(radius * np.array(pos), np.array(faces, dtype=np.int64))


def uv_sphere(n_rings: int = 20, n_seg: int = 25, radius: float = 1.0) -> Mesh:
    """Closed lat-long sphere with exactly 2 * n_rings * n_seg faces."""
    verts = []
    for i in range(1, n_rings + 1):
        phi = np.pi * i / (n_rings + 1)
        for j in range(n_seg):
            theta = 2.0 * np.pi * j / n_seg
            verts.append([np.sin(phi) * np.cos(theta),
                          np.sin(phi) * np.sin(theta),
                          np.cos(phi)])
    north = len(verts)
    verts.append([0.0, 0.0, 1.0])
    south = len(verts)
    verts.append([0.0, 0.0, -1.0])

    def ring(i, j):
        return i * n_seg + (j % n_seg)

    faces = []
    for j in range(n_seg):
        faces.append([north, ring(0, j), ring(0, j + 1)])
        faces.append([south, ring(n_rings - 1, j + 1), ring(n_rings - 1, j)])
    for i in range(n_rings - 1):
        for j in range(n_seg):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j + 1), ring(i + 1, j)
            faces.append([a, d, c])
            faces.append([a, c, b])
    return Mesh(radius * np.array(verts), np.array(faces, dtype=np.int64))


def random_small_mesh(rng: np.random.Generator, max_faces: int = 50) -> Mesh:
    """Random manifold mesh with at most max_faces faces, randomly posed."""
    kind = rng.integers(0, 4)
    if kind == 0:
        nx, ny = rng.integers(2, 6, size=2)
        base = grid_mesh(int(nx), int(ny))
    elif kind == 1:
        base = fan_mesh(int(rng.integers(3, 9)))
    elif kind == 2:
        base = tetrahedron()
    else:
        base = icosahedron()
    pos = base.positions.copy()
    pos = pos + 0.3 * rng.standard_normal(pos.shape)
    scale = rng.uniform(0.3, 3.0, size=3)
    theta = rng.uniform(0, 2 * np.pi)
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    pos = (pos * scale) @ rot.T + rng.uniform(-5, 5, size=3)
    assert base.n_faces <= max_faces
    try:
        return Mesh(pos, base.faces)
    except ValueError:
        return Mesh(base.positions, base.faces)  # jitter broke it; keep base


# ---- oracles ----

def bfs_oracle(mesh: Mesh, v: int, r: int) -> dict[int, int]:
    adj: dict[int, set[int]] = {i: set() for i in range(mesh.n_vertices)}
    for a, b, c in mesh.faces:
        a, b, c = int(a), int(b), int(c)
        adj[a] |= {b, c}
        adj[b] |= {a, c}
        adj[c] |= {a, b}
    dist = {v: 0}
    frontier = [v]
    for d in range(1, r + 1):
        nxt = []
        for n in frontier:
            for w in adj[n]:
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def triangle_plane(p0, p1, p2):
    """(unit normal, offset, area) computed directly."""
    n = np.cross(p1 - p0, p2 - p0)
    ln = np.linalg.norm(n)
    if ln == 0.0:
        return None
    n = n / ln
    return n, -float(n @ p0), 0.5 * ln


def brute_vertex_quadric_eval(mesh: Mesh, v: int, x,
                              boundary_weight: float) -> float:
    """Sum of w * dist(x, plane)^2 over v's incident face planes plus its
    boundary-edge penalty planes, via direct distance formulas."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for fi in mesh.vertex_faces[v]:
        a, b, c = mesh.faces[fi]
        tp = triangle_plane(mesh.positions[a], mesh.positions[b],
                            mesh.positions[c])
        if tp is None:
            continue
        n, d, area = tp
        total += area * float(n @ x + d) ** 2
    for (a, b) in mesh.boundary_edges:
        if v not in (a, b):
            continue
        fi = mesh.edge_faces[(a, b)][0]
        fa, fb, fc = mesh.faces[fi]
        tp = triangle_plane(mesh.positions[fa], mesh.positions[fb],
                            mesh.positions[fc])
        if tp is None:
            continue
        fn, _, _ = tp
        edge = mesh.positions[b] - mesh.positions[a]
        pn = np.cross(edge, fn)
        ln = np.linalg.norm(pn)
        if ln == 0.0:
            continue
        pn = pn / ln
        d = -float(pn @ mesh.positions[a])
        total += boundary_weight * float(edge @ edge) \
            * float(pn @ x + d) ** 2
    return total


def brute_collapse_ok(mesh: Mesh, u: int, v: int, placement=None) -> bool:
    """Simulate the collapse and test validity directly: no degenerate
    faces, no duplicate faces, every edge in at most 2 faces, and no normal
    reversal among surviving faces."""
    if placement is None:
        placement = 0.5 * (mesh.positions[u] + mesh.positions[v])
    placement = np.asarray(placement, dtype=float)
    new_faces = []
    flips = False
    for face in mesh.faces:
        face = [int(i) for i in face]
        touched = u in face or v in face
        mapped = [(-1 if i in (u, v) else i) for i in face]
        if mapped.count(-1) >= 2:
            continue  # face dies with the edge
        if len(set(mapped)) < 3:
            return False
        new_faces.append(tuple(mapped))
        if touched:
            old = [mesh.positions[i] for i in face]
            new = [placement if i in (u, v) else mesh.positions[i]
                   for i in face]
            n_old = np.cross(old[1] - old[0], old[2] - old[0])
            n_new = np.cross(new[1] - new[0], new[2] - new[0])
            if float(n_old @ n_new) < 0.0:
                flips = True
    triples = [tuple(sorted(f)) for f in new_faces]
    if len(set(triples)) != len(triples):
        return False
    edge_count: dict[tuple, int] = {}
    for a, b, c in new_faces:
        for e in ((a, b), (b, c), (c, a)):
            key = tuple(sorted(e))
            edge_count[key] = edge_count.get(key, 0) + 1
    if any(n > 2 for n in edge_count.values()):
        return False
    return not flips


def decasteljau(ordinates, t: float) -> float:
    """Bezier evaluation by repeated linear interpolation."""
    pts = [float(y) for y in ordinates]
    while len(pts) > 1:
        pts = [(1 - t) * a + t * b for a, b in zip(pts[:-1], pts[1:])]
    return pts[0]
