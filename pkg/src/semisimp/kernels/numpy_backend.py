"""Pure-numpy implementations of the numeric hot paths.

This is the reference backend; ``numba_backend`` mirrors every function
here with identical semantics. Quadrics are stored as the 10 distinct
coefficients of a symmetric 4x4 form, ordered

    [xx, xy, xz, xw, yy, yz, yw, zz, zw, ww]

for the homogeneous point (x, y, z, 1).
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

# |det| below REL_DET_EPS * (frobenius norm)^3 counts as singular.
REL_DET_EPS = 1e-10


def face_planes(positions: np.ndarray, faces: np.ndarray):
    """Unit plane (a,b,c,d) and area per face; zero rows for degenerate faces."""
    p0 = positions[faces[:, 0]]
    p1 = positions[faces[:, 1]]
    p2 = positions[faces[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    twice_area = np.linalg.norm(n, axis=1)
    areas = 0.5 * twice_area
    planes = np.zeros((len(faces), 4))
    ok = twice_area > 0.0
    nn = np.zeros_like(n)
    nn[ok] = n[ok] / twice_area[ok, None]
    planes[:, :3] = nn
    planes[:, 3] = -np.einsum("ij,ij->i", nn, p0)
    return planes, areas


def plane_quadrics(planes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """w * p p^T for each plane, packed as 10 coefficients."""
    a, b, c, d = planes[:, 0], planes[:, 1], planes[:, 2], planes[:, 3]
    q = np.empty((len(planes), 10))
    q[:, 0] = a * a
    q[:, 1] = a * b
    q[:, 2] = a * c
    q[:, 3] = a * d
    q[:, 4] = b * b
    q[:, 5] = b * c
    q[:, 6] = b * d
    q[:, 7] = c * c
    q[:, 8] = c * d
    q[:, 9] = d * d
    q *= weights[:, None]
    return q


def accumulate_face_quadrics(n_vertices: int, faces: np.ndarray,
                             face_quadrics: np.ndarray) -> np.ndarray:
    out = np.zeros((n_vertices, 10))
    for corner in range(3):
        np.add.at(out, faces[:, corner], face_quadrics)
    return out


def scatter_add_quadrics(out: np.ndarray, indices: np.ndarray,
                         quadrics: np.ndarray) -> None:
    np.add.at(out, indices, quadrics)


def quadric_eval(quads: np.ndarray, points: np.ndarray) -> np.ndarray:
    """v~^T Q v~ for each (quadric, point) row pair."""
    q = np.atleast_2d(quads)
    p = np.atleast_2d(points)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    val = (q[:, 0] * x * x + q[:, 4] * y * y + q[:, 7] * z * z
           + 2.0 * (q[:, 1] * x * y + q[:, 2] * x * z + q[:, 5] * y * z)
           + 2.0 * (q[:, 3] * x + q[:, 6] * y + q[:, 8] * z)
           + q[:, 9])
    return val


def solve_placements(quads: np.ndarray, upos: np.ndarray, vpos: np.ndarray,
                     subset_only: bool) -> tuple[np.ndarray, np.ndarray]:
    """Collapse placement per edge: minimizer of the quadric, or the best of
    {u, v, midpoint} when the 3x3 system is near-singular or subset placement
    is requested. Errors are clamped to >= 0."""
    q = np.atleast_2d(quads)
    u = np.atleast_2d(upos)
    v = np.atleast_2d(vpos)
    n = len(q)
    pos = np.empty((n, 3))
    err = np.empty(n)

    a00, a01, a02 = q[:, 0], q[:, 1], q[:, 2]
    a11, a12, a22 = q[:, 4], q[:, 5], q[:, 7]
    b0, b1, b2 = q[:, 3], q[:, 6], q[:, 8]

    det = (a00 * (a11 * a22 - a12 * a12)
           - a01 * (a01 * a22 - a12 * a02)
           + a02 * (a01 * a12 - a11 * a02))
    frob = np.sqrt(a00 * a00 + a11 * a11 + a22 * a22
                   + 2.0 * (a01 * a01 + a02 * a02 + a12 * a12))
    solvable = (frob > 0.0) & (np.abs(det) > REL_DET_EPS * frob ** 3)
    if subset_only:
        solvable = np.zeros(n, dtype=bool)

    if np.any(solvable):
        s = solvable
        # Cramer's rule for A x = -b.
        c00 = a11[s] * a22[s] - a12[s] * a12[s]
        c01 = a02[s] * a12[s] - a01[s] * a22[s]
        c02 = a01[s] * a12[s] - a02[s] * a11[s]
        c11 = a00[s] * a22[s] - a02[s] * a02[s]
        c12 = a02[s] * a01[s] - a00[s] * a12[s]
        c22 = a00[s] * a11[s] - a01[s] * a01[s]
        inv_det = 1.0 / det[s]
        x = -(c00 * b0[s] + c01 * b1[s] + c02 * b2[s]) * inv_det
        y = -(c01 * b0[s] + c11 * b1[s] + c12 * b2[s]) * inv_det
        z = -(c02 * b0[s] + c12 * b1[s] + c22 * b2[s]) * inv_det
        pos[s, 0] = x
        pos[s, 1] = y
        pos[s, 2] = z
        err[s] = quadric_eval(q[s], pos[s])

    fb = ~solvable
    if np.any(fb):
        mid = 0.5 * (u[fb] + v[fb])
        cand = np.stack([u[fb], v[fb], mid], axis=1)  # (m, 3, 3)
        evals = np.stack([quadric_eval(q[fb], cand[:, i]) for i in range(3)],
                         axis=1)
        best = np.argmin(evals, axis=1)  # first index wins ties: u, v, mid
        rows = np.arange(len(best))
        pos[fb] = cand[rows, best]
        err[fb] = evals[rows, best]

    np.maximum(err, 0.0, out=err)
    return pos, err


def bfs_hops(indptr: np.ndarray, indices: np.ndarray, source: int,
             radius: int) -> np.ndarray:
    """Hop distance from source over a CSR graph, -1 beyond radius."""
    n = len(indptr) - 1
    hops = np.full(n, -1, dtype=np.int64)
    hops[source] = 0
    frontier = np.array([source], dtype=np.int64)
    for depth in range(1, radius + 1):
        if len(frontier) == 0:
            break
        nxt = []
        for node in frontier:
            nbrs = indices[indptr[node]:indptr[node + 1]]
            fresh = nbrs[hops[nbrs] < 0]
            hops[fresh] = depth
            nxt.append(fresh)
        frontier = np.concatenate(nxt) if nxt else np.empty(0, dtype=np.int64)
    return hops


def any_normal_flip(old_tris: np.ndarray, new_tris: np.ndarray) -> bool:
    """True if any triangle's normal direction reverses (dot < 0)."""
    n_old = np.cross(old_tris[:, 1] - old_tris[:, 0],
                     old_tris[:, 2] - old_tris[:, 0])
    n_new = np.cross(new_tris[:, 1] - new_tris[:, 0],
                     new_tris[:, 2] - new_tris[:, 0])
    return bool(np.any(np.einsum("ij,ij->i", n_old, n_new) < 0.0))
