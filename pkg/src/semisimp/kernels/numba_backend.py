"""numba @njit implementations of the numeric hot paths.

Mirrors ``numpy_backend`` function for function; see there for the quadric
coefficient layout. Kernels are compiled lazily and cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

REL_DET_EPS = 1e-10


@njit(cache=True)
def _face_planes(positions, faces):
    nf = faces.shape[0]
    planes = np.zeros((nf, 4))
    areas = np.zeros(nf)
    for f in range(nf):
        i0, i1, i2 = faces[f, 0], faces[f, 1], faces[f, 2]
        e1x = positions[i1, 0] - positions[i0, 0]
        e1y = positions[i1, 1] - positions[i0, 1]
        e1z = positions[i1, 2] - positions[i0, 2]
        e2x = positions[i2, 0] - positions[i0, 0]
        e2y = positions[i2, 1] - positions[i0, 1]
        e2z = positions[i2, 2] - positions[i0, 2]
        nx = e1y * e2z - e1z * e2y
        ny = e1z * e2x - e1x * e2z
        nz = e1x * e2y - e1y * e2x
        twice_area = np.sqrt(nx * nx + ny * ny + nz * nz)
        areas[f] = 0.5 * twice_area
        if twice_area > 0.0:
            nx /= twice_area
            ny /= twice_area
            nz /= twice_area
            planes[f, 0] = nx
            planes[f, 1] = ny
            planes[f, 2] = nz
            planes[f, 3] = -(nx * positions[i0, 0] + ny * positions[i0, 1]
                             + nz * positions[i0, 2])
    return planes, areas


def face_planes(positions, faces):
    return _face_planes(np.ascontiguousarray(positions),
                        np.ascontiguousarray(faces))


@njit(cache=True)
def _plane_quadrics(planes, weights):
    n = planes.shape[0]
    q = np.empty((n, 10))
    for i in range(n):
        a, b, c, d = planes[i, 0], planes[i, 1], planes[i, 2], planes[i, 3]
        w = weights[i]
        q[i, 0] = w * a * a
        q[i, 1] = w * a * b
        q[i, 2] = w * a * c
        q[i, 3] = w * a * d
        q[i, 4] = w * b * b
        q[i, 5] = w * b * c
        q[i, 6] = w * b * d
        q[i, 7] = w * c * c
        q[i, 8] = w * c * d
        q[i, 9] = w * d * d
    return q


def plane_quadrics(planes, weights):
    return _plane_quadrics(np.ascontiguousarray(planes),
                           np.ascontiguousarray(weights))


@njit(cache=True)
def _accumulate_face_quadrics(n_vertices, faces, face_quadrics):
    out = np.zeros((n_vertices, 10))
    for corner in range(3):
        for f in range(faces.shape[0]):
            v = faces[f, corner]
            for j in range(10):
                out[v, j] += face_quadrics[f, j]
    return out


def accumulate_face_quadrics(n_vertices, faces, face_quadrics):
    return _accumulate_face_quadrics(n_vertices, np.ascontiguousarray(faces),
                                     np.ascontiguousarray(face_quadrics))


@njit(cache=True)
def _scatter_add_quadrics(out, indices, quadrics):
    for i in range(indices.shape[0]):
        v = indices[i]
        for j in range(10):
            out[v, j] += quadrics[i, j]


def scatter_add_quadrics(out, indices, quadrics):
    _scatter_add_quadrics(out, np.ascontiguousarray(indices),
                          np.ascontiguousarray(quadrics))


@njit(cache=True, inline="always")
def _eval_one(q, x, y, z):
    return (q[0] * x * x + q[4] * y * y + q[7] * z * z
            + 2.0 * (q[1] * x * y + q[2] * x * z + q[5] * y * z)
            + 2.0 * (q[3] * x + q[6] * y + q[8] * z)
            + q[9])


@njit(cache=True)
def _quadric_eval(quads, points):
    n = quads.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = _eval_one(quads[i], points[i, 0], points[i, 1], points[i, 2])
    return out


def quadric_eval(quads, points):
    q = np.ascontiguousarray(np.atleast_2d(quads))
    p = np.ascontiguousarray(np.atleast_2d(points))
    return _quadric_eval(q, p)


@njit(cache=True)
def _solve_placements(quads, upos, vpos, subset_only):
    n = quads.shape[0]
    pos = np.empty((n, 3))
    err = np.empty(n)
    for i in range(n):
        q = quads[i]
        a00, a01, a02 = q[0], q[1], q[2]
        a11, a12, a22 = q[4], q[5], q[7]
        b0, b1, b2 = q[3], q[6], q[8]
        det = (a00 * (a11 * a22 - a12 * a12)
               - a01 * (a01 * a22 - a12 * a02)
               + a02 * (a01 * a12 - a11 * a02))
        frob = np.sqrt(a00 * a00 + a11 * a11 + a22 * a22
                       + 2.0 * (a01 * a01 + a02 * a02 + a12 * a12))
        if not subset_only and frob > 0.0 \
                and abs(det) > REL_DET_EPS * frob ** 3:
            c00 = a11 * a22 - a12 * a12
            c01 = a02 * a12 - a01 * a22
            c02 = a01 * a12 - a02 * a11
            c11 = a00 * a22 - a02 * a02
            c12 = a02 * a01 - a00 * a12
            c22 = a00 * a11 - a01 * a01
            inv_det = 1.0 / det
            x = -(c00 * b0 + c01 * b1 + c02 * b2) * inv_det
            y = -(c01 * b0 + c11 * b1 + c12 * b2) * inv_det
            z = -(c02 * b0 + c12 * b1 + c22 * b2) * inv_det
            pos[i, 0] = x
            pos[i, 1] = y
            pos[i, 2] = z
            err[i] = _eval_one(q, x, y, z)
        else:
            ux, uy, uz = upos[i, 0], upos[i, 1], upos[i, 2]
            vx, vy, vz = vpos[i, 0], vpos[i, 1], vpos[i, 2]
            mx, my, mz = 0.5 * (ux + vx), 0.5 * (uy + vy), 0.5 * (uz + vz)
            eu = _eval_one(q, ux, uy, uz)
            ev = _eval_one(q, vx, vy, vz)
            em = _eval_one(q, mx, my, mz)
            # first of (u, v, mid) wins ties
            if eu <= ev and eu <= em:
                pos[i, 0], pos[i, 1], pos[i, 2] = ux, uy, uz
                err[i] = eu
            elif ev <= em:
                pos[i, 0], pos[i, 1], pos[i, 2] = vx, vy, vz
                err[i] = ev
            else:
                pos[i, 0], pos[i, 1], pos[i, 2] = mx, my, mz
                err[i] = em
        if err[i] < 0.0:
            err[i] = 0.0
    return pos, err


def solve_placements(quads, upos, vpos, subset_only):
    q = np.ascontiguousarray(np.atleast_2d(quads))
    u = np.ascontiguousarray(np.atleast_2d(upos))
    v = np.ascontiguousarray(np.atleast_2d(vpos))
    return _solve_placements(q, u, v, subset_only)


@njit(cache=True)
def _bfs_hops(indptr, indices, source, radius):
    n = indptr.shape[0] - 1
    hops = np.full(n, -1, dtype=np.int64)
    hops[source] = 0
    frontier = np.empty(n, dtype=np.int64)
    frontier[0] = source
    f_len = 1
    nxt = np.empty(n, dtype=np.int64)
    for depth in range(1, radius + 1):
        n_len = 0
        for fi in range(f_len):
            node = frontier[fi]
            for j in range(indptr[node], indptr[node + 1]):
                nbr = indices[j]
                if hops[nbr] < 0:
                    hops[nbr] = depth
                    nxt[n_len] = nbr
                    n_len += 1
        if n_len == 0:
            break
        frontier[:n_len] = nxt[:n_len]
        f_len = n_len
    return hops


def bfs_hops(indptr, indices, source, radius):
    return _bfs_hops(np.ascontiguousarray(indptr),
                     np.ascontiguousarray(indices), source, radius)


@njit(cache=True)
def _any_normal_flip(old_tris, new_tris):
    for i in range(old_tris.shape[0]):
        o0x = old_tris[i, 1, 0] - old_tris[i, 0, 0]
        o0y = old_tris[i, 1, 1] - old_tris[i, 0, 1]
        o0z = old_tris[i, 1, 2] - old_tris[i, 0, 2]
        o1x = old_tris[i, 2, 0] - old_tris[i, 0, 0]
        o1y = old_tris[i, 2, 1] - old_tris[i, 0, 1]
        o1z = old_tris[i, 2, 2] - old_tris[i, 0, 2]
        nox = o0y * o1z - o0z * o1y
        noy = o0z * o1x - o0x * o1z
        noz = o0x * o1y - o0y * o1x
        n0x = new_tris[i, 1, 0] - new_tris[i, 0, 0]
        n0y = new_tris[i, 1, 1] - new_tris[i, 0, 1]
        n0z = new_tris[i, 1, 2] - new_tris[i, 0, 2]
        n1x = new_tris[i, 2, 0] - new_tris[i, 0, 0]
        n1y = new_tris[i, 2, 1] - new_tris[i, 0, 1]
        n1z = new_tris[i, 2, 2] - new_tris[i, 0, 2]
        nnx = n0y * n1z - n0z * n1y
        nny = n0z * n1x - n0x * n1z
        nnz = n0x * n1y - n0y * n1x
        if nox * nnx + noy * nny + noz * nnz < 0.0:
            return True
    return False


def any_normal_flip(old_tris, new_tris):
    return bool(_any_normal_flip(np.ascontiguousarray(old_tris),
                                 np.ascontiguousarray(new_tris)))
