"""Benchmark the numba kernels against the pure-numpy fallback.

Micro-benchmarks call both backends directly; the end-to-end hierarchy
build runs in subprocesses so each measurement uses one backend for the
whole process (SEMISIMP_NUMBA=1 vs 0).

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from semisimp.kernels import get_backend  # noqa: E402


def make_grid(n):
    xs, ys = np.meshgrid(np.arange(n, dtype=float),
                         np.arange(n, dtype=float), indexing="ij")
    z = 2.0 * np.sin(0.25 * xs) * np.cos(0.25 * ys)
    pos = np.stack([xs.ravel(), ys.ravel(), z.ravel()], axis=1)
    faces = []
    for i in range(n - 1):
        for j in range(n - 1):
            a = i * n + j
            b = (i + 1) * n + j
            c = (i + 1) * n + j + 1
            d = i * n + j + 1
            faces.append([a, b, c])
            faces.append([a, c, d])
    return pos, np.array(faces, dtype=np.int64)


def timeit(fn, repeat):
    fn()  # warm up (JIT compile / cache load)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(size, repeat):
    pos, faces = make_grid(size)
    nv = len(pos)
    backends = {name: get_backend(name) for name in ("numpy", "numba")}
    ref = backends["numpy"]
    planes, areas = ref.face_planes(pos, faces)
    fq = ref.plane_quadrics(planes, areas)
    vq = ref.accumulate_face_quadrics(nv, faces, fq)
    edges = np.unique(np.sort(np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1),
        axis=0)
    equads = vq[edges[:, 0]] + vq[edges[:, 1]]
    upos, vpos = pos[edges[:, 0]], pos[edges[:, 1]]
    indptr = np.zeros(nv + 1, dtype=np.int64)
    both = np.concatenate([edges, edges[:, ::-1]])
    both = both[np.lexsort((both[:, 1], both[:, 0]))]
    np.cumsum(np.bincount(both[:, 0], minlength=nv), out=indptr[1:])
    indices = np.ascontiguousarray(both[:, 1])

    cases = {
        "face_planes": lambda K: K.face_planes(pos, faces),
        "plane_quadrics": lambda K: K.plane_quadrics(planes, areas),
        "accumulate": lambda K: K.accumulate_face_quadrics(nv, faces, fq),
        "quadric_eval": lambda K: K.quadric_eval(vq, pos),
        "solve_placements": lambda K: K.solve_placements(equads, upos, vpos,
                                                         False),
        "bfs_hops(r=8)": lambda K: K.bfs_hops(indptr, indices, nv // 2, 8),
    }
    print(f"kernel micro-benchmarks on a {size}x{size} grid "
          f"({nv} vertices, {len(faces)} faces, {len(edges)} edges); "
          f"best of {repeat}\n")
    print(f"{'kernel':<20} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, fn in cases.items():
        times = {bn: timeit(lambda b=bk: fn(b), repeat)
                 for bn, bk in backends.items()}
        print(f"{name:<20} {times['numpy'] * 1e3:>10.3f}ms "
              f"{times['numba'] * 1e3:>10.3f}ms "
              f"{times['numpy'] / times['numba']:>8.2f}x")


BUILD_SNIPPET = r"""
import sys, time
sys.path.insert(0, {src!r})
import numpy as np
from semisimp import build_hierarchy
from semisimp.mesh import Mesh
from semisimp.kernels import backend_name
n = {size}
xs, ys = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                     indexing="ij")
z = 2.0 * np.sin(0.25 * xs) * np.cos(0.25 * ys)
pos = np.stack([xs.ravel(), ys.ravel(), z.ravel()], axis=1)
faces = []
for i in range(n - 1):
    for j in range(n - 1):
        a = i * n + j; b = (i + 1) * n + j
        c = (i + 1) * n + j + 1; d = i * n + j + 1
        faces.append([a, b, c]); faces.append([a, c, d])
mesh = Mesh(pos, np.array(faces))
t0 = time.monotonic()
h, order = build_hierarchy(mesh)
print(f"{{backend_name()}}: {{time.monotonic() - t0:.2f}}s "
      f"({{len(order)}} collapses)")
"""


def bench_build(size):
    src = os.path.join(os.path.dirname(__file__), "..", "src")
    snippet = BUILD_SNIPPET.format(src=os.path.abspath(src), size=size)
    print(f"\nend-to-end hierarchy build, {size}x{size} grid:", flush=True)
    for flag in ("0", "1"):
        env = dict(os.environ, SEMISIMP_NUMBA=flag)
        subprocess.run([sys.executable, "-c", snippet], env=env, check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=100,
                    help="grid side length (default 100 -> 10k vertices)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-build", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.size, args.repeat)
    if not args.skip_build:
        bench_build(args.size)


if __name__ == "__main__":
    main()
