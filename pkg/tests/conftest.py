import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from meshgen import grid_mesh, icosphere, tetrahedron, wavy_grid  # noqa: E402

from semisimp import QuadricConfig, build_hierarchy  # noqa: E402


@pytest.fixture(scope="session")
def tetra():
    return tetrahedron()


@pytest.fixture(scope="session")
def flat_grid():
    return grid_mesh(5, 5)


@pytest.fixture(scope="session")
def bumpy_grid():
    return wavy_grid(8, 8, amplitude=0.6)


@pytest.fixture(scope="session")
def sphere():
    return icosphere(2)  # 162 vertices, 320 faces


@pytest.fixture(scope="session")
def bumpy_hierarchy(bumpy_grid):
    """(mesh, hierarchy, order) for a 64-vertex wavy grid."""
    h, order = build_hierarchy(bumpy_grid, QuadricConfig())
    return bumpy_grid, h, order


@pytest.fixture(scope="session")
def sphere_hierarchy(sphere):
    h, order = build_hierarchy(sphere, QuadricConfig())
    return sphere, h, order


@pytest.fixture(scope="session")
def big_hierarchy():
    """A larger, reorder-friendly hierarchy (>=500 collapses)."""
    mesh = wavy_grid(26, 26, amplitude=0.8)
    h, order = build_hierarchy(mesh, QuadricConfig())
    assert len(order) >= 500
    return mesh, h, order


@pytest.fixture(scope="session")
def desk_scale():
    """(mesh, hierarchy, order, build_seconds) for a ~10,000-vertex model."""
    import time
    mesh = wavy_grid(100, 100, amplitude=2.0, freq=0.25)
    t0 = time.monotonic()
    h, order = build_hierarchy(mesh, QuadricConfig())
    return mesh, h, order, time.monotonic() - t0
