import numpy as np
import pytest

from liftlap import Mesh, generate_planar, icosphere, load_mesh

OCTAHEDRON_OFF = """OFF
6 8 0
1 0 0
-1 0 0
0 1 0
0 -1 0
0 0 1
0 0 -1
3 0 2 4
3 2 1 4
3 1 3 4
3 3 0 4
3 2 0 5
3 1 2 5
3 3 1 5
3 0 3 5
"""


@pytest.fixture(scope="session")
def octahedron():
    return load_mesh(OCTAHEDRON_OFF, "off")


@pytest.fixture(scope="session")
def flat_four_grid():
    return generate_planar("four", 4)


@pytest.fixture(scope="session")
def flat_unstructured():
    return generate_planar("unstructured", 8, seed=11)


@pytest.fixture(scope="session")
def icosphere_ladder():
    return [icosphere(k) for k in range(1, 5)]


@pytest.fixture(scope="session")
def hexagon_fan():
    """Flat regular hexagon ring around a central vertex, CCW faces."""
    angles = np.arange(6) * np.pi / 3.0
    ring = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(6)])
    verts = np.vstack([[0.0, 0.0, 0.0], ring])
    faces = [(0, 1 + i, 1 + (i + 1) % 6) for i in range(6)]
    return Mesh(verts, faces)
