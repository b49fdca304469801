# tests/conftest.py

import numpy as np
import pytest

from app.meshing.tet_mesh import TetMesh, unit_cube_mesh
from app.orchestration.problems import inner_cube_mesh
from app.orchestration.session_state import RunConfig
from app.overlap.overlapping_meshes import build_overlap

REFERENCE_TET = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def reference_tet() -> np.ndarray:
    return REFERENCE_TET.copy()


@pytest.fixture(scope="session")
def run_config() -> RunConfig:
    return RunConfig()


@pytest.fixture(scope="session")
def rotated_pair(run_config):
    """Unit cube at N=8 with the rotated inner cube on top."""
    n = 8
    return unit_cube_mesh(n), inner_cube_mesh(run_config, n)


@pytest.fixture(scope="session")
def rotated_overlap(rotated_pair):
    background, overlapping = rotated_pair
    return build_overlap(background, overlapping, seed=7)


def single_tet_mesh(points: np.ndarray = REFERENCE_TET) -> TetMesh:
    return TetMesh(np.asarray(points, dtype=float), np.array([[0, 1, 2, 3]]))


def random_tet(rng: np.random.Generator, lo: float = 0.0, hi: float = 1.0, min_volume: float = 1e-3) -> np.ndarray:
    while True:
        p = rng.uniform(lo, hi, size=(4, 3))
        vol = np.linalg.det(np.stack([p[1] - p[0], p[2] - p[0], p[3] - p[0]])) / 6.0
        if abs(vol) > min_volume:
            return p if vol > 0 else p[[0, 2, 1, 3]]
