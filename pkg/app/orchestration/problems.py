# app/orchestration/problems.py

"""
The two study configurations: a manufactured Poisson problem on a rotated
inner cube, and a loaded elasticity problem with a propeller-shaped
overlapping mesh.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from app.assembly.boundary_conditions import DirichletCondition, NeumannCondition
from app.assembly.forms import ElasticityForm, Form, MaterialParams, PoissonForm
from app.meshing.tet_mesh import TetMesh, box_mesh, extract_submesh, rigid_motion, transform, unit_cube_mesh
from app.orchestration.session_state import RunConfig

_log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
ELASTICITY_HALF_WIDTH = 2.0
ARM_HALF_THICKNESS = 0.2


@dataclass(frozen=True)
class ProblemDefinition:
    """Meshes, data and boundary conditions of one run."""

    name: str
    background: TetMesh
    overlapping: TetMesh
    form: Form
    source: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dirichlet: Tuple[DirichletCondition, ...] = ()
    neumann: Tuple[NeumannCondition, ...] = ()
    exact_u: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    flux_side: int = 2
    materials: Optional[MaterialParams] = field(default=None)

    @property
    def value_dim(self) -> int:
        return self.form.value_dim


# ──────────────────────────────────────────────────────────────────────────────
# Poisson
# ──────────────────────────────────────────────────────────────────────────────

def exact_poisson(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.sin(TWO_PI * x[:, 0]) * np.sin(TWO_PI * x[:, 1]) * np.sin(TWO_PI * x[:, 2])


def exact_poisson_grad(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    s = np.sin(TWO_PI * x)
    c = np.cos(TWO_PI * x)
    return TWO_PI * np.column_stack(
        [c[:, 0] * s[:, 1] * s[:, 2], s[:, 0] * c[:, 1] * s[:, 2], s[:, 0] * s[:, 1] * c[:, 2]]
    )


def poisson_source(x: np.ndarray) -> np.ndarray:
    return 3.0 * TWO_PI**2 * exact_poisson(x)


def inner_cube_mesh(config: RunConfig, n: int) -> TetMesh:
    """Inner cube meshed at the background resolution, then rigidly moved (unless aligned)."""
    lo, hi = config.omega2_lo, config.omega2_hi
    n2 = max(1, int(round((hi - lo) * n)))
    mesh = box_mesh((lo, lo, lo), (hi, hi, hi), (n2, n2, n2))
    if config.aligned:
        return mesh
    rot, t = rigid_motion(config.rotation_axis, config.rotation_deg, (0.5, 0.5, 0.5), config.translation)
    return transform(mesh, rot, t)


def poisson_problem(config: RunConfig, n: int) -> ProblemDefinition:
    background = unit_cube_mesh(n)
    overlapping = inner_cube_mesh(config, n)
    _log.info("Poisson problem: N=%d, %d + %d cells", n, background.num_cells, overlapping.num_cells)
    return ProblemDefinition(
        name="poisson",
        background=background,
        overlapping=overlapping,
        form=PoissonForm(flux_side=config.poisson_flux_side),
        source=poisson_source,
        dirichlet=(DirichletCondition(0.0),),
        exact_u=exact_poisson,
        exact_grad=exact_poisson_grad,
        flux_side=config.poisson_flux_side,
    )


# ──────────────────────────────────────────────────────────────────────────────
# Elasticity
# ──────────────────────────────────────────────────────────────────────────────

def in_propeller(x: np.ndarray) -> np.ndarray:
    """Cross-shaped blade: |x| < 1 and the (y, z) section is a plus sign of half-thickness 0.2."""
    x = np.atleast_2d(x)
    t = ARM_HALF_THICKNESS
    ay, az = np.abs(x[:, 1]), np.abs(x[:, 2])
    arms = ((ay < 1.0) & (az < t)) | ((ay < t) & (az < 1.0))
    return (np.abs(x[:, 0]) < 1.0) & arms


def propeller_mesh(cells_per_axis: int = 10) -> TetMesh:
    host = box_mesh((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0), (cells_per_axis,) * 3)
    return extract_submesh(host, in_propeller)


def top_traction(x: np.ndarray) -> np.ndarray:
    """Twist plus downward push on the top face: (-y, x, 0) / (5 r) - (0, 0, 2 - r)."""
    x = np.atleast_2d(x)
    r = np.hypot(x[:, 0], x[:, 1])
    safe = np.where(r > 1e-14, r, 1.0)
    scale = np.where(r > 1e-14, 1.0 / (5.0 * safe), 0.0)
    return np.column_stack([-x[:, 1] * scale, x[:, 0] * scale, -(2.0 - r)])


def _on_plane(axis: int, value: float) -> Callable[[np.ndarray], np.ndarray]:
    def where(x: np.ndarray) -> np.ndarray:
        return np.abs(np.atleast_2d(x)[:, axis] - value) < 1e-9

    return where


def elasticity_problem(config: RunConfig, n: Optional[int] = None) -> ProblemDefinition:
    n = config.elasticity_n if n is None else n
    w = ELASTICITY_HALF_WIDTH
    background = box_mesh((-w, -w, -w), (w, w, w), (n, n, n))
    overlapping = propeller_mesh(config.propeller_cells)
    materials = MaterialParams.from_ratio(config.E1, config.E2_ratio, config.nu1, config.nu2)
    _log.info(
        "Elasticity problem: n=%d, %d + %d cells, E=%s", n, background.num_cells, overlapping.num_cells, materials.E
    )
    return ProblemDefinition(
        name="elasticity",
        background=background,
        overlapping=overlapping,
        form=ElasticityForm(materials, flux_side=config.elasticity_flux_side),
        dirichlet=(DirichletCondition(0.0, where=_on_plane(2, -w)),),
        neumann=(NeumannCondition(top_traction, where=_on_plane(2, w)),),
        flux_side=config.elasticity_flux_side,
        materials=materials,
    )


def make_problem(config: RunConfig, name: str, n: int) -> ProblemDefinition:
    if name == "poisson":
        return poisson_problem(config, n)
    return elasticity_problem(config, n)
