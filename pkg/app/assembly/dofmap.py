# app/assembly/dofmap.py

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from app.backends.sparse import SparseMatrix
from app.meshing.mesh_io import write_vtk
from app.meshing.tet_mesh import TetMesh

_log = logging.getLogger(__name__)

BACKGROUND = 0
OVERLAPPING = 1


@dataclass(frozen=True)
class DofMap:
    """
    Global numbering of the direct-sum P1 space: every background dof first,
    then every overlapping dof. Within a mesh, dof = value_dim * vertex + c.

    Attributes:
        num_background_vertices: Vertices of the background mesh.
        num_overlapping_vertices: Vertices of the overlapping mesh (0 for a single mesh).
        value_dim: 1 for scalar problems, 3 for elasticity.
        active: Per-dof flag; a dof is active iff it touches a cell with volume or interface terms.
    """

    num_background_vertices: int
    num_overlapping_vertices: int = 0
    value_dim: int = 1
    active: Optional[np.ndarray] = field(default=None, compare=False)

    @property
    def num_dofs(self) -> int:
        return self.value_dim * (self.num_background_vertices + self.num_overlapping_vertices)

    @property
    def num_active(self) -> int:
        return self.num_dofs if self.active is None else int(np.count_nonzero(self.active))

    def offset(self, mesh_index: int) -> int:
        return 0 if mesh_index == BACKGROUND else self.value_dim * self.num_background_vertices

    def dof_range(self, mesh_index: int) -> range:
        start = self.offset(mesh_index)
        count = self.num_background_vertices if mesh_index == BACKGROUND else self.num_overlapping_vertices
        return range(start, start + self.value_dim * count)

    def vertex_dofs(self, mesh_index: int, vertices: np.ndarray) -> np.ndarray:
        """Dofs of the given vertices, shape vertices.shape + (value_dim,)."""
        v = np.asarray(vertices, dtype=np.int64)
        return self.offset(mesh_index) + self.value_dim * v[..., None] + np.arange(self.value_dim)

    def cell_dofs(self, mesh_index: int, cells: np.ndarray) -> np.ndarray:
        """Vertex-major local dofs of (m, 4) cells: shape (m, 4 * value_dim)."""
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 4)
        return self.vertex_dofs(mesh_index, cells).reshape(len(cells), -1)

    def with_active_cells(self, background: TetMesh, background_mask: np.ndarray, overlapping: Optional[TetMesh]) -> "DofMap":
        """Activate the dofs of the masked background cells and of every overlapping cell."""
        active = np.zeros(self.num_dofs, dtype=bool)
        active[self.cell_dofs(BACKGROUND, background.cells[np.asarray(background_mask, dtype=bool)]).ravel()] = True
        if overlapping is not None and overlapping.num_cells:
            active[self.cell_dofs(OVERLAPPING, overlapping.cells).ravel()] = True
        return replace(self, active=active)


@dataclass(frozen=True, eq=False)
class NitscheSystem:
    """
    Assembled linear system over active and inactive dofs.

    Attributes:
        matrix: Sparse symmetric matrix.
        rhs: Right-hand side.
        gamma: Penalty parameter used for the interface terms.
        dofmap: Numbering of the unknowns.
        inactive_rows: Rows turned into identity rows by `ident_zeros`.
        constrained: Dofs eliminated by Dirichlet conditions.
    """

    matrix: SparseMatrix
    rhs: np.ndarray
    gamma: float
    dofmap: DofMap
    inactive_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def updated(self, **changes) -> "NitscheSystem":
        return replace(self, **changes)


def distribute_solution(x: np.ndarray, dofmap: DofMap) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split a global vector into nodal arrays of the background and the
    overlapping mesh, shaped (n,) for scalars and (n, value_dim) otherwise.
    """
    x = np.asarray(x, dtype=float)
    parts = []
    for mesh_index in (BACKGROUND, OVERLAPPING):
        r = dofmap.dof_range(mesh_index)
        block = x[r.start:r.stop]
        parts.append(block if dofmap.value_dim == 1 else block.reshape(-1, dofmap.value_dim))
    return parts[0], parts[1]


def write_solution_vtk(
    x: np.ndarray,
    dofmap: DofMap,
    background: TetMesh,
    overlapping: TetMesh,
    out_dir: Union[str, Path],
    prefix: str = "solution",
    extra_background: Optional[Dict[str, np.ndarray]] = None,
) -> Tuple[Path, Path]:
    """Write u_background and u_overlapping as point data, one VTK file per mesh."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    u0, u2 = distribute_solution(x, dofmap)
    path0 = out / f"{prefix}_background.vtk"
    path2 = out / f"{prefix}_overlapping.vtk"
    write_vtk(background, path0, point_data={"u_background": u0}, cell_data=extra_background)
    write_vtk(overlapping, path2, point_data={"u_overlapping": u2})
    return path0, path2
