# app/assembly/boundary_conditions.py

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from app.assembly.dofmap import BACKGROUND, DofMap, NitscheSystem
from app.backends.sparse import SparseMatrix
from app.errors import InvalidArgumentError
from app.meshing.tet_mesh import SurfaceMesh, TetMesh, boundary
from app.quadrature.rules import triangle_rule

_log = logging.getLogger(__name__)

PointPredicate = Callable[[np.ndarray], np.ndarray]
PointField = Union[float, Sequence[float], Callable[[np.ndarray], np.ndarray]]


def everywhere(x: np.ndarray) -> np.ndarray:
    return np.ones(len(x), dtype=bool)


def _evaluate(value: PointField, x: np.ndarray, value_dim: int) -> np.ndarray:
    """Field values (n, value_dim) at points x."""
    out = value(x) if callable(value) else np.broadcast_to(np.asarray(value, dtype=float), (len(x), value_dim))
    out = np.asarray(out, dtype=float)
    return np.broadcast_to(out.reshape(len(x), -1), (len(x), value_dim)).copy()


@dataclass(frozen=True)
class DirichletCondition:
    """
    Prescribed values on the background boundary vertices selected by
    `where`, for the listed components (all by default).
    """

    value: PointField = 0.0
    where: PointPredicate = everywhere
    components: Optional[Tuple[int, ...]] = None

    def dofs_and_values(self, mesh: TetMesh, dofmap: DofMap) -> Tuple[np.ndarray, np.ndarray]:
        vertex_ids = boundary(mesh).vertex_ids
        x = mesh.vertices[vertex_ids]
        keep = np.asarray(self.where(x), dtype=bool).reshape(-1)
        vertex_ids, x = vertex_ids[keep], x[keep]
        values = _evaluate(self.value, x, dofmap.value_dim)
        dofs = dofmap.vertex_dofs(BACKGROUND, vertex_ids)
        comps = list(range(dofmap.value_dim)) if self.components is None else list(self.components)
        return dofs[:, comps].reshape(-1), values[:, comps].reshape(-1)


@dataclass(frozen=True)
class NeumannCondition:
    """Flux/traction data g on the background boundary facets whose centroid satisfies `where`."""

    g: PointField
    where: PointPredicate = everywhere
    degree: int = 2

    def load(
        self,
        mesh: TetMesh,
        dofmap: DofMap,
        skip_cells: Optional[np.ndarray] = None,
        surface: Optional[SurfaceMesh] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Local dofs (k, 3 * value_dim) and load values of every selected facet.
        Facets whose parent cell is flagged in `skip_cells` are left out.
        """
        surf = boundary(mesh) if surface is None else surface
        tris = surf.triangle_points()
        keep = np.asarray(self.where(tris.mean(axis=1)), dtype=bool).reshape(-1)
        if skip_cells is not None:
            keep &= ~np.asarray(skip_cells, dtype=bool)[surf.parent_cell]
        facets = np.nonzero(keep)[0]
        vd = dofmap.value_dim
        dofs = np.zeros((len(facets), 3 * vd), dtype=np.int64)
        loads = np.zeros((len(facets), 3 * vd))
        for row, j in enumerate(facets):
            rule = triangle_rule(tris[j], self.degree)
            phi = _triangle_shape_values(tris[j], rule.points)
            gq = _evaluate(self.g, rule.points, vd)
            loads[row] = np.einsum("q,qa,qd->ad", rule.weights, phi, gq).reshape(-1)
            dofs[row] = dofmap.vertex_dofs(BACKGROUND, surf.vertex_ids[surf.triangles[j]]).reshape(-1)
        return dofs, loads


def _triangle_shape_values(tri: np.ndarray, x: np.ndarray) -> np.ndarray:
    e = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    st, *_ = np.linalg.lstsq(e, (x - tri[0]).T, rcond=None)
    st = st.T
    return np.column_stack([1.0 - st.sum(axis=1), st])


# ──────────────────────────────────────────────────────────────────────────────
# System modifications
# ──────────────────────────────────────────────────────────────────────────────

def ident_zeros(system: NitscheSystem) -> NitscheSystem:
    """Put 1 on the diagonal and 0 in the rhs of every all-zero row."""
    csr = system.matrix.csr
    row_abs = np.asarray(abs(csr).sum(axis=1)).reshape(-1)
    rows = np.nonzero(row_abs == 0.0)[0]
    if rows.size == 0:
        return system
    fix = np.zeros(csr.shape[0])
    fix[rows] = 1.0
    rhs = system.rhs.copy()
    rhs[rows] = 0.0
    _log.debug("ident_zeros: %d empty rows", len(rows))
    return system.updated(matrix=SparseMatrix(csr + sp.diags(fix)), rhs=rhs, inactive_rows=rows)


def apply_dirichlet(system: NitscheSystem, dofs: Sequence[int], values: Sequence[float]) -> NitscheSystem:
    """
    Symmetric elimination: rhs -= A[:, c] * value, zero rows and columns of
    the constrained dofs, unit diagonal, rhs[c] = value.

    Raises:
        InvalidArgumentError: for mismatched lengths, out-of-range dofs or a
            dof constrained twice with different values.
    """
    dofs = np.asarray(dofs, dtype=np.int64).reshape(-1)
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(dofs) != len(values):
        raise InvalidArgumentError(f"{len(dofs)} dofs but {len(values)} values")
    n = system.matrix.dim
    if dofs.size == 0:
        return system
    if dofs.min() < 0 or dofs.max() >= n:
        raise InvalidArgumentError(f"Dirichlet dof outside [0, {n})")

    unique, inverse = np.unique(dofs, return_inverse=True)
    first = np.full(len(unique), np.nan)
    for slot, val in zip(inverse, values):
        if np.isnan(first[slot]):
            first[slot] = val
        elif abs(first[slot] - val) > 1e-12 * max(1.0, abs(val)):
            raise InvalidArgumentError(f"Conflicting Dirichlet values for dof {unique[slot]}: {first[slot]} vs {val}")

    mask = np.zeros(n)
    mask[unique] = 1.0
    lifted = np.zeros(n)
    lifted[unique] = first
    csr = system.matrix.csr
    rhs = system.rhs - csr @ lifted
    keep = sp.diags(1.0 - mask)
    matrix = keep @ csr @ keep + sp.diags(mask)
    rhs[unique] = first
    constrained = np.union1d(system.constrained, unique)
    return system.updated(matrix=SparseMatrix(matrix.tocsr()), rhs=rhs, constrained=constrained)
