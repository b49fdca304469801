# app/assembly/error_norms.py

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from app.assembly.dofmap import DofMap, distribute_solution
from app.assembly.forms import barycentric, cell_gradients
from app.meshing.tet_mesh import TetMesh
from app.overlap.overlapping_meshes import OverlapClass, OverlapData, iterate_cut_cells, iterate_facet_parts
from app.quadrature.rules import QuadratureRule, tet_rule

_log = logging.getLogger(__name__)

ExactFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ErrorReport:
    l2: float
    h1: float
    jump: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def _nodal(u: np.ndarray) -> np.ndarray:
    return u[:, None] if u.ndim == 1 else u


def _uncut_errors(
    mesh: TetMesh,
    cells: np.ndarray,
    u: np.ndarray,
    exact_u: ExactFn,
    exact_grad: ExactFn,
    rule: QuadratureRule,
) -> Tuple[float, float]:
    """Squared L2 and H1-seminorm errors over whole cells with a mapped reference rule."""
    if len(cells) == 0:
        return 0.0, 0.0
    vd = u.shape[1]
    points = mesh.cell_points()[cells]
    grads, vol = cell_gradients(points)
    phi = np.column_stack([1.0 - rule.points.sum(axis=1), rule.points])
    jac = points[:, 1:] - points[:, :1]
    xq = points[:, :1] + np.einsum("qj,mjd->mqd", rule.points, jac)
    m, q = xq.shape[:2]
    weights = rule.weights[None, :] * (6.0 * vol)[:, None]

    u_cell = u[mesh.cells[cells]]
    uh = np.einsum("qa,mad->mqd", phi, u_cell)
    ue = np.asarray(exact_u(xq.reshape(-1, 3)), dtype=float).reshape(m, q, vd)
    l2 = float((weights * ((ue - uh) ** 2).sum(axis=2)).sum())

    grad_h = np.einsum("mad,mac->mdc", u_cell, grads)
    ge = np.asarray(exact_grad(xq.reshape(-1, 3)), dtype=float).reshape(m, q, vd, 3)
    h1 = float((weights * ((ge - grad_h[:, None]) ** 2).sum(axis=(2, 3))).sum())
    return l2, h1


def interface_jump_norm(x: np.ndarray, dofmap: DofMap, data: OverlapData, h_weighted: bool = True) -> float:
    """
    sqrt(sum_parts area * |[u_h](centroid)|^2 / h) with h the diameter of the
    background cell of each part; without the 1/h weight when `h_weighted` is False.
    """
    u0, u2 = distribute_solution(x, dofmap)
    u0, u2 = _nodal(u0), _nodal(u2)
    bg, ov = data.background, data.overlapping
    h = bg.cell_diameters()
    total = 0.0
    for part, k, l in iterate_facet_parts(data):
        phi_k = barycentric(ov.cell_points(k), part.centroid)[0]
        phi_l = barycentric(bg.cell_points(l), part.centroid)[0]
        jump = phi_k @ u2[ov.cells[k]] - phi_l @ u0[bg.cells[l]]
        weight = part.area / h[l] if h_weighted else part.area
        total += weight * float(jump @ jump)
    return float(np.sqrt(total))


def compute_errors(
    x: np.ndarray,
    dofmap: DofMap,
    data: OverlapData,
    exact_u: ExactFn,
    exact_grad: ExactFn,
) -> ErrorReport:
    """
    L2 and H1-seminorm errors over the visible background and the whole
    overlapping mesh, plus the h-weighted interface jump norm.

    Uncut cells use the degree-4 rule; cut cells the barycenter rule of their
    visible part; small cut cells are skipped.
    """
    u0, u2 = distribute_solution(x, dofmap)
    u0, u2 = _nodal(u0), _nodal(u2)
    rule = tet_rule(4)
    bg, ov = data.background, data.overlapping
    vd = u0.shape[1]

    l2_bg, h1_bg = _uncut_errors(bg, data.classes.cells(OverlapClass.NOT_OVERLAPPED), u0, exact_u, exact_grad, rule)
    l2_ov, h1_ov = _uncut_errors(ov, np.arange(ov.num_cells), u2, exact_u, exact_grad, rule)

    l2_cut, h1_cut = 0.0, 0.0
    for cell, cut in iterate_cut_cells(data):
        if cut.small or cut.visible_volume <= 0.0:
            continue
        points = bg.cell_points(cell)
        c = cut.visible_centroid[None, :]
        phi = barycentric(points, c)[0]
        u_cell = u0[bg.cells[cell]]
        grads, _ = cell_gradients(points)
        err = np.asarray(exact_u(c), dtype=float).reshape(vd) - phi @ u_cell
        gerr = np.asarray(exact_grad(c), dtype=float).reshape(vd, 3) - u_cell.T @ grads[0]
        l2_cut += cut.visible_volume * float(err @ err)
        h1_cut += cut.visible_volume * float((gerr**2).sum())

    report = ErrorReport(
        l2=float(np.sqrt(l2_bg + l2_ov + l2_cut)),
        h1=float(np.sqrt(h1_bg + h1_ov + h1_cut)),
        jump=interface_jump_norm(x, dofmap, data),
    )
    _log.info("Errors: L2 %.3e, H1 %.3e, jump %.3e", report.l2, report.h1, report.jump)
    return report


def compute_errors_standard(x: np.ndarray, mesh: TetMesh, exact_u: ExactFn, exact_grad: ExactFn, value_dim: int = 1) -> ErrorReport:
    """Errors of a single-mesh solution (no interface)."""
    u = np.asarray(x, dtype=float).reshape(mesh.num_vertices, value_dim)
    l2, h1 = _uncut_errors(mesh, np.arange(mesh.num_cells), u, exact_u, exact_grad, tet_rule(4))
    return ErrorReport(float(np.sqrt(l2)), float(np.sqrt(h1)), 0.0)
