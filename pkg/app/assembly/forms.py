# app/assembly/forms.py

"""
Local P1 tensors for the Poisson and linear elasticity forms.

Shapes follow the number of cells m and local dofs k = 4 * value_dim, with
vector dofs ordered vertex-major (3 * a + component).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from app.errors import DegenerateGeometryError, InternalConsistencyError, InvalidArgumentError
from app.geometry.primitives import EPS_GEOM, as_points, bbox_of
from app.overlap.overlapping_meshes import CutCellGeometry, InterfaceFacetPart
from app.quadrature.rules import QuadratureRule, barycenter_rule, tet_rule

_log = logging.getLogger(__name__)

SourceFn = Callable[[np.ndarray], np.ndarray]

# Gradients of the reference shape functions 1 - x - y - z, x, y, z.
_REF_GRADIENTS = np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def cell_gradients(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Constant P1 gradients and volumes of (m, 4, 3) cells.

    Returns:
        (G, vol): G has shape (m, 4, 3), G[c, a] = grad phi_a on cell c.

    Raises:
        DegenerateGeometryError: for cells with no volume.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 4, 3)
    jac = p[:, 1:] - p[:, :1]
    det = np.linalg.det(jac)
    diam = np.linalg.norm(p.max(axis=1) - p.min(axis=1), axis=1)
    flat = np.nonzero(np.abs(det) <= EPS_GEOM * diam**3)[0]
    if flat.size:
        raise DegenerateGeometryError("Degenerate cell in assembly", entities=flat[:5].tolist())
    rhs = np.broadcast_to(_REF_GRADIENTS.T, (len(p), 3, 4))
    grads = np.linalg.solve(jac, rhs).transpose(0, 2, 1)
    return grads, np.abs(det) / 6.0


def barycentric(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """P1 shape function values (n, 4) at points x of one cell."""
    p = as_points(points)
    xi = np.linalg.solve((p[1:] - p[0]).T, (as_points(x) - p[0]).T).T
    return np.column_stack([1.0 - xi.sum(axis=1), xi])


def _shape_values_in_rule(rule: QuadratureRule) -> np.ndarray:
    xi = rule.points
    return np.column_stack([1.0 - xi.sum(axis=1), xi])


def _as_values(values: np.ndarray, n: int, value_dim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n * value_dim, float(arr))
    return arr.reshape(n, value_dim)


# ──────────────────────────────────────────────────────────────────────────────
# Materials and forms
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MaterialParams:
    """
    Young's moduli and Poisson ratios per subdomain: index 0 is the visible
    background domain, index 1 the overlapping domain.
    """

    E: Tuple[float, float]
    nu: Tuple[float, float]

    def __post_init__(self) -> None:
        if len(self.E) != 2 or len(self.nu) != 2:
            raise InvalidArgumentError("Materials need (background, overlapping) values")
        for e, nu in zip(self.E, self.nu):
            if not e > 0.0:
                raise InvalidArgumentError(f"Young's modulus must be positive, got {e}")
            if not -1.0 < nu < 0.5:
                raise InvalidArgumentError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")

    @classmethod
    def from_ratio(cls, E1: float, ratio: float, nu1: float, nu2: float) -> "MaterialParams":
        """E1 and nu1 on the overlapping domain; the background gets E1 * ratio and nu2."""
        return cls((float(E1) * float(ratio), float(E1)), (float(nu2), float(nu1)))

    def mu(self, subdomain: int) -> float:
        return self.E[subdomain] / (2.0 + 2.0 * self.nu[subdomain])

    def lam(self, subdomain: int) -> float:
        e, nu = self.E[subdomain], self.nu[subdomain]
        return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    def elasticity_matrix(self, subdomain: int) -> np.ndarray:
        """6 x 6 Hooke matrix in Voigt order xx, yy, zz, yz, xz, xy (engineering shear)."""
        mu, lam = self.mu(subdomain), self.lam(subdomain)
        d = np.zeros((6, 6))
        d[:3, :3] = lam
        d[np.arange(3), np.arange(3)] += 2.0 * mu
        d[np.arange(3, 6), np.arange(3, 6)] = mu
        return d


class PoissonForm:
    """-div(k grad u) = f with the flux average taken from one side of the interface."""

    value_dim = 1

    def __init__(self, conductivity: Tuple[float, float] = (1.0, 1.0), flux_side: int = 2) -> None:
        if flux_side not in (1, 2):
            raise InvalidArgumentError(f"flux_side must be 1 or 2, got {flux_side}")
        self.conductivity = tuple(float(k) for k in conductivity)
        self.flux_side = flux_side

    def stiffness(self, grads: np.ndarray, vol: np.ndarray, subdomain: int = 0) -> np.ndarray:
        return self.conductivity[subdomain] * vol[:, None, None] * np.einsum("mad,mbd->mab", grads, grads)

    def flux(self, grads: np.ndarray, normal: np.ndarray, subdomain: int) -> np.ndarray:
        """(1, 4) normal derivatives k grad(phi_a) . n."""
        return self.conductivity[subdomain] * (grads @ normal)[None, :]

    def penalty_scale(self) -> float:
        return self.conductivity[self.flux_side - 1]

    def trace(self, phi: np.ndarray) -> np.ndarray:
        """(1, 4) shape function values at one point."""
        return np.asarray(phi, dtype=float)[None, :]


class ElasticityForm:
    """Linear elasticity with per-subdomain Hooke's law."""

    value_dim = 3

    def __init__(self, materials: MaterialParams, flux_side: int = 1) -> None:
        if flux_side not in (1, 2):
            raise InvalidArgumentError(f"flux_side must be 1 or 2, got {flux_side}")
        self.materials = materials
        self.flux_side = flux_side

    @staticmethod
    def strain_operator(grads: np.ndarray) -> np.ndarray:
        """(m, 6, 12) strain-displacement matrices B."""
        g = np.asarray(grads, dtype=float).reshape(-1, 4, 3)
        b = np.zeros((len(g), 6, 12))
        for a in range(4):
            gx, gy, gz = g[:, a, 0], g[:, a, 1], g[:, a, 2]
            c = 3 * a
            b[:, 0, c] = gx
            b[:, 1, c + 1] = gy
            b[:, 2, c + 2] = gz
            b[:, 3, c + 1], b[:, 3, c + 2] = gz, gy
            b[:, 4, c], b[:, 4, c + 2] = gz, gx
            b[:, 5, c], b[:, 5, c + 1] = gy, gx
        return b

    def stiffness(self, grads: np.ndarray, vol: np.ndarray, subdomain: int = 0) -> np.ndarray:
        b = self.strain_operator(grads)
        d = self.materials.elasticity_matrix(subdomain)
        return vol[:, None, None] * np.einsum("msi,st,mtj->mij", b, d, b)

    def flux(self, grads: np.ndarray, normal: np.ndarray, subdomain: int) -> np.ndarray:
        """
        (3, 12) traction operator: row i, column 3a + d holds the i-th component
        of sigma(phi_a e_d) n.
        """
        mu, lam = self.materials.mu(subdomain), self.materials.lam(subdomain)
        n = np.asarray(normal, dtype=float)
        g = np.asarray(grads, dtype=float).reshape(4, 3)
        dn = g @ n
        t = np.zeros((3, 12))
        for a in range(4):
            block = mu * (dn[a] * np.eye(3) + np.outer(g[a], n)) + lam * np.outer(n, g[a])
            t[:, 3 * a:3 * a + 3] = block
        return t

    def penalty_scale(self) -> float:
        """2 mu + lambda of the flux side."""
        side = self.flux_side - 1
        return 2.0 * self.materials.mu(side) + self.materials.lam(side)

    def trace(self, phi: np.ndarray) -> np.ndarray:
        """(3, 12) values of the vector shape functions at one point."""
        return np.kron(np.asarray(phi, dtype=float)[None, :], np.eye(3))


Form = Union[PoissonForm, ElasticityForm]


# ──────────────────────────────────────────────────────────────────────────────
# Local tensors
# ──────────────────────────────────────────────────────────────────────────────

def load_vectors(points: np.ndarray, form: Form, f: Optional[SourceFn], rule: QuadratureRule) -> np.ndarray:
    """(m, k) load vectors int f . phi over whole cells with a reference rule."""
    p = np.asarray(points, dtype=float).reshape(-1, 4, 3)
    vd = form.value_dim
    if f is None:
        return np.zeros((len(p), 4 * vd))
    phi = _shape_values_in_rule(rule)
    jac = p[:, 1:] - p[:, :1]
    xq = p[:, :1] + np.einsum("qj,mjd->mqd", rule.points, jac)
    det = np.abs(np.linalg.det(jac))
    fq = _as_values(f(xq.reshape(-1, 3)), xq.shape[0] * xq.shape[1], vd).reshape(len(p), -1, vd)
    loads = np.einsum("q,qa,mqd->mad", rule.weights, phi, fq) * det[:, None, None]
    return loads.reshape(len(p), 4 * vd)


def assemble_standard_cell(
    points: np.ndarray,
    form: Form,
    f: Optional[SourceFn] = None,
    rule: Optional[QuadratureRule] = None,
    subdomain: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Local stiffness (exact, constant gradients) and load (by `rule`, degree 2
    by default) on one uncut cell.
    """
    grads, vol = cell_gradients(points)
    rule = tet_rule(2) if rule is None else rule
    return form.stiffness(grads, vol, subdomain)[0], load_vectors(points, form, f, rule)[0]


def assemble_cut_cell(
    points: np.ndarray,
    cut: CutCellGeometry,
    form: Form,
    f: Optional[SourceFn] = None,
    subdomain: int = 0,
    rule: Optional[QuadratureRule] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stiffness scaled to the visible volume and a barycenter-rule load at the
    visible centroid; small cells contribute nothing.
    """
    k = 4 * form.value_dim
    if cut.small or cut.visible_volume <= 0.0:
        return np.zeros((k, k)), np.zeros(k)
    grads, vol = cell_gradients(points)
    stiff = form.stiffness(grads, np.array([cut.visible_volume]), subdomain)[0]
    if f is None:
        return stiff, np.zeros(k)
    if rule is None:
        rule = barycenter_rule(cut.visible_volume, cut.visible_centroid)
    phi = barycentric(points, rule.points)[0]
    fval = _as_values(f(rule.points), 1, form.value_dim)[0]
    load = rule.weights[0] * np.outer(phi, fval).reshape(-1)
    return stiff, load


def assemble_interface_part(
    part: InterfaceFacetPart,
    points_k: np.ndarray,
    points_l: np.ndarray,
    form: Form,
    gamma: float,
    h_part: float,
    rule: Optional[QuadratureRule] = None,
) -> np.ndarray:
    """
    Coupling block over the dofs of overlapping cell k followed by background
    cell l, evaluated with the part's centroid rule:

        -area (J^T D + D^T J) + gamma * s / h * area * J^T J

    with J the jump [v] = v_k - v_l at the centroid, D the flux of the side
    selected by the form and s its penalty scale (1 for unit conductivity).
    A cached one-point `rule` replaces the part centroid and area when given.

    Raises:
        InternalConsistencyError: if the part's centroid is not in cell l.
    """
    c = part.centroid if rule is None else rule.points[0]
    area = part.area if rule is None else float(rule.weights[0])
    box = bbox_of(points_l)
    tol = 1e3 * EPS_GEOM * box.diagonal
    if np.any(c < box.min - tol) or np.any(c > box.max + tol):
        raise InternalConsistencyError(f"Facet part {part.facet_index} does not touch background cell {part.cell_l}")

    phi_k = barycentric(points_k, c)[0]
    phi_l = barycentric(points_l, c)[0]
    jump = np.hstack([form.trace(phi_k), -form.trace(phi_l)])

    if form.flux_side == 2:
        grads, _ = cell_gradients(points_k)
        side = form.flux(grads[0], part.normal, 1)
        flux = np.hstack([side, np.zeros_like(side)])
    else:
        grads, _ = cell_gradients(points_l)
        side = form.flux(grads[0], part.normal, 0)
        flux = np.hstack([np.zeros_like(side), side])

    penalty = gamma * form.penalty_scale() / h_part
    return -area * (jump.T @ flux + flux.T @ jump) + penalty * area * (jump.T @ jump)
