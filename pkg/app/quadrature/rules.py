# app/quadrature/rules.py

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np

from app.errors import InvalidArgumentError
from app.geometry.primitives import EPS_GEOM, PlanarPolygon, as_points
from app.quadrature.moments import face_integral

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureRule:
    """Points, weights and the polynomial degree integrated exactly."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise InvalidArgumentError(f"{len(pts)} points but {len(w)} weights")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empty(cls) -> "QuadratureRule":
        return cls(np.zeros((0, 3)), np.zeros(0), 0)

    @property
    def num_points(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """sum_q w_q f(x_q); `f` maps (n, 3) points to (n,) or (n, k) values."""
        if self.num_points == 0:
            return np.asarray(0.0)
        values = np.asarray(f(self.points), dtype=float)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def mapped_to_tet(self, tet: Iterable) -> "QuadratureRule":
        """Push a reference-tetrahedron rule forward to a physical cell."""
        p = as_points(tet)
        jac = (p[1:] - p[0]).T
        det = abs(float(np.linalg.det(jac)))
        return QuadratureRule(p[0] + self.points @ jac.T, self.weights * det, self.exact_degree)


def barycenter_rule(volume: float, centroid: Sequence[float]) -> QuadratureRule:
    """One point at the centroid carrying the whole measure; exact for degree 1."""
    if not volume > 0.0:
        raise InvalidArgumentError(f"Barycenter rule needs a positive measure, got {volume}")
    return QuadratureRule(np.asarray(centroid, dtype=float).reshape(1, 3), np.array([float(volume)]), 1)


def polygon_area_centroid(polygon: PlanarPolygon) -> Tuple[float, np.ndarray, QuadratureRule]:
    """
    Area, centroid and one-point rule of a planar polygon, all from the
    projected boundary integrals used for polyhedron faces.

    Degenerate polygons (area below EPS_GEOM * diameter^2) give area 0 and an
    empty rule.
    """
    verts = polygon.vertices
    if polygon.is_empty:
        return 0.0, verts.mean(axis=0) if len(verts) else np.zeros(3), QuadratureRule.empty()
    normal = polygon.normal
    if np.linalg.norm(normal) <= 1e-300:
        normal = polygon.vector_area()
    if np.linalg.norm(normal) <= 1e-300:
        return 0.0, verts.mean(axis=0), QuadratureRule.empty()
    oriented = PlanarPolygon(verts, normal / np.linalg.norm(normal))

    origin = verts.mean(axis=0)
    local = PlanarPolygon(verts - origin, oriented.normal)
    signed_area = face_integral(local, (0, 0, 0))
    area = abs(signed_area)
    diam = polygon.diameter()
    if area < EPS_GEOM * diam * diam:
        return 0.0, origin, QuadratureRule.empty()
    # Loops ordered clockwise about the normal integrate to negative values.
    sign = 1.0 if signed_area > 0 else -1.0
    first = np.array([face_integral(local, e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]) * sign
    centroid = origin + first / area
    return area, centroid, barycenter_rule(area, centroid)


# ──────────────────────────────────────────────────────────────────────────────
# Fixed rules
# ──────────────────────────────────────────────────────────────────────────────

def _orbit(bary: Sequence[float]) -> np.ndarray:
    return np.array(sorted(set(permutations(bary))), dtype=float)


def _keast_14() -> Tuple[np.ndarray, np.ndarray]:
    a, wa = 0.0927352503108912, 0.01224884051939366
    b, wb = 0.3108859192633006, 0.01878132095300264
    c, wc = 0.4544962958743504, 0.007091003462846911
    d = 0.5 - c
    groups = [
        (_orbit((a, a, a, 1.0 - 3.0 * a)), wa),
        (_orbit((b, b, b, 1.0 - 3.0 * b)), wb),
        (_orbit((c, c, d, d)), wc),
    ]
    bary = np.vstack([g for g, _ in groups])
    weights = np.concatenate([np.full(len(g), w) for g, w in groups])
    return bary, weights


def tet_rule(exact_degree: int) -> QuadratureRule:
    """
    Symmetric rules on the reference tetrahedron with vertices 0, e1, e2, e3:
    1-point (degree 1), 4-point (degree 2), 14-point (degree 4).
    """
    if exact_degree == 1:
        return QuadratureRule(np.full((1, 3), 0.25), np.array([1.0 / 6.0]), 1)
    if exact_degree == 2:
        a, b = 0.5854101966249685, 0.1381966011250105
        bary = _orbit((a, b, b, b))
        return QuadratureRule(bary[:, 1:], np.full(4, 1.0 / 24.0), 2)
    if exact_degree == 4:
        bary, weights = _keast_14()
        return QuadratureRule(bary[:, 1:], weights, 4)
    raise InvalidArgumentError(f"No tetrahedron rule of degree {exact_degree}; use 1, 2 or 4")


def triangle_rule(tri: Iterable, exact_degree: int = 2) -> QuadratureRule:
    """Centroid rule (degree 1) or 3-point interior rule (degree 2) on a physical triangle."""
    p = as_points(tri)
    area = 0.5 * float(np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0])))
    if exact_degree == 1:
        return QuadratureRule(p.mean(axis=0)[None, :], np.array([area]), 1)
    if exact_degree == 2:
        bary = _orbit((2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0))
        return QuadratureRule(bary @ p, np.full(3, area / 3.0), 2)
    raise InvalidArgumentError(f"No triangle rule of degree {exact_degree}; use 1 or 2")
