# app/quadrature/moments.py

"""
Exact monomial moments of convex polyhedra, reduced to the boundary.

A volume moment becomes a sum of face integrals (divergence theorem with
the symmetric split over the three coordinate fields). Each face integral is
taken in the coordinate plane of largest normal component after
substituting the face plane Z = a + bX + cY, and the projected polygon
integral becomes closed-form edge integrals (Green's theorem).
"""

import itertools
import logging
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.errors import DegenerateGeometryError, InvalidArgumentError
from app.geometry.primitives import EPS_GEOM, ConvexPolyhedron, PlanarPolygon

_log = logging.getLogger(__name__)

MAX_DEGREE = 4

MultiIndex = Tuple[int, int, int]


def multi_indices(degree: int) -> List[MultiIndex]:
    """All (a, b, c) with a + b + c <= degree, graded then lexicographic."""
    out: List[MultiIndex] = []
    for total in range(degree + 1):
        for a in range(total, -1, -1):
            for b in range(total - a, -1, -1):
                out.append((a, b, total - a - b))
    return out


@dataclass(frozen=True)
class MomentSet:
    """Integrals I_alpha = int_P x^alpha dx for every |alpha| <= degree."""

    degree: int
    values: Dict[MultiIndex, float] = field(default_factory=dict)

    @classmethod
    def zeros(cls, degree: int) -> "MomentSet":
        return cls(degree, {a: 0.0 for a in multi_indices(degree)})

    def __getitem__(self, alpha: Sequence[int]) -> float:
        key = tuple(int(a) for a in alpha)
        if key not in self.values:
            raise InvalidArgumentError(f"Moment {key} not available (degree {self.degree})")
        return self.values[key]

    def __add__(self, other: "MomentSet") -> "MomentSet":
        deg = min(self.degree, other.degree)
        return MomentSet(deg, {a: self.values[a] + other.values[a] for a in multi_indices(deg)})

    def __sub__(self, other: "MomentSet") -> "MomentSet":
        deg = min(self.degree, other.degree)
        return MomentSet(deg, {a: self.values[a] - other.values[a] for a in multi_indices(deg)})

    @property
    def volume(self) -> float:
        return self.values[(0, 0, 0)]

    def centroid(self) -> np.ndarray:
        vol = self.volume
        if self.degree < 1 or vol <= 0.0:
            raise InvalidArgumentError("Centroid needs first moments and a positive volume")
        return np.array([self.values[(1, 0, 0)], self.values[(0, 1, 0)], self.values[(0, 0, 1)]]) / vol


# ──────────────────────────────────────────────────────────────────────────────
# Face integrals
# ──────────────────────────────────────────────────────────────────────────────

def _projection(normal: np.ndarray, axis: Optional[int]) -> Tuple[int, int, int]:
    """Cyclic (X, Y, Z) axis order; Z is `axis` or the largest |normal| component."""
    z = int(np.argmax(np.abs(normal))) if axis is None else int(axis)
    return (z + 1) % 3, (z + 2) % 3, z


def _segment_power_integrals(x0: np.ndarray, x1: np.ndarray, y0: np.ndarray, y1: np.ndarray, m: int, n: int) -> np.ndarray:
    """Per edge: int_0^1 X(t)^m Y(t)^n dt along the straight segment."""
    out = np.zeros_like(x0)
    denom = factorial(m + n + 1)
    for i in range(m + 1):
        xi = comb(m, i) * x1**i * x0 ** (m - i)
        for j in range(n + 1):
            w = factorial(i + j) * factorial(m + n - i - j) / denom
            out += w * comb(n, j) * xi * y1**j * y0 ** (n - j)
    return out


def _planar_moments(xy: np.ndarray, degree: int) -> Dict[Tuple[int, int], float]:
    """
    Signed int X^p Y^q dX dY over a closed planar loop, for p + q <= degree,
    via int X^p Y^q = loop-integral X^(p+1) Y^q / (p+1) dY.
    """
    x0, y0 = xy[:, 0], xy[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    dy = y1 - y0
    table: Dict[Tuple[int, int], float] = {}
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            seg = _segment_power_integrals(x0, x1, y0, y1, p + 1, q)
            table[(p, q)] = float((dy * seg).sum() / (p + 1))
    return table


def _plane_power(a: float, b: float, c: float, k: int) -> Dict[Tuple[int, int], float]:
    """Coefficients of (a + b X + c Y)^k as {(p, q): coeff}."""
    out: Dict[Tuple[int, int], float] = {}
    for i in range(k + 1):
        for j in range(k + 1 - i):
            coeff = factorial(k) / (factorial(k - i - j) * factorial(i) * factorial(j))
            out[(i, j)] = out.get((i, j), 0.0) + coeff * a ** (k - i - j) * b**i * c**j
    return out


class _FaceIntegrator:
    """Face integrals int_F x^beta dS for one planar face, sharing one projection."""

    def __init__(self, vertices: np.ndarray, normal: np.ndarray, degree: int, axis: Optional[int] = None):
        n_norm = float(np.linalg.norm(normal))
        if n_norm <= 1e-300:
            raise DegenerateGeometryError("Face with vanishing normal")
        n = normal / n_norm
        ix, iy, iz = _projection(n, axis)
        if abs(n[iz]) <= EPS_GEOM:
            raise DegenerateGeometryError(f"Face is perpendicular to projection axis {iz}")
        self.order = (ix, iy, iz)
        self.nz = float(n[iz])
        offset = float(n @ vertices.mean(axis=0))
        # Z = a + b X + c Y on the face plane.
        self.abc = (offset / n[iz], -n[ix] / n[iz], -n[iy] / n[iz])
        self.planar = _planar_moments(vertices[:, [ix, iy]], degree)

    def integrate(self, beta: Sequence[int]) -> float:
        ix, iy, iz = self.order
        bx, by, bz = beta[ix], beta[iy], beta[iz]
        total = 0.0
        for (p, q), coeff in _plane_power(*self.abc, bz).items():
            total += coeff * self.planar[(p + bx, q + by)]
        return total / self.nz


def face_integral(face: PlanarPolygon, beta: Sequence[int], axis: Optional[int] = None) -> float:
    """
    int_F x^beta dS over a planar face, projected along `axis` (default: the
    component of largest |normal|).

    Raises:
        DegenerateGeometryError: for a vanishing normal or a face parallel to `axis`.
    """
    if face.is_empty:
        return 0.0
    integrator = _FaceIntegrator(face.vertices, face.normal, int(sum(beta)), axis)
    return integrator.integrate(tuple(int(b) for b in beta))


# ──────────────────────────────────────────────────────────────────────────────
# Volume moments
# ──────────────────────────────────────────────────────────────────────────────

def _shift_moments(local: Mapping[MultiIndex, float], origin: np.ndarray, degree: int) -> Dict[MultiIndex, float]:
    """Moments about 0 from moments about `origin` (binomial expansion of (y + c)^alpha)."""
    out: Dict[MultiIndex, float] = {}
    for alpha in multi_indices(degree):
        total = 0.0
        for beta in itertools.product(*(range(a + 1) for a in alpha)):
            w = 1.0
            for k in range(3):
                w *= comb(alpha[k], beta[k]) * origin[k] ** (alpha[k] - beta[k])
            total += w * local[beta]
        out[alpha] = total
    return out


def polyhedron_moments(poly: ConvexPolyhedron, degree: int) -> MomentSet:
    """
    Moments I_alpha(P), |alpha| <= degree, of a closed polyhedron with
    outward faces.

    int_P x^alpha = 1/3 sum_i 1/(alpha_i + 1) sum_F n_i int_F x^(alpha + e_i) dS

    Face data are translated to a local origin (vertex mean) first and the
    result is shifted back.

    Raises:
        InvalidArgumentError: for degree outside 0..4.
        DegenerateGeometryError: for a face with vanishing normal.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise InvalidArgumentError(f"Moment degree must be in 0..{MAX_DEGREE}, got {degree}")
    if poly.is_empty:
        return MomentSet.zeros(degree)

    origin = poly.points().mean(axis=0)
    local = {alpha: 0.0 for alpha in multi_indices(degree)}
    for face in poly.faces:
        if face.is_empty:
            continue
        n = face.normal / np.linalg.norm(face.normal)
        integrator = _FaceIntegrator(face.vertices - origin, n, degree + 1)
        for alpha in local:
            acc = 0.0
            for i in range(3):
                if n[i] == 0.0:
                    continue
                raised = list(alpha)
                raised[i] += 1
                acc += n[i] * integrator.integrate(raised) / (alpha[i] + 1)
            local[alpha] += acc / 3.0

    return MomentSet(degree, _shift_moments(local, origin, degree))


def moment_integrate(coeffs: Mapping[Sequence[int], float], moments: MomentSet) -> float:
    """sum_alpha f_alpha I_alpha for a polynomial given by monomial coefficients."""
    return float(sum(c * moments[alpha] for alpha, c in coeffs.items()))


def tet_moments(points: Iterable, degree: int = 1) -> MomentSet:
    """Moments of a single tetrahedron."""
    return polyhedron_moments(ConvexPolyhedron.from_tet(points), degree)
