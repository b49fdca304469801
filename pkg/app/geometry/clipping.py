# app/geometry/clipping.py

import logging
from typing import Iterable, List, Tuple

import numpy as np

from app.errors import DegenerateGeometryError
from app.geometry.primitives import (
    EPS_GEOM,
    ConvexPolyhedron,
    PlanarPolygon,
    Plane,
    as_points,
    bbox_of,
)

_log = logging.getLogger(__name__)


def tet_halfspaces(tet: Iterable) -> Tuple[Plane, Plane, Plane, Plane]:
    """
    The four outward face planes of a tetrahedron, ordered by opposite vertex.

    A point x lies in the closed tet iff `plane.normal @ x <= plane.offset`
    for all four planes.

    Raises:
        DegenerateGeometryError: if the tet is flat.
    """
    p = as_points(tet)
    scale = bbox_of(p).diagonal
    volume = np.linalg.det(np.stack([p[1] - p[0], p[2] - p[0], p[3] - p[0]])) / 6.0
    if abs(volume) <= (EPS_GEOM * scale) ** 3:
        raise DegenerateGeometryError(f"Degenerate tetrahedron (volume {volume:.3e})")

    planes = []
    for opposite in range(4):
        a, b, c = p[[i for i in range(4) if i != opposite]]
        n = np.cross(b - a, c - a)
        n = n / np.linalg.norm(n)
        offset = float(n @ a)
        if n @ p[opposite] > offset:
            n, offset = -n, -offset
        planes.append(Plane(n, offset))
    return tuple(planes)  # type: ignore[return-value]


# ──────────────────────────────────────────────────────────────────────────────
# Loop clipping helpers
# ──────────────────────────────────────────────────────────────────────────────

def _edge_point(p: np.ndarray, q: np.ndarray, dp: float, dq: float) -> np.ndarray:
    # Canonical endpoint order so both faces sharing an edge produce bitwise-equal points.
    if tuple(p) > tuple(q):
        p, q, dp, dq = q, p, dq, dp
    return p + (dp / (dp - dq)) * (q - p)


def _clip_loop(verts: np.ndarray, d: np.ndarray) -> List[Tuple[np.ndarray, bool]]:
    """Sutherland-Hodgman step keeping d <= 0; returns (point, on_plane) pairs."""
    out: List[Tuple[np.ndarray, bool]] = []
    k = len(verts)
    for i in range(k):
        j = (i + 1) % k
        dp, dq = d[i], d[j]
        if dp <= 0.0:
            out.append((verts[i], dp == 0.0))
        if (dp < 0.0 < dq) or (dq < 0.0 < dp):
            out.append((_edge_point(verts[i], verts[j], dp, dq), True))
    return out


def _weld_loop(loop: List[Tuple[np.ndarray, bool]], tol: float) -> List[Tuple[np.ndarray, bool]]:
    out: List[Tuple[np.ndarray, bool]] = []
    for p, on in loop:
        if out and np.linalg.norm(p - out[-1][0]) <= tol:
            out[-1] = (out[-1][0], out[-1][1] or on)
            continue
        out.append((p, on))
    while len(out) > 1 and np.linalg.norm(out[0][0] - out[-1][0]) <= tol:
        tail = out.pop()
        out[0] = (out[0][0], out[0][1] or tail[1])
    return out


def _snapped_distances(plane: Plane, points: np.ndarray, tol: float) -> np.ndarray:
    d = plane.signed_distance(points)
    d[np.abs(d) <= tol] = 0.0
    return d


def _cap_polygon(points: List[np.ndarray], plane: Plane, tol: float) -> PlanarPolygon:
    """Order the on-plane points counterclockwise around the plane normal."""
    unique: List[np.ndarray] = []
    for p in points:
        if all(np.linalg.norm(p - q) > tol for q in unique):
            unique.append(p)
    if len(unique) < 3:
        return PlanarPolygon.empty(plane.normal)

    pts = np.array(unique)
    n = plane.normal
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    rel = pts - pts.mean(axis=0)
    order = np.argsort(np.arctan2(rel @ v, rel @ u))
    cap = PlanarPolygon(pts[order], n)
    if cap.area() <= tol * tol:
        return PlanarPolygon.empty(n)
    return cap


# ──────────────────────────────────────────────────────────────────────────────
# Public clipping operations
# ──────────────────────────────────────────────────────────────────────────────

def clip_polyhedron_halfspace(poly: ConvexPolyhedron, plane: Plane) -> ConvexPolyhedron:
    """
    Intersect a convex polyhedron with the half-space {normal . x <= offset}.

    Each face loop is clipped, and a cap face lying in the plane closes the
    result when the plane cuts the interior. Returns the input object when the
    polyhedron lies inside the half-space and an empty polyhedron when it lies
    outside (touching counts as outside).
    """
    if poly.is_empty:
        return ConvexPolyhedron.empty()
    tol = EPS_GEOM * poly.scale()
    dist = plane.signed_distance(poly.points())
    if dist.max() <= tol:
        return poly
    if dist.min() >= -tol:
        return ConvexPolyhedron.empty()

    faces: List[PlanarPolygon] = []
    cap_points: List[np.ndarray] = []
    for face in poly.faces:
        d = _snapped_distances(plane, face.vertices, tol)
        if np.all(d <= 0.0):
            faces.append(face)
            cap_points.extend(face.vertices[d == 0.0])
            continue
        if np.all(d >= 0.0):
            cap_points.extend(face.vertices[d == 0.0])
            continue
        loop = _weld_loop(_clip_loop(face.vertices, d), tol)
        cap_points.extend(p for p, on in loop if on)
        if len(loop) >= 3:
            faces.append(PlanarPolygon(np.array([p for p, _ in loop]), face.normal))

    cap = _cap_polygon(cap_points, plane, tol)
    if not cap.is_empty:
        faces.append(cap)
    if len(faces) < 4:
        return ConvexPolyhedron.empty()
    return ConvexPolyhedron(tuple(faces))


def tet_tet_intersection(a: Iterable, b: Iterable) -> ConvexPolyhedron:
    """Tet `a` clipped successively by the four half-spaces of tet `b`."""
    pa, pb = as_points(a), as_points(b)
    if not bbox_of(pa).overlaps(bbox_of(pb)):
        return ConvexPolyhedron.empty()
    poly = ConvexPolyhedron.from_tet(pa)
    for plane in tet_halfspaces(pb):
        poly = clip_polyhedron_halfspace(poly, plane)
        if poly.is_empty:
            break
    return poly


def clip_triangle_tet(tri: Iterable, tet: Iterable) -> PlanarPolygon:
    """
    The convex polygon tri ∩ tet, coplanar with the triangle and carrying its
    normal.

    A triangle lying in the plane of a tet face belongs to the tet only when
    its normal points into the tet; the neighbour across that face gets it
    otherwise, so shared faces are never counted twice.
    """
    t = as_points(tri)
    n = np.cross(t[1] - t[0], t[2] - t[0])
    norm = np.linalg.norm(n)
    if norm == 0.0:
        return PlanarPolygon.empty()
    normal = n / norm
    pt = as_points(tet)
    if not bbox_of(t).overlaps(bbox_of(pt)):
        return PlanarPolygon.empty(normal)

    scale = max(bbox_of(t).diagonal, bbox_of(pt).diagonal)
    tol = EPS_GEOM * scale
    loop = t
    for plane in tet_halfspaces(pt):
        d = _snapped_distances(plane, loop, tol)
        if np.all(d == 0.0):
            if normal @ plane.normal > 0.0:
                return PlanarPolygon.empty(normal)
            continue
        if np.all(d <= 0.0):
            continue
        if np.all(d >= 0.0):
            return PlanarPolygon.empty(normal)
        clipped = _weld_loop(_clip_loop(loop, d), tol)
        if len(clipped) < 3:
            return PlanarPolygon.empty(normal)
        loop = np.array([p for p, _ in clipped])

    poly = PlanarPolygon(loop, normal)
    if poly.area() <= tol * scale:
        return PlanarPolygon.empty(normal)
    return poly
