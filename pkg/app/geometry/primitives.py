# app/geometry/primitives.py

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import InvalidArgumentError

_log = logging.getLogger(__name__)

# Relative geometric tolerance: scaled by the diameter of the entity at hand.
EPS_GEOM = 1e-10


def as_points(points: Iterable) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 3)
    return arr.reshape(-1, 3)


# ──────────────────────────────────────────────────────────────────────────────
# Boxes and planes
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Aabb:
    """Axis aligned bounding box, closed."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.min, dtype=float).reshape(3)
        hi = np.asarray(self.max, dtype=float).reshape(3)
        if np.any(lo > hi):
            raise InvalidArgumentError(f"Aabb min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def volume(self) -> float:
        return float(np.prod(self.max - self.min))

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    def contains(self, other: "Aabb") -> bool:
        return bool(np.all(self.min <= other.min) and np.all(other.max <= self.max))

    def contains_point(self, point: Sequence[float]) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(self.min <= p) and np.all(p <= self.max))

    def overlaps(self, other: "Aabb") -> bool:
        return bool(np.all(self.min <= other.max) and np.all(other.min <= self.max))


def bbox_of(points: Iterable) -> Aabb:
    """Componentwise min/max box of a point set."""
    pts = as_points(points)
    return Aabb(pts.min(axis=0), pts.max(axis=0))


def enlarge(box: Aabb, eps: float) -> Aabb:
    """Grow a box by `eps` on every side."""
    return Aabb(box.min - eps, box.max + eps)


@dataclass(frozen=True)
class Plane:
    """The plane {x : normal . x = offset}; `normal` has unit length."""

    normal: np.ndarray
    offset: float

    def __post_init__(self) -> None:
        n = np.asarray(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise InvalidArgumentError("Plane normal must be a unit vector")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_point_normal(cls, point: Sequence[float], normal: Sequence[float]) -> "Plane":
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(n, float(n @ np.asarray(point, dtype=float)))

    def signed_distance(self, points: Iterable) -> np.ndarray:
        return as_points(points) @ self.normal - self.offset

    def flipped(self) -> "Plane":
        return Plane(-self.normal, -self.offset)


# ──────────────────────────────────────────────────────────────────────────────
# Boundary-represented geometry
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PlanarPolygon:
    """
    Convex planar polygon given by a counterclockwise vertex loop (seen from
    the side `normal` points to). An instance without vertices is the empty
    polygon.
    """

    vertices: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        n = np.asarray(self.normal, dtype=float).reshape(3)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "normal", n)

    @classmethod
    def empty(cls, normal: Sequence[float] = (0.0, 0.0, 1.0)) -> "PlanarPolygon":
        return cls(np.zeros((0, 3)), np.asarray(normal, dtype=float))

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def vector_area(self) -> np.ndarray:
        """Area-weighted normal (Newell's formula)."""
        if self.is_empty:
            return np.zeros(3)
        v = self.vertices
        return 0.5 * np.cross(v, np.roll(v, -1, axis=0)).sum(axis=0)

    def area(self) -> float:
        return float(np.linalg.norm(self.vector_area()))

    def centroid(self) -> np.ndarray:
        """Area centroid from a fan triangulation around the first vertex."""
        v = self.vertices
        if self.is_empty:
            return v.mean(axis=0) if len(v) else np.zeros(3)
        a = v[0]
        b, c = v[1:-1], v[2:]
        tri = np.cross(b - a, c - a) @ self.normal * 0.5
        total = tri.sum()
        if total == 0.0:
            return v.mean(axis=0)
        return ((a + b + c) / 3.0 * tri[:, None]).sum(axis=0) / total

    def diameter(self) -> float:
        if len(self.vertices) == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def to_off(self) -> str:
        """OFF text block with a single polygonal face."""
        lines = ["OFF", f"{len(self.vertices)} 1 0"]
        lines += [" ".join(f"{c:.17g}" for c in p) for p in self.vertices]
        lines.append(" ".join([str(len(self.vertices))] + [str(i) for i in range(len(self.vertices))]))
        return "\n".join(lines) + "\n"


# Outward faces of a positively oriented tet, by opposite vertex.
TET_FACETS = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))


@dataclass(frozen=True)
class ConvexPolyhedron:
    """Closed convex polyhedron as a list of outward-oriented faces."""

    faces: Tuple[PlanarPolygon, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "faces", tuple(self.faces))

    @classmethod
    def empty(cls) -> "ConvexPolyhedron":
        return cls(())

    @classmethod
    def from_tet(cls, points: Iterable) -> "ConvexPolyhedron":
        p = as_points(points)
        if len(p) != 4:
            raise InvalidArgumentError("A tetrahedron needs exactly 4 points")
        if np.linalg.det(np.stack([p[1] - p[0], p[2] - p[0], p[3] - p[0]])) < 0.0:
            p = p[[0, 1, 3, 2]]
        faces = []
        for idx in TET_FACETS:
            verts = p[list(idx)]
            n = np.cross(verts[1] - verts[0], verts[2] - verts[0])
            norm = np.linalg.norm(n)
            faces.append(PlanarPolygon(verts, n / norm if norm > 0 else n))
        return cls(tuple(faces))

    @classmethod
    def from_box(cls, lo: Sequence[float], hi: Sequence[float]) -> "ConvexPolyhedron":
        (x0, y0, z0), (x1, y1, z1) = lo, hi
        c = np.array(
            [[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
             [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1]],
            dtype=float,
        )
        quads = {
            (0, 0, -1): (0, 3, 2, 1),
            (0, 0, 1): (4, 5, 6, 7),
            (0, -1, 0): (0, 1, 5, 4),
            (0, 1, 0): (3, 7, 6, 2),
            (-1, 0, 0): (0, 4, 7, 3),
            (1, 0, 0): (1, 2, 6, 5),
        }
        return cls(tuple(PlanarPolygon(c[list(q)], np.array(n, dtype=float)) for n, q in quads.items()))

    @property
    def is_empty(self) -> bool:
        return len(self.faces) < 4

    def points(self) -> np.ndarray:
        if not self.faces:
            return np.zeros((0, 3))
        return np.concatenate([f.vertices for f in self.faces])

    def bbox(self) -> Optional[Aabb]:
        pts = self.points()
        return bbox_of(pts) if len(pts) else None

    def scale(self) -> float:
        """Bounding box diagonal; the length scale used for tolerances."""
        box = self.bbox()
        return box.diagonal if box is not None else 0.0

    def volume(self) -> float:
        if self.is_empty:
            return 0.0
        return float(sum(f.vertices[0] @ f.vector_area() for f in self.faces) / 3.0)

    def divergence_volumes(self) -> np.ndarray:
        """
        Volume from the divergence theorem with the field x_i e_i, one value
        per coordinate direction. The three values agree on a closed polyhedron.
        """
        out = np.zeros(3)
        for f in self.faces:
            if not f.is_empty:
                out += f.vector_area() * f.centroid()
        return out

    def edge_pairing_audit(self, tol: Optional[float] = None) -> bool:
        """True iff every directed edge is matched by exactly one reversed edge."""
        if self.is_empty:
            return len(self.faces) == 0
        tol = EPS_GEOM * max(self.scale(), 1e-300) if tol is None else tol
        welded: List[np.ndarray] = []

        def _index(p: np.ndarray) -> int:
            for i, q in enumerate(welded):
                if np.linalg.norm(p - q) <= tol:
                    return i
            welded.append(p)
            return len(welded) - 1

        directed = {}
        for f in self.faces:
            ids = [_index(p) for p in f.vertices]
            for a, b in zip(ids, ids[1:] + ids[:1]):
                directed[(a, b)] = directed.get((a, b), 0) + 1
        return all(cnt == 1 and directed.get((b, a), 0) == 1 for (a, b), cnt in directed.items())

    def to_off(self) -> str:
        """OFF text block; shared vertices are not merged."""
        pts = self.points()
        lines = ["OFF", f"{len(pts)} {len(self.faces)} 0"]
        lines += [" ".join(f"{c:.17g}" for c in p) for p in pts]
        start = 0
        for f in self.faces:
            k = len(f.vertices)
            lines.append(" ".join([str(k)] + [str(start + i) for i in range(k)]))
            start += k
        return "\n".join(lines) + "\n"
