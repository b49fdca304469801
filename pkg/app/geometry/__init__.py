from .primitives import (
    EPS_GEOM,
    Aabb,
    ConvexPolyhedron,
    PlanarPolygon,
    Plane,
    bbox_of,
    enlarge,
)
from .clipping import (
    clip_polyhedron_halfspace,
    clip_triangle_tet,
    tet_halfspaces,
    tet_tet_intersection,
)
from .predicates import RayHit, ray_triangle_intersect, tet_triangle_intersects

__all__ = [
    "EPS_GEOM",
    "Aabb",
    "ConvexPolyhedron",
    "PlanarPolygon",
    "Plane",
    "RayHit",
    "bbox_of",
    "clip_polyhedron_halfspace",
    "clip_triangle_tet",
    "enlarge",
    "ray_triangle_intersect",
    "tet_halfspaces",
    "tet_tet_intersection",
    "tet_triangle_intersects",
]
