from .moments import MomentSet, face_integral, moment_integrate, multi_indices, polyhedron_moments, tet_moments
from .rules import QuadratureRule, barycenter_rule, polygon_area_centroid, tet_rule, triangle_rule
from .cache import QuadratureCache

__all__ = [
    "MomentSet",
    "QuadratureCache",
    "QuadratureRule",
    "barycenter_rule",
    "face_integral",
    "moment_integrate",
    "multi_indices",
    "polygon_area_centroid",
    "polyhedron_moments",
    "tet_moments",
    "tet_rule",
    "triangle_rule",
]
