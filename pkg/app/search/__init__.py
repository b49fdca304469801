from .aabb_tree import (
    AabbTree,
    CollisionRelation,
    RayCrossings,
    build_tree,
    count_ray_crossings,
    point_inside_surface,
    query_box,
    ray_directions,
    traverse_pair,
    tree_for_cells,
    tree_for_surface,
    write_tree_vtk,
)

__all__ = [
    "AabbTree",
    "CollisionRelation",
    "RayCrossings",
    "build_tree",
    "count_ray_crossings",
    "point_inside_surface",
    "query_box",
    "ray_directions",
    "traverse_pair",
    "tree_for_cells",
    "tree_for_surface",
    "write_tree_vtk",
]
