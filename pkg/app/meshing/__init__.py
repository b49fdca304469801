from .tet_mesh import (
    SurfaceMesh,
    TetMesh,
    boundary,
    boundary_vertex_ids,
    box_mesh,
    extract_submesh,
    rigid_motion,
    rotation_matrix,
    transform,
    unit_cube_mesh,
)
from .mesh_io import read_mesh, write_mesh, write_off_blocks, write_vtk

__all__ = [
    "SurfaceMesh",
    "TetMesh",
    "boundary",
    "boundary_vertex_ids",
    "box_mesh",
    "extract_submesh",
    "read_mesh",
    "rigid_motion",
    "rotation_matrix",
    "transform",
    "unit_cube_mesh",
    "write_mesh",
    "write_off_blocks",
    "write_vtk",
]
