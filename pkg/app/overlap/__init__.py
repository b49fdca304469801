from .overlapping_meshes import (
    CellClass,
    CollisionMaps,
    CutCellGeometry,
    InterfaceFacetPart,
    OverlapClass,
    OverlapData,
    build_overlap,
    classify_cells,
    compute_collisions,
    compute_cut_cells,
    compute_interface_decomposition,
    cut_cell_pieces,
    iterate_cut_cells,
    iterate_facet_parts,
    overlap_off_blocks,
    overlap_summary,
)

__all__ = [
    "CellClass",
    "CollisionMaps",
    "CutCellGeometry",
    "InterfaceFacetPart",
    "OverlapClass",
    "OverlapData",
    "build_overlap",
    "classify_cells",
    "compute_collisions",
    "compute_cut_cells",
    "compute_interface_decomposition",
    "cut_cell_pieces",
    "iterate_cut_cells",
    "iterate_facet_parts",
    "overlap_off_blocks",
    "overlap_summary",
]
