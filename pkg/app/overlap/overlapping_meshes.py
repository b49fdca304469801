# app/overlap/overlapping_meshes.py

"""
Geometric description of one mesh overlapping another.

`build_overlap` computes, in order:

1. AABB trees over the background cells, the overlapping boundary
   triangles and the overlapping cells.
2. The collision relation between background cells and overlapping boundary
   facets (tree-pair traversal with the tet/triangle separating-axis test)
   and its two map forms.
3. The classification of every background cell as not, completely or
   partially overlapped.
4. The interface decomposition: each boundary facet clipped by each
   colliding background cell.
5. Cut-cell moments of the visible part T minus the overlapping domain,
   by summing T ∩ K over overlapping cells K and subtracting from T.
"""

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from app.errors import DegenerateGeometryError, EmptyMeshError, InvalidArgumentError
from app.geometry.clipping import clip_triangle_tet, tet_tet_intersection
from app.geometry.predicates import tet_triangle_intersects
from app.geometry.primitives import EPS_GEOM, ConvexPolyhedron, PlanarPolygon, bbox_of
from app.meshing.tet_mesh import SurfaceMesh, TetMesh, boundary
from app.quadrature.moments import MomentSet, polyhedron_moments
from app.quadrature.rules import polygon_area_centroid
from app.search.aabb_tree import (
    AabbTree,
    CollisionRelation,
    point_inside_surface,
    query_box,
    traverse_pair,
    tree_for_cells,
    tree_for_surface,
)

_log = logging.getLogger(__name__)

SMALL_CUT_THRESHOLD = 1e-15


class OverlapClass(IntEnum):
    NOT_OVERLAPPED = 0
    COMPLETELY_OVERLAPPED = 1
    PARTIALLY_OVERLAPPED = 2


# ──────────────────────────────────────────────────────────────────────────────
# Data types
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class CollisionMaps:
    """cell -> colliding facets and facet -> colliding cells, both sorted."""

    cell_to_facets: Dict[int, Tuple[int, ...]]
    facet_to_cells: Dict[int, Tuple[int, ...]]

    @classmethod
    def from_relation(cls, relation: CollisionRelation) -> "CollisionMaps":
        c2f: Dict[int, List[int]] = defaultdict(list)
        f2c: Dict[int, List[int]] = defaultdict(list)
        for i, j in relation.pairs.tolist():
            c2f[i].append(j)
            f2c[j].append(i)
        return cls(
            {i: tuple(sorted(v)) for i, v in sorted(c2f.items())},
            {j: tuple(sorted(v)) for j, v in sorted(f2c.items())},
        )

    def pairs(self) -> set:
        return {(i, j) for i, js in self.cell_to_facets.items() for j in js}

    def is_transpose(self) -> bool:
        return self.pairs() == {(i, j) for j, cs in self.facet_to_cells.items() for i in cs}


@dataclass(frozen=True)
class CellClass:
    """One OverlapClass label per background cell."""

    labels: np.ndarray

    def __getitem__(self, cell: int) -> OverlapClass:
        return OverlapClass(int(self.labels[cell]))

    def __len__(self) -> int:
        return len(self.labels)

    def cells(self, label: OverlapClass) -> np.ndarray:
        return np.nonzero(self.labels == int(label))[0]

    def counts(self) -> Dict[str, int]:
        return {c.name.lower(): int(np.count_nonzero(self.labels == int(c))) for c in OverlapClass}


@dataclass(frozen=True)
class InterfaceFacetPart:
    """
    Piece of an overlapping boundary facet inside one background cell.

    `normal` is the outward normal of the overlapping mesh boundary, i.e. it
    points from the overlapping domain into the visible background.
    """

    facet_index: int
    cell_k: int
    cell_l: int
    polygon: PlanarPolygon
    area: float
    centroid: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class CutCellGeometry:
    """Visible (background-side) volume and centroid of a partially overlapped cell."""

    cell_l: int
    visible_volume: float
    visible_centroid: np.ndarray
    covered_volume: float
    small: bool
    pieces: int = 0


@dataclass(frozen=True, eq=False)
class OverlapData:
    background: TetMesh
    overlapping: TetMesh
    surface: SurfaceMesh
    relation: CollisionRelation
    maps: CollisionMaps
    classes: CellClass
    facet_parts: Tuple[InterfaceFacetPart, ...]
    cut_cells: Tuple[CutCellGeometry, ...]
    background_tree: AabbTree
    surface_tree: AabbTree
    overlapping_tree: AabbTree
    timings: Dict[str, float] = field(default_factory=dict)
    _cut_index: Dict[int, CutCellGeometry] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_cut_index", {c.cell_l: c for c in self.cut_cells})

    def cut_cell(self, cell: int) -> Optional[CutCellGeometry]:
        return self._cut_index.get(int(cell))

    def visible_volumes(self) -> np.ndarray:
        """Visible volume of every background cell."""
        vols = np.where(self.classes.labels == OverlapClass.NOT_OVERLAPPED, self.background.cell_volumes(), 0.0)
        for cut in self.cut_cells:
            vols[cut.cell_l] = cut.visible_volume
        return vols

    def contributing_cells(self) -> np.ndarray:
        """Mask of background cells that carry volume terms."""
        mask = self.classes.labels == OverlapClass.NOT_OVERLAPPED
        for cut in self.cut_cells:
            mask[cut.cell_l] = not cut.small
        return mask

    def supporting_cells(self) -> np.ndarray:
        """Mask of background cells that carry volume or interface terms."""
        mask = self.contributing_cells()
        mask[np.fromiter((part.cell_l for part in self.facet_parts), dtype=np.int64)] = True
        return mask

    def interface_area(self) -> float:
        return float(sum(p.area for p in self.facet_parts))


# ──────────────────────────────────────────────────────────────────────────────
# Phases
# ──────────────────────────────────────────────────────────────────────────────

def compute_collisions(background_tree: AabbTree, surface_tree: AabbTree) -> CollisionRelation:
    cells = background_tree.entity_points
    tris = surface_tree.entity_points
    return traverse_pair(
        background_tree,
        surface_tree,
        lambda i, j: tet_triangle_intersects(cells[i], tris[j]),
    )


def classify_cells(
    background: TetMesh,
    relation: CollisionRelation,
    surface_tree: AabbTree,
    seed: int = 0,
) -> CellClass:
    """
    Cells in the collision relation are partially overlapped. Every other
    cell is completely overlapped iff its centroid lies inside the
    overlapping boundary; centroids outside the surface tree's root box are
    not overlapped without ray shooting.

    Raises:
        DegenerateGeometryError: naming the cell whose ray test stayed degenerate.
    """
    labels = np.zeros(background.num_cells, dtype=np.int8)
    if len(relation):
        labels[np.unique(relation.pairs[:, 0])] = OverlapClass.PARTIALLY_OVERLAPPED

    centroids = background.cell_centroids()
    root = surface_tree.root_box()
    in_box = np.all((centroids >= root.min) & (centroids <= root.max), axis=1)
    candidates = np.nonzero(in_box & (labels == OverlapClass.NOT_OVERLAPPED))[0]
    _log.debug("Ray classification of %d candidate cells", len(candidates))

    for cell in candidates:
        try:
            inside = point_inside_surface(surface_tree, centroids[cell], seed=seed)
        except DegenerateGeometryError as exc:
            raise DegenerateGeometryError(f"Cannot classify background cell {cell}: {exc}", entities=[int(cell)]) from exc
        if inside:
            labels[cell] = OverlapClass.COMPLETELY_OVERLAPPED
    return CellClass(labels)


def compute_interface_decomposition(
    overlapping: TetMesh,
    surface: SurfaceMesh,
    facet_to_cells: Dict[int, Tuple[int, ...]],
    background: TetMesh,
) -> List[InterfaceFacetPart]:
    """Clip every boundary facet by each colliding background cell; ordered by (cell_l, facet)."""
    tris = surface.triangle_points()
    normals = surface.normals()
    parts: List[InterfaceFacetPart] = []
    for j, cells in facet_to_cells.items():
        for l in cells:
            poly = clip_triangle_tet(tris[j], background.cell_points(l))
            if poly.is_empty:
                continue
            area, centroid, _ = polygon_area_centroid(poly)
            if area <= 0.0:
                continue
            parts.append(
                InterfaceFacetPart(
                    facet_index=int(j),
                    cell_k=int(surface.parent_cell[j]),
                    cell_l=int(l),
                    polygon=poly,
                    area=area,
                    centroid=centroid,
                    normal=normals[j].copy(),
                )
            )
    parts.sort(key=lambda p: (p.cell_l, p.facet_index))
    return parts


def cut_cell_pieces(background: TetMesh, overlapping: TetMesh, overlapping_tree: AabbTree, cell: int) -> List[ConvexPolyhedron]:
    """Non-empty intersections of background cell `cell` with overlapping cells."""
    tet = background.cell_points(cell)
    pieces = []
    for k in query_box(overlapping_tree, bbox_of(tet)):
        poly = tet_tet_intersection(tet, overlapping.cell_points(int(k)))
        if not poly.is_empty:
            pieces.append(poly)
    return pieces


def compute_cut_cells(
    background: TetMesh,
    overlapping: TetMesh,
    classes: CellClass,
    overlapping_tree: AabbTree,
    small_cut_threshold: float = SMALL_CUT_THRESHOLD,
) -> List[CutCellGeometry]:
    """
    Visible moments of every partially overlapped cell as full-cell moments
    minus the sum over overlapping cells K of the moments of T ∩ K.
    """
    volumes = background.cell_volumes()
    centroids = background.cell_centroids()
    out: List[CutCellGeometry] = []
    for cell in classes.cells(OverlapClass.PARTIALLY_OVERLAPPED):
        cell = int(cell)
        pieces = cut_cell_pieces(background, overlapping, overlapping_tree, cell)
        covered = MomentSet.zeros(1)
        for poly in pieces:
            covered = covered + polyhedron_moments(poly, 1)

        full = float(volumes[cell])
        visible = min(max(full - covered.volume, 0.0), full)
        covered_first = np.array([covered[(1, 0, 0)], covered[(0, 1, 0)], covered[(0, 0, 1)]])
        centroid = centroids[cell].copy()
        if visible > 0.0:
            candidate = (full * centroids[cell] - covered_first) / visible
            box = bbox_of(background.cell_points(cell))
            tol = EPS_GEOM * box.diagonal
            if np.all(candidate >= box.min - tol) and np.all(candidate <= box.max + tol):
                centroid = candidate
            else:
                _log.debug("Visible centroid of cell %d left its box; using the cell centroid.", cell)
        out.append(
            CutCellGeometry(
                cell_l=cell,
                visible_volume=visible,
                visible_centroid=centroid,
                covered_volume=full - visible,
                small=visible / full < small_cut_threshold,
                pieces=len(pieces),
            )
        )
    return out


def build_overlap(
    background: TetMesh,
    overlapping: TetMesh,
    seed: int = 0,
    small_cut_threshold: float = SMALL_CUT_THRESHOLD,
    timings: Optional[Dict[str, float]] = None,
) -> OverlapData:
    """
    Full geometric overlap of `overlapping` on top of `background`.

    Per-phase wall times (seconds) are accumulated into `timings` under
    tree_build, collision, classification, interface and cut_cells.

    Raises:
        EmptyMeshError: if either mesh has no cells.
        InvalidArgumentError: if the overlapping boundary is not watertight.
        DegenerateGeometryError: with the offending entity indices.
    """
    if background.num_cells == 0 or overlapping.num_cells == 0:
        raise EmptyMeshError("Both meshes need at least one cell")
    timings = {} if timings is None else timings

    def _timed(name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start
        return result

    def _trees():
        surf = boundary(overlapping)
        if not surf.is_watertight():
            raise InvalidArgumentError("Boundary of the overlapping mesh is not watertight")
        return surf, tree_for_cells(background), tree_for_surface(surf), tree_for_cells(overlapping)

    surface, bg_tree, surf_tree, ov_tree = _timed("tree_build", _trees)
    relation = _timed("collision", compute_collisions, bg_tree, surf_tree)
    maps = CollisionMaps.from_relation(relation)
    classes = _timed("classification", classify_cells, background, relation, surf_tree, seed)
    parts = _timed("interface", compute_interface_decomposition, overlapping, surface, maps.facet_to_cells, background)
    cuts = _timed("cut_cells", compute_cut_cells, background, overlapping, classes, ov_tree, small_cut_threshold)

    data = OverlapData(
        background=background,
        overlapping=overlapping,
        surface=surface,
        relation=relation,
        maps=maps,
        classes=classes,
        facet_parts=tuple(parts),
        cut_cells=tuple(cuts),
        background_tree=bg_tree,
        surface_tree=surf_tree,
        overlapping_tree=ov_tree,
        timings=timings,
    )
    counts = classes.counts()
    _log.info(
        "Overlap built: %d collisions, %d partially / %d completely overlapped cells, %d facet parts",
        len(relation),
        counts["partially_overlapped"],
        counts["completely_overlapped"],
        len(parts),
    )
    return data


# ──────────────────────────────────────────────────────────────────────────────
# Iteration and reporting
# ──────────────────────────────────────────────────────────────────────────────

def iterate_cut_cells(data: OverlapData) -> Iterator[Tuple[int, CutCellGeometry]]:
    for cut in data.cut_cells:
        yield cut.cell_l, cut


def iterate_facet_parts(data: OverlapData) -> Iterator[Tuple[InterfaceFacetPart, int, int]]:
    """(part, overlapping cell k, background cell l), ordered by l then facet."""
    for part in data.facet_parts:
        yield part, part.cell_k, part.cell_l


def overlap_summary(data: OverlapData) -> Dict[str, float]:
    """One report row: class counts, volumes, interface area, part and small-cell counts."""
    counts = data.classes.counts()
    visible = float(data.visible_volumes().sum())
    return {
        "background_cells": data.background.num_cells,
        "overlapping_cells": data.overlapping.num_cells,
        "not_overlapped": counts["not_overlapped"],
        "completely_overlapped": counts["completely_overlapped"],
        "partially_overlapped": counts["partially_overlapped"],
        "collisions": len(data.relation),
        "visible_volume": visible,
        "interface_area": data.interface_area(),
        "facet_parts": len(data.facet_parts),
        "small_cells": sum(1 for c in data.cut_cells if c.small),
    }


def overlap_off_blocks(data: OverlapData) -> Tuple[List[str], List[str]]:
    """OFF text blocks of every facet part and of every covered cut-cell piece."""
    part_blocks = [p.polygon.to_off() for p in data.facet_parts]
    piece_blocks = []
    for cut in data.cut_cells:
        for poly in cut_cell_pieces(data.background, data.overlapping, data.overlapping_tree, cut.cell_l):
            piece_blocks.append(poly.to_off())
    return part_blocks, piece_blocks
