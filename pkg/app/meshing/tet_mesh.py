# app/meshing/tet_mesh.py

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from app.errors import DegenerateGeometryError, EmptyMeshError, InvalidArgumentError
from app.geometry.primitives import TET_FACETS

_log = logging.getLogger(__name__)

_TET_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])


def _signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p = vertices[cells]
    return np.linalg.det(np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)) / 6.0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


# ──────────────────────────────────────────────────────────────────────────────
# Mesh types
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class TetMesh:
    """
    Tetrahedral volume mesh.

    Cells are re-ordered at construction so every cell has positive signed
    volume. Arrays are read-only; the mesh is immutable.
    """

    vertices: np.ndarray
    cells: np.ndarray
    markers: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=float).reshape(-1, 3)
        cells = np.array(self.cells, dtype=np.int64).reshape(-1, 4)

        if cells.size:
            if cells.min() < 0 or cells.max() >= len(verts):
                raise InvalidArgumentError("Cell vertex index out of range")
            srt = np.sort(cells, axis=1)
            if np.any(srt[:, 1:] == srt[:, :-1]):
                raise InvalidArgumentError("Cell with repeated vertex")
            vol = _signed_volumes(verts, cells)
            flat = np.nonzero(vol == 0.0)[0]
            if flat.size:
                raise DegenerateGeometryError("Zero-volume cell", entities=flat[:5].tolist())
            neg = vol < 0.0
            if neg.any():
                _log.debug("Normalizing orientation of %d cells.", int(neg.sum()))
                cells[neg] = cells[neg][:, [0, 1, 3, 2]]

        markers = None
        if self.markers is not None:
            markers = np.array(self.markers, dtype=np.int64).reshape(-1)
            if len(markers) != len(cells):
                raise InvalidArgumentError("One marker per cell is required")
            markers = _frozen(markers)

        object.__setattr__(self, "vertices", _frozen(verts))
        object.__setattr__(self, "cells", _frozen(cells))
        object.__setattr__(self, "markers", markers)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    def cell_points(self, index: Optional[int] = None) -> np.ndarray:
        """(num_cells, 4, 3) vertex coordinates, or (4, 3) for one cell."""
        if index is None:
            return self.vertices[self.cells]
        return self.vertices[self.cells[index]]

    def cell_volumes(self) -> np.ndarray:
        return _signed_volumes(self.vertices, self.cells)

    def cell_centroids(self) -> np.ndarray:
        return self.cell_points().mean(axis=1)

    def cell_diameters(self) -> np.ndarray:
        """Longest edge of every cell."""
        p = self.cell_points()
        edges = p[:, _TET_EDGES[:, 1]] - p[:, _TET_EDGES[:, 0]]
        return np.linalg.norm(edges, axis=2).max(axis=1)

    def total_volume(self) -> float:
        return float(self.cell_volumes().sum())

    def facet_incidence(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Facet keys and incidence of the 4 * num_cells local facets.

        Returns:
            (local_facets, inverse, counts): the (4m, 3) outward-ordered vertex
            triples, the index of each one's unique facet, and per-unique-facet
            cell counts.
        """
        local = self.cells[:, np.array(TET_FACETS)].reshape(-1, 3)
        keys = np.sort(local, axis=1)
        _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        return local, inverse.reshape(-1), counts


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """
    Oriented triangle surface, normally the boundary of a TetMesh.

    Attributes:
        vertices: Compact vertex coordinates of the surface.
        triangles: (k, 3) outward-ordered vertex indices into `vertices`.
        parent_cell: Incident volume cell per triangle.
        parent_facet: Local facet index 0..3 within the parent cell.
        vertex_ids: Volume-mesh index of every surface vertex.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    parent_cell: np.ndarray
    parent_facet: np.ndarray
    vertex_ids: np.ndarray

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def triangle_points(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def vector_areas(self) -> np.ndarray:
        p = self.triangle_points()
        return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def areas(self) -> np.ndarray:
        return np.linalg.norm(self.vector_areas(), axis=1)

    def normals(self) -> np.ndarray:
        va = self.vector_areas()
        return va / np.linalg.norm(va, axis=1)[:, None]

    def total_area(self) -> float:
        return float(self.areas().sum())

    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges and the number of triangles sharing each."""
        if self.num_triangles == 0:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        return np.unique(e, axis=0, return_counts=True)

    def is_watertight(self) -> bool:
        _, counts = self.edges()
        return bool(counts.size) and bool(np.all(counts == 2))

    def euler_characteristic(self) -> int:
        edges, _ = self.edges()
        return len(self.vertices) - len(edges) + self.num_triangles


# ──────────────────────────────────────────────────────────────────────────────
# Generators
# ──────────────────────────────────────────────────────────────────────────────

def _kuhn_pattern() -> np.ndarray:
    """Corner offsets (6, 4, 3) of the 6 tets along the main cube diagonal."""
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=np.int64)
        path = [corner.copy()]
        for axis in perm:
            corner[axis] = 1
            path.append(corner.copy())
        tets.append(path)
    return np.array(tets)


def box_mesh(lo: Sequence[float], hi: Sequence[float], n: Sequence[int]) -> TetMesh:
    """
    Structured tetrahedralization of the box [lo, hi] with n_x * n_y * n_z
    cubes, each split into 6 tets along its main diagonal.

    Raises:
        InvalidArgumentError: if lo >= hi in some direction or any n_i < 1.
    """
    lo_a = np.asarray(lo, dtype=float).reshape(3)
    hi_a = np.asarray(hi, dtype=float).reshape(3)
    counts = [int(k) for k in n]
    if len(counts) != 3 or min(counts) < 1:
        raise InvalidArgumentError(f"Cell counts must be >= 1, got {tuple(n)}")
    if np.any(lo_a >= hi_a):
        raise InvalidArgumentError(f"Degenerate box {lo_a} .. {hi_a}")
    nx, ny, nz = counts

    axes = [np.linspace(lo_a[d], hi_a[d], counts[d] + 1) for d in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    vertices = np.stack([gx.ravel(order="F"), gy.ravel(order="F"), gz.ravel(order="F")], axis=1)

    ci, cj, ck = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    base = np.stack([ci.ravel(order="F"), cj.ravel(order="F"), ck.ravel(order="F")], axis=1)
    corners = base[:, None, None, :] + _kuhn_pattern()[None, :, :, :]
    ids = corners[..., 0] + (nx + 1) * (corners[..., 1] + (ny + 1) * corners[..., 2])
    mesh = TetMesh(vertices, ids.reshape(-1, 4))
    _log.debug("box_mesh %s..%s n=%s: %d cells", lo_a, hi_a, counts, mesh.num_cells)
    return mesh


def unit_cube_mesh(n: int) -> TetMesh:
    """Structured mesh of (0,1)^3 with (n+1)^3 vertices and 6 n^3 cells."""
    if int(n) < 1:
        raise InvalidArgumentError(f"unit_cube_mesh needs n >= 1, got {n}")
    return box_mesh((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (n, n, n))


# ──────────────────────────────────────────────────────────────────────────────
# Derived meshes
# ──────────────────────────────────────────────────────────────────────────────

def rotation_matrix(axis: Sequence[float], angle_deg: float) -> np.ndarray:
    """Proper rotation by `angle_deg` degrees about `axis` (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    theta = np.deg2rad(angle_deg)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)


def rigid_motion(
    axis: Sequence[float],
    angle_deg: float,
    center: Sequence[float],
    translation: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    """(R, t) for a rotation about `center` followed by a translation."""
    rot = rotation_matrix(axis, angle_deg)
    c = np.asarray(center, dtype=float)
    return rot, c - rot @ c + np.asarray(translation, dtype=float)


def transform(mesh: TetMesh, rotation: np.ndarray, translation: Sequence[float]) -> TetMesh:
    """
    Apply x -> R x + t to every vertex.

    Raises:
        InvalidArgumentError: if R is not a proper rotation (to 1e-12).
    """
    rot = np.asarray(rotation, dtype=float).reshape(3, 3)
    if np.abs(rot.T @ rot - np.eye(3)).max() > 1e-12 or abs(np.linalg.det(rot) - 1.0) > 1e-12:
        raise InvalidArgumentError("Rotation must be orthogonal with determinant +1")
    t = np.asarray(translation, dtype=float).reshape(3)
    return TetMesh(mesh.vertices @ rot.T + t, mesh.cells, mesh.markers)


def extract_submesh(mesh: TetMesh, keep: Callable[[np.ndarray], np.ndarray]) -> TetMesh:
    """
    Mesh of the cells whose centroid satisfies `keep`, renumbered compactly.

    Args:
        mesh: Source mesh.
        keep: Vectorized predicate mapping (m, 3) centroids to a boolean mask.

    Raises:
        EmptyMeshError: if no cell is selected.
    """
    mask = np.asarray(keep(mesh.cell_centroids()), dtype=bool).reshape(-1)
    if not mask.any():
        raise EmptyMeshError("Submesh predicate selected no cells")
    kept = mesh.cells[mask]
    used, local = np.unique(kept, return_inverse=True)
    markers = mesh.markers[mask] if mesh.markers is not None else None
    return TetMesh(mesh.vertices[used], local.reshape(-1, 4), markers)


def boundary(mesh: TetMesh) -> SurfaceMesh:
    """
    Facets incident to exactly one cell, oriented outward.

    Raises:
        InvalidArgumentError: if some facet is shared by more than 2 cells.
    """
    if mesh.num_cells == 0:
        empty = np.zeros(0, dtype=np.int64)
        return SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), empty, empty, empty)

    local, inverse, counts = mesh.facet_incidence()
    if counts.max() > 2:
        raise InvalidArgumentError("Non-manifold mesh: facet shared by more than 2 cells")
    on_boundary = np.nonzero(counts[inverse] == 1)[0]
    tris = local[on_boundary]
    used, compact = np.unique(tris, return_inverse=True)
    return SurfaceMesh(
        vertices=mesh.vertices[used],
        triangles=compact.reshape(-1, 3),
        parent_cell=on_boundary // 4,
        parent_facet=on_boundary % 4,
        vertex_ids=used,
    )


def boundary_vertex_ids(mesh: TetMesh) -> np.ndarray:
    """Indices of the vertices lying on the mesh boundary."""
    return boundary(mesh).vertex_ids
