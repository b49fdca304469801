# app/meshing/mesh_io.py

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import meshio
import numpy as np

from app.errors import MeshParseError
from app.meshing.tet_mesh import TetMesh

_log = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_mesh(mesh: TetMesh, path: PathLike) -> None:
    """
    Write the plain text mesh format:

        tetmesh <num_vertices> <num_cells>
        x y z            (one line per vertex, 17 significant digits)
        v0 v1 v2 v3 [m]  (one line per cell, 0-based, optional marker)
    """
    lines = [f"tetmesh {mesh.num_vertices} {mesh.num_cells}"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    if mesh.markers is None:
        lines += [" ".join(str(int(v)) for v in cell) for cell in mesh.cells]
    else:
        lines += [
            " ".join(str(int(v)) for v in cell) + f" {int(m)}"
            for cell, m in zip(mesh.cells, mesh.markers)
        ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _log.info("Mesh written to %s (%d cells)", path, mesh.num_cells)


def read_mesh(path: PathLike) -> TetMesh:
    """
    Parse a mesh written by `write_mesh`. Negatively oriented cells are
    accepted and re-oriented.

    Raises:
        MeshParseError: on any malformed line, with its line number.
    """
    src = str(path)
    try:
        raw = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MeshParseError(src, 0, f"cannot read file: {exc}") from exc

    header = raw[0].split() if raw else []
    if len(header) != 3 or header[0] != "tetmesh":
        raise MeshParseError(src, 1, "expected 'tetmesh <num_vertices> <num_cells>'")
    try:
        nv, nc = int(header[1]), int(header[2])
    except ValueError as exc:
        raise MeshParseError(src, 1, "vertex/cell counts must be integers") from exc
    if nv < 0 or nc < 0:
        raise MeshParseError(src, 1, "negative counts")

    body = raw[1:]
    if len(body) < nv + nc:
        raise MeshParseError(src, len(raw) + 1, f"expected {nv} vertex and {nc} cell lines")

    vertices = np.empty((nv, 3))
    for i in range(nv):
        lineno = i + 2
        parts = body[i].split()
        if len(parts) != 3:
            raise MeshParseError(src, lineno, "vertex line needs 3 coordinates")
        try:
            vertices[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise MeshParseError(src, lineno, "non-numeric coordinate") from exc

    cells = np.empty((nc, 4), dtype=np.int64)
    markers: List[int] = []
    for i in range(nc):
        lineno = nv + i + 2
        parts = body[nv + i].split()
        if len(parts) not in (4, 5):
            raise MeshParseError(src, lineno, "cell line needs 4 vertex indices")
        try:
            ids = [int(p) for p in parts]
        except ValueError as exc:
            raise MeshParseError(src, lineno, "non-integer vertex index") from exc
        if min(ids[:4]) < 0 or max(ids[:4]) >= nv:
            raise MeshParseError(src, lineno, f"vertex index out of range [0, {nv})")
        if len(set(ids[:4])) != 4:
            raise MeshParseError(src, lineno, "repeated vertex in cell")
        p = vertices[ids[:4]]
        if np.linalg.det(np.stack([p[1] - p[0], p[2] - p[0], p[3] - p[0]])) == 0.0:
            raise MeshParseError(src, lineno, "zero-volume cell")
        cells[i] = ids[:4]
        if len(ids) == 5:
            markers.append(ids[4])

    for j, extra in enumerate(body[nv + nc:]):
        if extra.strip():
            raise MeshParseError(src, nv + nc + j + 2, "unexpected trailing content")
    if markers and len(markers) != nc:
        raise MeshParseError(src, nv + 2, "markers must be given for all cells or none")

    mesh = TetMesh(vertices, cells, np.array(markers) if markers else None)
    _log.info("Mesh read from %s (%d vertices, %d cells)", src, nv, nc)
    return mesh


def write_vtk(
    mesh: TetMesh,
    path: PathLike,
    point_data: Optional[Dict[str, np.ndarray]] = None,
    cell_data: Optional[Dict[str, np.ndarray]] = None,
) -> None:
    """Legacy ASCII VTK unstructured grid with optional point/cell arrays."""
    out = meshio.Mesh(
        points=np.asarray(mesh.vertices),
        cells=[("tetra", np.asarray(mesh.cells))],
        point_data={k: np.asarray(v) for k, v in (point_data or {}).items()},
        cell_data={k: [np.asarray(v)] for k, v in (cell_data or {}).items()},
    )
    meshio.write(str(path), out, file_format="vtk", binary=False)
    _log.info("VTK written to %s", path)


def write_off_blocks(blocks: Iterable[str], path: PathLike) -> int:
    """Concatenate OFF text blocks into one file; returns the block count."""
    items = list(blocks)
    Path(path).write_text("".join(items), encoding="utf-8")
    _log.info("%d OFF blocks written to %s", len(items), path)
    return len(items)
