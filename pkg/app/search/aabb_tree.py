# app/search/aabb_tree.py

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Set, Tuple, Union

import meshio
import numpy as np

from app.errors import DegenerateGeometryError, InvalidArgumentError
from app.geometry.predicates import ray_triangle_intersect
from app.geometry.primitives import EPS_GEOM, Aabb

_log = logging.getLogger(__name__)

MAX_RAY_RETRIES = 8


# ──────────────────────────────────────────────────────────────────────────────
# Tree structure
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class AabbTree:
    """
    Binary AABB hierarchy with one entity per leaf, stored as flat arrays in
    preorder (root = node 0, children after their parent).

    Attributes:
        node_min, node_max: (num_nodes, 3) box corners.
        left, right: Child node indices, -1 at leaves.
        entity: Entity index at leaves, -1 at internal nodes.
        entity_kind: "cells", "triangles" or "generic".
        source: The mesh the entities come from, if any.
        entity_points: (num_entities, k, 3) entity vertices for leaf tests.
    """

    node_min: np.ndarray
    node_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    entity: np.ndarray
    entity_kind: str = "generic"
    source: Any = None
    entity_points: Optional[np.ndarray] = None
    _py: Tuple[list, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        volumes = np.prod(self.node_max - self.node_min, axis=1)
        # Plain-list mirrors; traversal loops run in pure Python.
        object.__setattr__(
            self,
            "_py",
            (
                self.node_min.tolist(),
                self.node_max.tolist(),
                self.left.tolist(),
                self.right.tolist(),
                self.entity.tolist(),
                volumes.tolist(),
            ),
        )

    @property
    def num_nodes(self) -> int:
        return len(self.left)

    @property
    def num_entities(self) -> int:
        return int(np.count_nonzero(self.entity >= 0))

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def node_box(self, node: int) -> Aabb:
        return Aabb(self.node_min[node], self.node_max[node])

    def root_box(self) -> Aabb:
        return self.node_box(0)

    def depths(self) -> np.ndarray:
        depth = np.zeros(self.num_nodes, dtype=np.int64)
        for node in range(self.num_nodes):
            if self.left[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return depth

    def audit(self) -> bool:
        """Check child-in-parent containment, leaf count and leaf coverage."""
        internal = np.nonzero(self.left >= 0)[0]
        for child in (self.left[internal], self.right[internal]):
            if np.any(self.node_min[child] < self.node_min[internal]):
                return False
            if np.any(self.node_max[child] > self.node_max[internal]):
                return False
        leaves = np.nonzero(self.left < 0)[0]
        ents = self.entity[leaves]
        if len(leaves) != len(np.unique(ents)) or np.any(ents < 0):
            return False
        if self.entity_points is not None:
            pts = self.entity_points[ents]
            if np.any(pts.min(axis=1) < self.node_min[leaves]) or np.any(pts.max(axis=1) > self.node_max[leaves]):
                return False
        return True


def _build_from_arrays(
    mins: np.ndarray,
    maxs: np.ndarray,
    entity_kind: str,
    source: Any,
    entity_points: Optional[np.ndarray],
) -> AabbTree:
    n = len(mins)
    if n == 0:
        raise InvalidArgumentError("Cannot build an AABB tree without boxes")
    centers = 0.5 * (mins + maxs)
    left: List[int] = []
    right: List[int] = []
    entity: List[int] = []

    def _split(ids: np.ndarray) -> int:
        node = len(entity)
        left.append(-1)
        right.append(-1)
        entity.append(-1)
        if len(ids) == 1:
            entity[node] = int(ids[0])
            return node
        c = centers[ids]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        mid = len(ids) // 2
        order = np.argpartition(c[:, axis], mid)
        left[node] = _split(ids[order[:mid]])
        right[node] = _split(ids[order[mid:]])
        return node

    _split(np.arange(n))

    left_a = np.array(left, dtype=np.int64)
    right_a = np.array(right, dtype=np.int64)
    entity_a = np.array(entity, dtype=np.int64)
    node_min = np.empty((len(left_a), 3))
    node_max = np.empty((len(left_a), 3))
    leaves = entity_a >= 0
    node_min[leaves] = mins[entity_a[leaves]]
    node_max[leaves] = maxs[entity_a[leaves]]
    for node in np.nonzero(~leaves)[0][::-1]:
        a, b = left_a[node], right_a[node]
        node_min[node] = np.minimum(node_min[a], node_min[b])
        node_max[node] = np.maximum(node_max[a], node_max[b])

    tree = AabbTree(node_min, node_max, left_a, right_a, entity_a, entity_kind, source, entity_points)
    _log.debug("AABB tree (%s): %d entities, %d nodes", entity_kind, n, tree.num_nodes)
    return tree


def build_tree(
    boxes: Sequence[Aabb],
    entity_kind: str = "generic",
    source: Any = None,
    entity_points: Optional[np.ndarray] = None,
    eps: float = 0.0,
) -> AabbTree:
    """
    Build a tree by recursive median split along the longest axis of the
    box-centre bounds, one entity per leaf.

    Raises:
        InvalidArgumentError: for an empty box list.
    """
    if len(boxes) == 0:
        raise InvalidArgumentError("Cannot build an AABB tree without boxes")
    mins = np.array([b.min for b in boxes], dtype=float) - eps
    maxs = np.array([b.max for b in boxes], dtype=float) + eps
    return _build_from_arrays(mins, maxs, entity_kind, source, entity_points)


def _tree_for_points(points: np.ndarray, kind: str, source: Any) -> AabbTree:
    mins = points.min(axis=1)
    maxs = points.max(axis=1)
    scale = float(np.linalg.norm(maxs.max(axis=0) - mins.min(axis=0)))
    eps = EPS_GEOM * scale
    return _build_from_arrays(mins - eps, maxs + eps, kind, source, points)


def tree_for_cells(mesh: Any) -> AabbTree:
    """Tree over the cells of a TetMesh, boxes enlarged by EPS_GEOM * scale."""
    return _tree_for_points(mesh.cell_points(), "cells", mesh)


def tree_for_surface(surface: Any) -> AabbTree:
    """Tree over the triangles of a SurfaceMesh, boxes enlarged by EPS_GEOM * scale."""
    return _tree_for_points(surface.triangle_points(), "triangles", surface)


# ──────────────────────────────────────────────────────────────────────────────
# Queries
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class CollisionRelation:
    """
    Colliding entity pairs (i in tree A, j in tree B), sorted, no duplicates.

    Attributes:
        pairs: (k, 2) integer array in lexicographic order.
        visited_node_pairs: Node pairs popped during traversal.
        leaf_tests: Leaf-leaf pairs handed to the leaf test.
    """

    pairs: np.ndarray
    visited_node_pairs: int = 0
    leaf_tests: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def as_set(self) -> Set[Tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.pairs}


def _sorted_pairs(pairs: List[Tuple[int, int]]) -> np.ndarray:
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    arr = np.array(pairs, dtype=np.int64)
    return arr[np.lexsort((arr[:, 1], arr[:, 0]))]


def traverse_pair(
    tree_a: AabbTree,
    tree_b: AabbTree,
    leaf_test: Callable[[int, int], bool],
) -> CollisionRelation:
    """
    Simultaneous descent of two hierarchies.

    Disjoint box pairs are pruned. Otherwise tree A is descended when B is a
    leaf, or when A is internal and its box volume is at least B's; B is
    descended in every other case. Leaf pairs passing `leaf_test` are recorded.
    """
    a_min, a_max, a_left, a_right, a_ent, a_vol = tree_a._py
    b_min, b_max, b_left, b_right, b_ent, b_vol = tree_b._py

    pairs: List[Tuple[int, int]] = []
    visited = 0
    tests = 0
    stack = [(0, 0)]
    while stack:
        a, b = stack.pop()
        visited += 1
        amin, amax, bmin, bmax = a_min[a], a_max[a], b_min[b], b_max[b]
        if (
            amin[0] > bmax[0] or bmin[0] > amax[0]
            or amin[1] > bmax[1] or bmin[1] > amax[1]
            or amin[2] > bmax[2] or bmin[2] > amax[2]
        ):
            continue
        a_leaf = a_left[a] < 0
        b_leaf = b_left[b] < 0
        if a_leaf and b_leaf:
            tests += 1
            if leaf_test(a_ent[a], b_ent[b]):
                pairs.append((a_ent[a], b_ent[b]))
            continue
        if b_leaf or (not a_leaf and a_vol[a] >= b_vol[b]):
            stack.append((a_right[a], b))
            stack.append((a_left[a], b))
        else:
            stack.append((a, b_right[b]))
            stack.append((a, b_left[b]))

    relation = CollisionRelation(_sorted_pairs(pairs), visited, tests)
    _log.debug("traverse_pair: %d pairs, %d node pairs visited", len(relation), visited)
    return relation


def query_box(tree: AabbTree, box: Aabb) -> np.ndarray:
    """Sorted indices of the entities whose boxes overlap `box`."""
    t_min, t_max, t_left, t_right, t_ent, _ = tree._py
    lo, hi = box.min.tolist(), box.max.tolist()
    found: List[int] = []
    stack = [0]
    while stack:
        node = stack.pop()
        nmin, nmax = t_min[node], t_max[node]
        if (
            nmin[0] > hi[0] or lo[0] > nmax[0]
            or nmin[1] > hi[1] or lo[1] > nmax[1]
            or nmin[2] > hi[2] or lo[2] > nmax[2]
        ):
            continue
        if t_left[node] < 0:
            found.append(t_ent[node])
        else:
            stack.append(t_right[node])
            stack.append(t_left[node])
    return np.array(sorted(found), dtype=np.int64)


@dataclass(frozen=True)
class RayCrossings:
    count: int
    degenerate: bool


def _ray_hits_box(o: Sequence[float], d: Sequence[float], lo: Sequence[float], hi: Sequence[float]) -> bool:
    tmin, tmax = 0.0, math.inf
    for k in range(3):
        if d[k] == 0.0:
            if o[k] < lo[k] or o[k] > hi[k]:
                return False
            continue
        t1 = (lo[k] - o[k]) / d[k]
        t2 = (hi[k] - o[k]) / d[k]
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return False
    return True


def count_ray_crossings(
    surface_tree: AabbTree,
    origin: Sequence[float],
    direction: Sequence[float],
) -> RayCrossings:
    """
    Number of surface triangles hit by the ray origin + t * direction, t > 0,
    found by descending the tree with slab tests.

    `degenerate` is set when a hit was flagged by the ray/triangle test or two
    hits coincide in t within EPS_GEOM * scale.
    """
    if surface_tree.entity_points is None:
        raise InvalidArgumentError("Ray queries need a tree built over triangles")
    t_min, t_max, t_left, t_right, t_ent, _ = surface_tree._py
    o = [float(v) for v in origin]
    d = [float(v) for v in direction]
    tris = surface_tree.entity_points
    scale = surface_tree.root_box().diagonal

    hits: List[float] = []
    degenerate = False
    stack = [0]
    while stack:
        node = stack.pop()
        if not _ray_hits_box(o, d, t_min[node], t_max[node]):
            continue
        if t_left[node] >= 0:
            stack.append(t_right[node])
            stack.append(t_left[node])
            continue
        hit = ray_triangle_intersect(o, d, tris[t_ent[node]])
        if hit is None:
            continue
        degenerate = degenerate or hit.degenerate
        if hit.t > 0.0:
            hits.append(hit.t)

    hits.sort()
    t_tol = EPS_GEOM * scale / max(math.sqrt(sum(c * c for c in d)), 1e-300)
    if any(b - a <= t_tol for a, b in zip(hits, hits[1:])):
        degenerate = True
    return RayCrossings(len(hits), degenerate)


def ray_directions(count: int, seed: int = 0) -> np.ndarray:
    """
    Deterministic, well-spread unit directions: a Kronecker sequence on the
    (z, azimuth) cylinder mapped area-preservingly onto the sphere.
    """
    k = np.arange(count, dtype=float) + float(seed) + 1.0
    z = 1.0 - 2.0 * np.mod(0.5 + k * (math.sqrt(2.0) - 1.0), 1.0)
    phi = 2.0 * math.pi * np.mod(k * 0.6180339887498949, 1.0)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def point_inside_surface(
    surface_tree: AabbTree,
    point: Sequence[float],
    seed: int = 0,
    max_retries: int = MAX_RAY_RETRIES,
) -> bool:
    """
    Inside test by crossing parity along one ray; degenerate rays are retried
    along the next direction of the fixed table.

    Raises:
        DegenerateGeometryError: after `max_retries` degenerate retries.
    """
    for attempt, direction in enumerate(ray_directions(max_retries + 1, seed)):
        crossings = count_ray_crossings(surface_tree, point, direction)
        if not crossings.degenerate:
            return crossings.count % 2 == 1
        _log.debug("Degenerate ray from %s (attempt %d); retrying.", list(point), attempt + 1)
    raise DegenerateGeometryError(f"Ray classification of {list(point)} stayed degenerate after {max_retries} retries")


# ──────────────────────────────────────────────────────────────────────────────
# Debug output
# ──────────────────────────────────────────────────────────────────────────────

_BOX_EDGES = np.array(
    [[0, 1], [1, 3], [3, 2], [2, 0], [4, 5], [5, 7], [7, 6], [6, 4], [0, 4], [1, 5], [2, 6], [3, 7]]
)


def write_tree_vtk(tree: AabbTree, path: Union[str, Path], every: int = 4) -> int:
    """Write the boxes of every `every`-th tree level as VTK lines; returns the box count."""
    depth = tree.depths()
    nodes = np.nonzero(depth % max(every, 1) == 0)[0]
    corners = []
    for node in nodes:
        lo, hi = tree.node_min[node], tree.node_max[node]
        corners.append([[(hi if (c >> k) & 1 else lo)[k] for k in range(3)] for c in range(8)])
    points = np.array(corners).reshape(-1, 3)
    lines = (np.arange(len(nodes))[:, None, None] * 8 + _BOX_EDGES[None, :, :]).reshape(-1, 2)
    out = meshio.Mesh(
        points=points,
        cells=[("line", lines)],
        cell_data={"level": [np.repeat(depth[nodes], len(_BOX_EDGES))]},
    )
    meshio.write(str(path), out, file_format="vtk", binary=False)
    _log.info("Wrote %d tree boxes to %s", len(nodes), path)
    return len(nodes)
