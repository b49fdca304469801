# app/geometry/predicates.py

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from app.geometry.primitives import EPS_GEOM, TET_FACETS, as_points

_log = logging.getLogger(__name__)

_TET_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])


def tet_triangle_intersects(tet: Iterable, tri: Iterable) -> bool:
    """
    Separating-axis test between a closed tetrahedron and a closed triangle.

    Candidate axes are the 4 tet face normals, the triangle normal and the 18
    cross products of tet edges with triangle edges. Intervals that touch
    within EPS_GEOM * scale count as intersecting.
    """
    t = as_points(tet)
    f = as_points(tri)
    lo = np.minimum(t.min(axis=0), f.min(axis=0))
    hi = np.maximum(t.max(axis=0), f.max(axis=0))
    scale = float(np.linalg.norm(hi - lo))
    tol = EPS_GEOM * scale
    if np.any(t.min(axis=0) > f.max(axis=0) + tol) or np.any(f.min(axis=0) > t.max(axis=0) + tol):
        return False

    face_idx = np.array(TET_FACETS)
    face_normals = np.cross(t[face_idx[:, 1]] - t[face_idx[:, 0]], t[face_idx[:, 2]] - t[face_idx[:, 0]])
    tri_edges = f[[1, 2, 0]] - f
    tet_edges = t[_TET_EDGES[:, 1]] - t[_TET_EDGES[:, 0]]
    edge_axes = np.cross(tet_edges[:, None, :], tri_edges[None, :, :]).reshape(-1, 3)
    axes = np.vstack([face_normals, np.cross(tri_edges[0], tri_edges[1])[None, :], edge_axes])

    norms = np.linalg.norm(axes, axis=1)
    keep = norms > EPS_GEOM * scale * scale
    axes = axes[keep] / norms[keep, None]

    pt = t @ axes.T
    pf = f @ axes.T
    separated = (pt.max(axis=0) < pf.min(axis=0) - tol) | (pf.max(axis=0) < pt.min(axis=0) - tol)
    return not bool(separated.any())


@dataclass(frozen=True)
class RayHit:
    """Ray parameter of a hit and whether it is too close to call."""

    t: float
    degenerate: bool


def _in_plane_entry(
    o: np.ndarray, d: np.ndarray, v0: np.ndarray, e1: np.ndarray, e2: np.ndarray, eps: float
) -> Optional[float]:
    """Entry parameter of a ray lying in the triangle's plane, or None if it misses the triangle."""
    gram = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
    start = np.linalg.solve(gram, [e1 @ (o - v0), e2 @ (o - v0)])
    step = np.linalg.solve(gram, [e1 @ d, e2 @ d])
    # barycentric constraints u >= 0, w >= 0, 1 - u - w >= 0 along o + t d
    offsets = np.array([start[0], start[1], 1.0 - start.sum()])
    slopes = np.array([step[0], step[1], -step.sum()])
    lo, hi = 0.0, np.inf
    for a, b in zip(offsets, slopes):
        if b == 0.0:
            if a < -eps:
                return None
        elif b > 0.0:
            lo = max(lo, (-eps - a) / b)
        else:
            hi = min(hi, (-eps - a) / b)
    return lo if lo <= hi else None


def ray_triangle_intersect(
    origin: Sequence[float],
    direction: Sequence[float],
    tri: Iterable,
    eps: float = EPS_GEOM,
) -> Optional[RayHit]:
    """
    Moller-Trumbore ray/triangle test on the closed triangle.

    Returns the hit parameter t >= 0, or None. Hits within `eps` of an edge or
    vertex (in barycentric terms), hits at t ~ 0, and rays running nearly
    parallel inside the triangle's plane and crossing it are flagged degenerate
    so the caller can retry with another direction.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    v = as_points(tri)
    e1 = v[1] - v[0]
    e2 = v[2] - v[0]
    scale = max(np.linalg.norm(e1), np.linalg.norm(e2))
    d_norm = np.linalg.norm(d)
    normal = np.cross(e1, e2)
    n_norm = np.linalg.norm(normal)

    pvec = np.cross(d, e2)
    det = e1 @ pvec
    if abs(det) <= eps * d_norm * n_norm:
        if abs((o - v[0]) @ normal) > eps * scale * n_norm:
            return None
        if n_norm == 0.0:
            return RayHit(0.0, True)
        entry = _in_plane_entry(o, d, v[0], e1, e2, eps)
        return None if entry is None else RayHit(float(entry), True)

    inv = 1.0 / det
    tvec = o - v[0]
    u = (tvec @ pvec) * inv
    qvec = np.cross(tvec, e1)
    w = (d @ qvec) * inv
    if u < -eps or w < -eps or u + w > 1.0 + eps:
        return None
    t = (e2 @ qvec) * inv
    t_tol = eps * scale / d_norm
    if t < -t_tol:
        return None
    degenerate = min(u, w, 1.0 - u - w) <= eps or t <= t_tol
    return RayHit(max(float(t), 0.0), bool(degenerate))
