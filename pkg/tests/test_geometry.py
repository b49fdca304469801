# tests/test_geometry.py

import numpy as np
import pytest

from app.errors import DegenerateGeometryError, InvalidArgumentError
from app.geometry.clipping import clip_polyhedron_halfspace, clip_triangle_tet, tet_halfspaces, tet_tet_intersection
from app.geometry.predicates import ray_triangle_intersect, tet_triangle_intersects
from app.geometry.primitives import Aabb, ConvexPolyhedron, PlanarPolygon, Plane, bbox_of, enlarge
from app.meshing.tet_mesh import unit_cube_mesh

from conftest import random_tet

UNIT_TRI = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def _inside_tet(points: np.ndarray, tet: np.ndarray) -> np.ndarray:
    planes = tet_halfspaces(tet)
    return np.all([points @ p.normal <= p.offset for p in planes], axis=0)


# ──────────────────────────────────────────────────────────────────────────────
# Primitives
# ──────────────────────────────────────────────────────────────────────────────

def test_aabb_relations():
    a = Aabb(np.zeros(3), np.ones(3))
    b = Aabb(np.full(3, 0.5), np.full(3, 2.0))
    c = Aabb(np.full(3, 1.5), np.full(3, 2.0))
    assert a.overlaps(b) and not a.overlaps(c)
    assert b.contains(c) and not a.contains(b)
    assert a.contains_point([1.0, 1.0, 1.0])
    assert a.volume == pytest.approx(1.0)
    assert enlarge(a, 0.5).volume == pytest.approx(8.0)
    assert bbox_of(UNIT_TRI).diagonal == pytest.approx(np.sqrt(2.0))
    with pytest.raises(InvalidArgumentError):
        Aabb(np.ones(3), np.zeros(3))


def test_plane_and_tet_validation():
    with pytest.raises(InvalidArgumentError):
        Plane(np.array([0.0, 0.0, 2.0]), 1.0)
    with pytest.raises(InvalidArgumentError):
        ConvexPolyhedron.from_tet(np.zeros((3, 3)))
    assert Plane(np.array([0.0, 0.0, 1.0]), 1.0).offset == 1.0


def test_planar_polygon_area_and_centroid():
    square = PlanarPolygon(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float), np.array([0, 0, 1.0]))
    assert square.area() == pytest.approx(1.0)
    assert np.allclose(square.centroid(), [0.5, 0.5, 0.0])
    assert square.to_off().startswith("OFF\n4 1 0\n")
    assert PlanarPolygon.empty().area() == 0.0


def test_box_polyhedron_closed():
    box = ConvexPolyhedron.from_box((0, 0, 0), (1, 2, 3))
    assert box.volume() == pytest.approx(6.0)
    assert np.allclose(box.divergence_volumes(), 6.0)
    assert box.edge_pairing_audit()


def test_tet_polyhedron_orientation_is_normalized(reference_tet):
    flipped = ConvexPolyhedron.from_tet(reference_tet[[0, 2, 1, 3]])
    assert flipped.volume() == pytest.approx(1.0 / 6.0)
    assert flipped.edge_pairing_audit()


# ──────────────────────────────────────────────────────────────────────────────
# Clipping
# ──────────────────────────────────────────────────────────────────────────────

def test_tet_halfspaces(reference_tet):
    planes = tet_halfspaces(reference_tet)
    centroid = reference_tet.mean(axis=0)
    assert all(p.normal @ centroid < p.offset for p in planes)
    for opposite, plane in enumerate(planes):
        others = np.delete(reference_tet, opposite, axis=0)
        assert np.allclose(others @ plane.normal, plane.offset)


def test_tet_halfspaces_flat_raises(reference_tet):
    flat = reference_tet.copy()
    flat[3] = [0.3, 0.3, 0.0]
    with pytest.raises(DegenerateGeometryError):
        tet_halfspaces(flat)


def test_clip_unit_cube_half():
    cube = ConvexPolyhedron.from_box((0, 0, 0), (1, 1, 1))
    half = clip_polyhedron_halfspace(cube, Plane(np.array([1.0, 0, 0]), 0.5))
    assert half.volume() == pytest.approx(0.5, abs=1e-12)
    assert len(half.faces) == 6
    assert half.edge_pairing_audit()


def test_clip_inside_and_outside():
    cube = ConvexPolyhedron.from_box((0, 0, 0), (1, 1, 1))
    assert clip_polyhedron_halfspace(cube, Plane(np.array([1.0, 0, 0]), 2.0)) is cube
    assert clip_polyhedron_halfspace(cube, Plane(np.array([1.0, 0, 0]), -1.0)).is_empty
    # touching from outside counts as outside
    assert clip_polyhedron_halfspace(cube, Plane(np.array([1.0, 0, 0]), 0.0)).is_empty


def test_clip_complement_additivity(rng):
    for _ in range(50):
        tet = random_tet(rng)
        poly = ConvexPolyhedron.from_tet(tet)
        normal = rng.normal(size=3)
        plane = Plane.from_point_normal(tet.mean(axis=0) + 0.05 * rng.normal(size=3), normal)
        inner = clip_polyhedron_halfspace(poly, plane)
        outer = clip_polyhedron_halfspace(poly, plane.flipped())
        total = poly.volume()
        assert inner.volume() <= total * (1 + 1e-12)
        assert inner.volume() + outer.volume() == pytest.approx(total, rel=1e-10)
        if not inner.is_empty:
            assert inner.edge_pairing_audit()


def test_clip_by_three_planes_stays_closed(rng):
    tet = random_tet(rng)
    poly = ConvexPolyhedron.from_tet(tet)
    for _ in range(3):
        poly = clip_polyhedron_halfspace(poly, Plane.from_point_normal(tet.mean(axis=0), rng.normal(size=3)))
    if not poly.is_empty:
        vols = poly.divergence_volumes()
        assert np.allclose(vols, poly.volume(), rtol=1e-10)


def test_tet_tet_intersection_simple(reference_tet):
    same = tet_tet_intersection(reference_tet, reference_tet)
    assert same.volume() == pytest.approx(1.0 / 6.0, rel=1e-12)
    small = 0.5 * reference_tet + 0.05
    assert tet_tet_intersection(small, reference_tet).volume() == pytest.approx(1.0 / 48.0, rel=1e-12)
    assert tet_tet_intersection(reference_tet, reference_tet + 5.0).is_empty


def test_tet_tet_intersection_monte_carlo(rng):
    samples = rng.uniform(0.0, 1.0, size=(400_000, 3))
    for _ in range(5):
        a, b = random_tet(rng, min_volume=0.01), random_tet(rng, min_volume=0.01)
        hits = _inside_tet(samples, a) & _inside_tet(samples, b)
        p = hits.mean()
        vol = tet_tet_intersection(a, b).volume()
        q = max(p, vol)
        se = np.sqrt(max(q * (1.0 - q), 1e-12) / len(samples))
        assert vol <= min(abs(np.linalg.det(a[1:] - a[0])), abs(np.linalg.det(b[1:] - b[0]))) / 6.0 + 1e-12
        assert abs(vol - p) <= 4.0 * se + 1e-6


def test_clip_triangle_additive_over_mesh():
    tri = np.array([[0.13, 0.21, 0.37], [0.83, 0.31, 0.52], [0.41, 0.77, 0.66]])
    area = 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))
    mesh = unit_cube_mesh(3)
    parts = [clip_triangle_tet(tri, mesh.cell_points(c)) for c in range(mesh.num_cells)]
    assert sum(p.area() for p in parts) == pytest.approx(area, rel=1e-10)
    assert max(p.num_vertices for p in parts) <= 7
    normal = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    assert all(np.allclose(p.normal, normal / np.linalg.norm(normal)) for p in parts if not p.is_empty)


def test_clip_triangle_on_shared_facet_counted_once():
    # the plane x = y is a union of interior facets of the Kuhn split
    tri = np.array([[0.2, 0.2, 0.1], [0.7, 0.7, 0.3], [0.5, 0.5, 0.8]])
    area = 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))
    mesh = unit_cube_mesh(1)
    total = sum(clip_triangle_tet(tri, mesh.cell_points(c)).area() for c in range(mesh.num_cells))
    assert total == pytest.approx(area, rel=1e-10)


def test_clip_triangle_on_boundary_face_ownership():
    mesh = unit_cube_mesh(1)
    inward = np.array([[0.1, 0.1, 0.0], [0.6, 0.2, 0.0], [0.3, 0.7, 0.0]])
    outward = inward[[0, 2, 1]]
    area = 0.5 * np.linalg.norm(np.cross(inward[1] - inward[0], inward[2] - inward[0]))
    total_in = sum(clip_triangle_tet(inward, mesh.cell_points(c)).area() for c in range(mesh.num_cells))
    total_out = sum(clip_triangle_tet(outward, mesh.cell_points(c)).area() for c in range(mesh.num_cells))
    assert total_in == pytest.approx(area, rel=1e-10)
    assert total_out == 0.0


# ──────────────────────────────────────────────────────────────────────────────
# Predicates
# ──────────────────────────────────────────────────────────────────────────────

def test_sat_agrees_with_clipping(rng):
    for _ in range(1500):
        tet = random_tet(rng, min_volume=1e-3)
        tri = rng.uniform(0.0, 1.0, size=(3, 3))
        if np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) < 1e-3:
            continue
        hit = tet_triangle_intersects(tet, tri)
        area = clip_triangle_tet(tri, tet).area()
        if area > 1e-8:
            assert hit
        if not hit:
            assert area == 0.0


def test_sat_simple_cases(reference_tet):
    assert tet_triangle_intersects(reference_tet, UNIT_TRI * 0.5 + [0.1, 0.1, 0.1])
    assert not tet_triangle_intersects(reference_tet, UNIT_TRI + [2.0, 0.0, 0.0])
    far_tri = np.array([[1.0, 1.0, -0.5], [1.0, 1.0, 1.5], [2.0, 2.0, 0.5]])
    assert not tet_triangle_intersects(reference_tet, far_tri)


def test_ray_triangle_cases():
    hit = ray_triangle_intersect([0.2, 0.2, -1.0], [0, 0, 1.0], UNIT_TRI)
    assert hit is not None and hit.t == pytest.approx(1.0) and not hit.degenerate
    assert ray_triangle_intersect([2.0, 2.0, -1.0], [0, 0, 1.0], UNIT_TRI) is None
    assert ray_triangle_intersect([0.2, 0.2, 1.0], [0, 0, 1.0], UNIT_TRI) is None
    edge = ray_triangle_intersect([0.5, 0.0, -1.0], [0, 0, 1.0], UNIT_TRI)
    assert edge is not None and edge.degenerate
    in_plane = ray_triangle_intersect([-1.0, 0.2, 0.0], [1.0, 0, 0], UNIT_TRI)
    assert in_plane is not None and in_plane.degenerate and in_plane.t == pytest.approx(1.0)
    inside = ray_triangle_intersect([0.2, 0.2, 0.0], [0.0, 1.0, 0.0], UNIT_TRI)
    assert inside is not None and inside.degenerate and inside.t == 0.0
    # in the plane but pointing away from, or passing beside, the triangle
    assert ray_triangle_intersect([-1.0, 0.2, 0.0], [-1.0, 0, 0], UNIT_TRI) is None
    assert ray_triangle_intersect([-1.0, 2.0, 0.0], [1.0, 0, 0], UNIT_TRI) is None
    assert ray_triangle_intersect([2.0, 0.0, 0.0], [0.0, 1.0, 0.0], UNIT_TRI) is None
    assert ray_triangle_intersect([-1.0, 0.2, 0.5], [1.0, 0, 0], UNIT_TRI) is None
