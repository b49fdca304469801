# tests/test_quadrature.py

from math import factorial

import numpy as np
import pytest

from app.errors import DegenerateGeometryError, InternalConsistencyError, InvalidArgumentError
from app.geometry.clipping import clip_polyhedron_halfspace, tet_halfspaces
from app.geometry.primitives import ConvexPolyhedron, PlanarPolygon, Plane
from app.quadrature.cache import QuadratureCache
from app.quadrature.moments import (
    MomentSet,
    face_integral,
    moment_integrate,
    multi_indices,
    polyhedron_moments,
    tet_moments,
)
from app.quadrature.rules import barycenter_rule, polygon_area_centroid, tet_rule, triangle_rule

from conftest import random_tet


def _monomial(alpha):
    return lambda x: x[:, 0] ** alpha[0] * x[:, 1] ** alpha[1] * x[:, 2] ** alpha[2]


def _box_moment(lo, hi, alpha):
    return np.prod([(hi[k] ** (alpha[k] + 1) - lo[k] ** (alpha[k] + 1)) / (alpha[k] + 1) for k in range(3)])


def _ref_tet_moment(alpha):
    a, b, c = alpha
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


def test_multi_indices():
    assert multi_indices(1) == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    assert len(multi_indices(4)) == 35


def test_unit_cube_moments():
    moments = polyhedron_moments(ConvexPolyhedron.from_box((0, 0, 0), (1, 1, 1)), 4)
    for alpha in multi_indices(4):
        assert moments[alpha] == pytest.approx(_box_moment((0, 0, 0), (1, 1, 1), alpha), abs=1e-12)


def test_shifted_box_moments():
    lo, hi = (0.2, -0.5, 1.0), (1.3, 0.7, 2.5)
    moments = polyhedron_moments(ConvexPolyhedron.from_box(lo, hi), 4)
    for alpha in multi_indices(4):
        assert moments[alpha] == pytest.approx(_box_moment(lo, hi, alpha), rel=1e-10, abs=1e-12)


def test_reference_tet_moments(reference_tet):
    moments = tet_moments(reference_tet, 3)
    for alpha in multi_indices(3):
        assert moments[alpha] == pytest.approx(_ref_tet_moment(alpha), abs=1e-12)
    assert np.allclose(moments.centroid(), 0.25)


def test_tet_moments_match_degree_four_rule(rng):
    rule = tet_rule(4)
    for _ in range(20):
        tet = random_tet(rng, lo=-1.0, hi=2.0)
        moments = tet_moments(tet, 4)
        mapped = rule.mapped_to_tet(tet)
        for alpha in multi_indices(4):
            assert moments[alpha] == pytest.approx(float(mapped.integrate(_monomial(alpha))), rel=1e-10, abs=1e-12)


def test_moments_additive_under_clipping(rng):
    for _ in range(20):
        tet = random_tet(rng)
        poly = ConvexPolyhedron.from_tet(tet)
        plane = Plane.from_point_normal(tet.mean(axis=0), rng.normal(size=3))
        inner = polyhedron_moments(clip_polyhedron_halfspace(poly, plane), 2)
        outer = polyhedron_moments(clip_polyhedron_halfspace(poly, plane.flipped()), 2)
        whole = polyhedron_moments(poly, 2)
        for alpha in multi_indices(2):
            assert (inner + outer)[alpha] == pytest.approx(whole[alpha], rel=1e-10, abs=1e-14)


def test_clipped_polyhedron_moments_monte_carlo(rng):
    samples = rng.uniform(0.0, 1.0, size=(300_000, 3))
    for _ in range(3):
        tet = random_tet(rng, min_volume=0.02)
        planes = list(tet_halfspaces(tet))
        poly = ConvexPolyhedron.from_tet(tet)
        for _ in range(3):
            plane = Plane.from_point_normal(tet.mean(axis=0) + 0.1 * rng.normal(size=3), rng.normal(size=3))
            poly = clip_polyhedron_halfspace(poly, plane)
            planes.append(plane)
        inside = np.all([samples @ p.normal <= p.offset for p in planes], axis=0)
        moments = polyhedron_moments(poly, 2)
        for alpha in multi_indices(2):
            values = np.where(inside, _monomial(alpha)(samples), 0.0)
            se = values.std() / np.sqrt(len(samples))
            assert abs(moments[alpha] - values.mean()) <= 4.0 * se + 1e-6


def test_degree_and_empty_cases():
    cube = ConvexPolyhedron.from_box((0, 0, 0), (1, 1, 1))
    with pytest.raises(InvalidArgumentError):
        polyhedron_moments(cube, 5)
    zeros = polyhedron_moments(ConvexPolyhedron.empty(), 2)
    assert all(zeros[a] == 0.0 for a in multi_indices(2))
    with pytest.raises(InvalidArgumentError):
        zeros[(3, 0, 0)]
    with pytest.raises(InvalidArgumentError):
        zeros.centroid()


def test_moment_set_arithmetic_and_integration():
    cube = polyhedron_moments(ConvexPolyhedron.from_box((0, 0, 0), (1, 1, 1)), 2)
    half = polyhedron_moments(ConvexPolyhedron.from_box((0, 0, 0), (0.5, 1, 1)), 2)
    rest = cube - half
    assert rest.volume == pytest.approx(0.5)
    assert np.allclose(rest.centroid(), [0.75, 0.5, 0.5])
    assert isinstance(rest + half, MomentSet)
    # 1 + 2x - 3yz over the unit cube
    assert moment_integrate({(0, 0, 0): 1.0, (1, 0, 0): 2.0, (0, 1, 1): -3.0}, cube) == pytest.approx(1.25)


def test_face_integral_projection():
    square = PlanarPolygon(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float), np.array([0, 0, 1.0]))
    assert face_integral(square, (1, 0, 0)) == pytest.approx(0.5)
    assert face_integral(square, (1, 1, 0)) == pytest.approx(0.25)
    with pytest.raises(DegenerateGeometryError):
        face_integral(square, (0, 0, 0), axis=0)
    tilted = PlanarPolygon(np.array([[0, 0, 0], [1, 0, 1], [1, 1, 1], [0, 1, 0]], dtype=float), np.array([-1.0, 0, 1.0]) / np.sqrt(2))
    assert face_integral(tilted, (0, 0, 0)) == pytest.approx(np.sqrt(2.0))
    assert face_integral(tilted, (0, 0, 0), axis=0) == pytest.approx(np.sqrt(2.0))


# ──────────────────────────────────────────────────────────────────────────────
# Rules
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("degree, points", [(1, 1), (2, 4), (4, 14)])
def test_tet_rules_exact(degree, points):
    rule = tet_rule(degree)
    assert rule.num_points == points
    assert rule.measure == pytest.approx(1.0 / 6.0, abs=1e-15)
    for alpha in multi_indices(degree):
        assert float(rule.integrate(_monomial(alpha))) == pytest.approx(_ref_tet_moment(alpha), abs=1e-14)


def test_tet_rule_unknown_degree():
    with pytest.raises(InvalidArgumentError):
        tet_rule(3)


def test_mapped_rule_measure(rng):
    tet = random_tet(rng)
    vol = abs(np.linalg.det(tet[1:] - tet[0])) / 6.0
    assert tet_rule(2).mapped_to_tet(tet).measure == pytest.approx(vol)


def test_triangle_rules():
    tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    rule = triangle_rule(tri, 2)
    assert float(rule.integrate(lambda x: x[:, 0] ** 2)) == pytest.approx(1.0 / 12.0)
    assert float(rule.integrate(lambda x: x[:, 0] * x[:, 1])) == pytest.approx(1.0 / 24.0)
    assert triangle_rule(tri, 1).measure == pytest.approx(0.5)
    assert float(triangle_rule(tri, 1).integrate(lambda x: x[:, 1])) == pytest.approx(1.0 / 6.0)
    with pytest.raises(InvalidArgumentError):
        triangle_rule(tri, 3)


def test_polygon_area_centroid_in_space():
    verts = np.array([[0, 0, 0], [1, 0, 1], [1, 1, 1], [0, 1, 0]], dtype=float)
    normal = np.array([-1.0, 0, 1.0]) / np.sqrt(2)
    area, centroid, rule = polygon_area_centroid(PlanarPolygon(verts, normal))
    assert area == pytest.approx(np.sqrt(2.0))
    assert np.allclose(centroid, [0.5, 0.5, 0.5])
    assert rule.num_points == 1 and rule.measure == pytest.approx(area)
    # clockwise loop about the given normal
    area_cw, centroid_cw, _ = polygon_area_centroid(PlanarPolygon(verts[::-1], normal))
    assert area_cw == pytest.approx(area)
    assert np.allclose(centroid_cw, centroid)


def test_polygon_area_centroid_degenerate():
    line = PlanarPolygon(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float), np.array([0, 0, 1.0]))
    area, _, rule = polygon_area_centroid(line)
    assert area == 0.0 and rule.num_points == 0


def test_barycenter_rule():
    rule = barycenter_rule(0.5, [0.1, 0.2, 0.3])
    assert float(rule.integrate(lambda x: x[:, 2])) == pytest.approx(0.15)
    with pytest.raises(InvalidArgumentError):
        barycenter_rule(0.0, [0, 0, 0])


def test_cache_populate_then_freeze():
    cache = QuadratureCache()
    calls = []

    def factory():
        calls.append(1)
        return barycenter_rule(1.0, [0, 0, 0])

    first = cache.get_or_compute(("cell", 3), factory)
    assert cache.get_or_compute(("cell", 3), factory) is first
    assert len(calls) == 1 and cache.misses == 1 and cache.hits == 1
    cache.freeze()
    assert cache.frozen and ("cell", 3) in cache
    assert cache.get(("cell", 3)) is first
    with pytest.raises(InternalConsistencyError):
        cache.put(("cell", 4), first)
    with pytest.raises(InternalConsistencyError):
        cache.get(("part", 0))
