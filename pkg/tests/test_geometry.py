import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borderforge.geometry import (
    Point2,
    Polyline,
    Pose2,
    RigidTransform3,
    aabb_diagonal,
    distance,
    normalize_angle,
    point_in_polygon,
    polyline_length,
    segments_intersect,
    signed_area,
)

finite_coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
points = st.builds(Point2, finite_coord, finite_coord)


class TestDistance:
    def test_identity(self):
        assert distance(Point2(0, 0), Point2(0, 0)) == 0.0

    def test_3_4_5(self):
        assert distance(Point2(0, 0), Point2(3, 4)) == 5.0

    def test_matches_formula_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = Point2(*rng.uniform(-50, 50, 2))
            b = Point2(*rng.uniform(-50, 50, 2))
            expected = math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2)
            assert distance(a, b) == pytest.approx(expected, rel=1e-12)

    @given(points, points, points)
    @settings(max_examples=200, deadline=None)
    def test_is_a_metric(self, a, b, c):
        assert distance(a, b) >= 0
        assert distance(a, b) == distance(b, a)
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


class TestAabbDiagonal:
    def test_single_point(self):
        assert aabb_diagonal([Point2(0, 0)]) == 0.0

    def test_unit_box(self):
        pts = [Point2(0, 0), Point2(1, 0), Point2(0, 1)]
        assert aabb_diagonal(pts) == pytest.approx(math.sqrt(2))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aabb_diagonal([])

    def test_matches_scan_oracle(self):
        rng = np.random.default_rng(1)
        pts = [Point2(*rng.uniform(-10, 10, 2)) for _ in range(100)]
        min_x = min(p.x for p in pts)
        max_x = max(p.x for p in pts)
        min_y = min(p.y for p in pts)
        max_y = max(p.y for p in pts)
        expected = math.hypot(max_x - min_x, max_y - min_y)
        assert aabb_diagonal(pts) == pytest.approx(expected, rel=1e-12)

    @given(st.lists(points, min_size=1, max_size=30), points)
    @settings(max_examples=100, deadline=None)
    def test_permutation_and_translation_invariant(self, pts, shift):
        base = aabb_diagonal(pts)
        assert aabb_diagonal(list(reversed(pts))) == pytest.approx(base)
        moved = [Point2(p.x + shift.x, p.y + shift.y) for p in pts]
        assert aabb_diagonal(moved) == pytest.approx(base, abs=1e-9)


def winding_number_inside(p, ring):
    """Independent winding-number containment oracle."""
    wn = 0
    n = len(ring)
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
        if a.y <= p.y:
            if b.y > p.y and cross > 0:
                wn += 1
        elif b.y <= p.y and cross < 0:
            wn -= 1
    return wn != 0


def star_polygon(rng, n_arms=7):
    angles = np.sort(rng.uniform(0, 2 * math.pi, n_arms * 2))
    radii = np.where(np.arange(n_arms * 2) % 2 == 0, rng.uniform(2, 3), rng.uniform(0.5, 1))
    pts = [Point2(r * math.cos(a), r * math.sin(a)) for a, r in zip(angles, radii)]
    return pts


class TestPointInPolygon:
    unit_square = Polyline([Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)])

    def test_inside(self):
        assert point_in_polygon(Point2(0.5, 0.5), self.unit_square)

    def test_outside(self):
        assert not point_in_polygon(Point2(2, 2), self.unit_square)

    def test_boundary_counts_as_inside(self):
        assert point_in_polygon(Point2(0.5, 0.0), self.unit_square)
        assert point_in_polygon(Point2(1.0, 1.0), self.unit_square)

    def test_degenerate_rejected(self):
        line = Polyline([Point2(0, 0), Point2(1, 0), Point2(2, 0)])
        with pytest.raises(ValueError):
            point_in_polygon(Point2(0, 0), line)

    def test_against_winding_oracle(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            ring = star_polygon(rng)
            poly = Polyline(ring + [ring[0]])
            for _ in range(100):
                p = Point2(*rng.uniform(-3.5, 3.5, 2))
                assert point_in_polygon(p, poly) == winding_number_inside(p, ring)


class TestPolylineLength:
    def test_unit_segment(self):
        assert polyline_length(Polyline([Point2(0, 0), Point2(1, 0)])) == 1.0

    def test_l_shape(self):
        poly = Polyline([Point2(0, 0), Point2(1, 0), Point2(1, 1)])
        assert polyline_length(poly) == pytest.approx(2.0)

    def test_carpet_ground_truth_loop(self):
        from borderforge.harness import builtin_scenarios

        carpet = builtin_scenarios()[1]
        length = polyline_length(carpet.ground_truth_border.chain)
        assert length == pytest.approx(6.50, abs=0.05)


class TestTypes:
    def test_point_rejects_nan(self):
        with pytest.raises(ValueError):
            Point2(float("nan"), 0.0)

    def test_pose_normalizes_theta(self):
        assert Pose2(Point2(0, 0), 3 * math.pi).theta == pytest.approx(math.pi)
        assert Pose2(Point2(0, 0), -math.pi).theta == pytest.approx(math.pi)
        p = Pose2(Point2(0, 0), 0.5)
        assert -math.pi < p.theta <= math.pi

    def test_normalize_angle_interval(self):
        for t in np.linspace(-20, 20, 401):
            r = normalize_angle(float(t))
            assert -math.pi < r <= math.pi
            assert math.isclose(math.sin(r), math.sin(t), abs_tol=1e-9)

    def test_polyline_needs_two_vertices(self):
        with pytest.raises(ValueError):
            Polyline([Point2(0, 0)])

    def test_polyline_rejects_consecutive_duplicates(self):
        with pytest.raises(ValueError):
            Polyline([Point2(0, 0), Point2(0, 0)])

    def test_rigid_transform_validates_rotation(self):
        with pytest.raises(ValueError):
            RigidTransform3(np.eye(3) * 2, np.zeros(3))
        with pytest.raises(ValueError):
            RigidTransform3(np.diag([1, 1, -1]), np.zeros(3))  # det -1
        t = RigidTransform3.identity()
        assert np.allclose(t.transform([1, 2, 3]), [1, 2, 3])

    def test_signed_area_ccw_positive(self):
        ccw = Polyline([Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)])
        assert signed_area(ccw) == pytest.approx(1.0)


class TestSegmentsIntersect:
    def test_crossing(self):
        assert segments_intersect(Point2(0, 0), Point2(1, 1), Point2(0, 1), Point2(1, 0))

    def test_disjoint(self):
        assert not segments_intersect(Point2(0, 0), Point2(1, 0), Point2(0, 1), Point2(1, 1))

    def test_touching_endpoint(self):
        assert segments_intersect(Point2(0, 0), Point2(1, 0), Point2(1, 0), Point2(2, 5))
