from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from catlab.cat_family import backward_lines, make_family
from catlab.geometry import (
    ConvexPolygon,
    GeometryError,
    Point2,
    Segment,
    SegmentArrangement,
    neighborhood_area_mc,
    point_segment_distance,
    polygon_difference,
    polygon_intersect,
    segment_intersections,
    symmetric_difference_area,
    unit_square,
)


def tri(*pts):
    return ConvexPolygon([Point2(F(x), F(y)) for x, y in pts])


def test_point_outside_square_rejected():
    with pytest.raises(GeometryError):
        Point2.in_square(F(3, 2), F(0))


def test_triangle_area_exact():
    # the small triangle with vertices (0, 1-t), (t, 1), (0, 1) at t = 1/8 has area t^2/2
    t = F(1, 8)
    assert tri((0, 1 - t), (t, 1), (0, 1)).area == F(1, 128)


def test_polygon_normalises_orientation_and_collinear_points():
    p = ConvexPolygon([Point2(F(0), F(0)), Point2(F(0), F(1)), Point2(F(1), F(1)), Point2(F(1), F(1, 2)),
                       Point2(F(1), F(0))])
    assert p.area == 1
    assert len(p) == 4


def test_intersection_and_difference_partition_area():
    sq = unit_square(exact=True)
    lower = tri((0, 0), (1, 0), (0, 1))
    (inter,) = polygon_intersect(sq, lower)
    diff = polygon_difference(sq, lower)
    assert inter.area == F(1, 2)
    assert sum(p.area for p in diff) == F(1, 2)


def test_symmetric_difference_of_branch_images_matches_mc():
    # symmetric difference of branch-1 images at t = 0 and t = 1/8, against rejection sampling
    f0, ft = make_family(F(0)), make_family(F(1, 8))
    p, q = f0.branches[0].image, ft.branches[0].image
    exact = float(symmetric_difference_area(p, q))
    rng = np.random.default_rng(1)
    X, Y = rng.random(400_000), rng.random(400_000)

    def inside(poly):
        V = poly.as_array()
        m = np.ones(len(X), bool)
        for i in range(len(V)):
            a, b = V[i], V[(i + 1) % len(V)]
            m &= (b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0]) > 0
        return m

    mc = float(np.mean(inside(p) ^ inside(q)))
    assert abs(exact - mc) < 1e-3


def test_clip_to_square():
    s = Segment(Point2(-0.5, 0.5), Point2(1.5, 0.5)).clip_to_square()
    assert (float(s.a.x), float(s.b.x)) == (0.0, 1.0)
    assert Segment(Point2(2.0, 2.0), Point2(3.0, 3.0)).clip_to_square() is None


def test_horizontal_line_meets_backward_lines_at_t0():
    # y = 1/2 meets y = 2x, y = x, y = 2x - 1 at x = 1/4, 1/2, 3/4 (y = x + 1 lies outside)
    w = Segment(Point2(F(1, 10), F(1, 2)), Point2(F(9, 10), F(1, 2)))
    hits = segment_intersections(w, backward_lines(make_family(F(0))))
    assert [p.x for p, _ in hits] == [F(1, 4), F(1, 2), F(3, 4)]


def test_vertical_line_meets_backward_lines_t_eighth():
    # x = 3/10 against y = x, x - t, x + 1 - t, (2-t)x, (2-t)x - 1 at t = 1/8
    t = F(1, 8)
    x = F(3, 10)
    expect = sorted(y for y in (x, x - t, x + 1 - t, (2 - t) * x, (2 - t) * x - 1) if 0 <= y <= 1)
    w = Segment(Point2(x, F(0)), Point2(x, F(1)))
    hits = segment_intersections(w, backward_lines(make_family(t)))
    assert [p.y for p, _ in hits] == expect


def test_point_segment_distance():
    segs = np.array([[0.0, 0.0, 1.0, 0.0]])
    d = point_segment_distance(np.array([[0.5, 0.3], [2.0, 0.0], [-1.0, 1.0]]), segs)
    np.testing.assert_allclose(d, [0.3, 1.0, np.sqrt(2)])


def test_neighbourhood_of_diagonal():
    arr = SegmentArrangement((Segment(Point2(0.0, 0.0), Point2(1.0, 1.0)),))
    s = 0.01
    est = neighborhood_area_mc(arr, s, 400_000, seed=3)
    # strip of half-width s around the diagonal, minus the two corner losses
    exact = 2 * s * np.sqrt(2) - s * s
    assert abs(est.value - exact) <= 3 * est.stderr + 1e-4


def test_neighbourhood_scales_linearly():
    arr = backward_lines(make_family(0.0, "float"))
    a = neighborhood_area_mc(arr, 0.005, 400_000, seed=5).value
    b = neighborhood_area_mc(arr, 0.0025, 400_000, seed=6).value
    assert abs(a / b - 2) < 0.1


small = st.fractions(-3, 3, max_denominator=50)


@settings(max_examples=60, deadline=None)
@given(small, small, small, small, small, small)
def test_clip_partition_preserves_area(a1, b1, c1, a, b, c):
    assume(a != 0 or b != 0)
    poly = unit_square(exact=True).clip(a1, b1, c1)
    left = poly.clip(a, b, c)
    right = poly.clip(-a, -b, -c)
    assert left.area + right.area == poly.area
