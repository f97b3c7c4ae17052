import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kcfmot.geometry import BoundingBox, Point, area, centroid, distance, overlap


def boxes():
    return st.builds(
        BoundingBox,
        st.integers(-200, 200),
        st.integers(-200, 200),
        st.integers(1, 120),
        st.integers(1, 120),
    )


def test_overlap_examples():
    a = BoundingBox(0, 0, 10, 10)
    assert overlap(a, a) == 1.0
    assert overlap(a, BoundingBox(100, 100, 5, 5)) == 0.0
    assert overlap(a, BoundingBox(5, 0, 10, 10)) == pytest.approx(50 / 150)


def test_touching_boxes_do_not_overlap():
    assert overlap(BoundingBox(0, 0, 10, 10), BoundingBox(10, 0, 10, 10)) == 0.0


def test_area_examples():
    assert area(BoundingBox(0, 0, 1, 1)) == 1
    assert area(BoundingBox(3, 7, 10, 20)) == 200
    assert area(BoundingBox(0, 0, 800, 600)) == 480000


def test_centroid_examples():
    assert centroid(BoundingBox(0, 0, 10, 10)) == Point(5, 5)
    assert centroid(BoundingBox(2, 4, 4, 8)) == Point(4, 8)
    assert centroid(BoundingBox(0, 0, 1, 1)) == Point(0.5, 0.5)


@pytest.mark.parametrize("w,h", [(0, 5), (5, 0), (-1, 3), (3, -2)])
def test_degenerate_boxes_rejected(w, h):
    with pytest.raises(ValueError):
        BoundingBox(0, 0, w, h)


def test_non_integer_coordinates_rejected():
    with pytest.raises(ValueError):
        BoundingBox(0.5, 0, 3, 3)
    assert BoundingBox(2.0, 0, 3, 3).x == 2


def test_clip_and_union():
    b = BoundingBox(-5, -5, 10, 10)
    assert b.clip(100, 100) == BoundingBox(0, 0, 5, 5)
    assert BoundingBox(200, 0, 5, 5).clip(100, 100) is None
    assert BoundingBox(0, 0, 2, 2).union(BoundingBox(5, 5, 1, 1)) == BoundingBox(0, 0, 6, 6)


def test_from_center_round_trip():
    b = BoundingBox(12, 7, 30, 20)
    assert BoundingBox.from_center(*b.centroid, b.w, b.h) == b


def test_distance():
    assert distance(Point(0, 0), Point(3, 4)) == 5.0


@given(boxes(), boxes())
def test_overlap_symmetric_and_bounded(a, b):
    v = overlap(a, b)
    assert v == overlap(b, a)
    assert 0.0 <= v <= 1.0


@given(boxes())
def test_overlap_self_is_one(a):
    assert overlap(a, a) == 1.0


@given(boxes(), boxes(), st.integers(-300, 300), st.integers(-300, 300))
def test_overlap_translation_invariant(a, b, dx, dy):
    assert math.isclose(overlap(a, b), overlap(a.translate(dx, dy), b.translate(dx, dy)))
