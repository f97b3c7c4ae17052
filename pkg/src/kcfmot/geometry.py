"""Axis-aligned bounding boxes in integer pixel coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Rectangle given by its top-left corner and size, in pixels.

    Boxes with a non-positive width or height are rejected at construction.
    """

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"BoundingBox.{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate box {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def centroid(self) -> Point:
        return Point(self.x + self.w / 2.0, self.y + self.h / 2.0)

    def translate(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def union(self, other: "BoundingBox") -> "BoundingBox":
        """Smallest box containing both boxes."""
        x, y = min(self.x, other.x), min(self.y, other.y)
        return BoundingBox(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)

    def intersection_area(self, other: "BoundingBox") -> int:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0
        return iw * ih

    def clip(self, width: int, height: int) -> "BoundingBox | None":
        """Intersect with the frame ``[0, width) x [0, height)``; None if nothing is left."""
        x, y = max(self.x, 0), max(self.y, 0)
        x2, y2 = min(self.x2, width), min(self.y2, height)
        if x2 <= x or y2 <= y:
            return None
        return BoundingBox(x, y, x2 - x, y2 - y)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: int, h: int) -> "BoundingBox":
        return cls(int(round(cx - w / 2.0)), int(round(cy - h / 2.0)), w, h)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


def area(a: BoundingBox) -> int:
    return a.area


def centroid(a: BoundingBox) -> Point:
    return a.centroid


def overlap(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, 0 when they are disjoint."""
    inter = a.intersection_area(b)
    if inter == 0:
        return 0.0
    return inter / float(a.area + b.area - inter)


def distance(p: Point, q: Point) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)
