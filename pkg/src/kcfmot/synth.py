"""Deterministic synthetic sequences with ground truth.

Actors are flat colored rectangles moving along piecewise-linear paths over a
flat background.  Masks are the exact actor silhouettes, except where a
scripted fragmentation event cuts a gap through one actor's silhouette (the
frame itself is left intact), plus optional seeded salt noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import BoundingBox
from .metrics import TrajectoryRecord, TrajectorySet


@dataclass(frozen=True)
class Actor:
    """A rectangle following ``path``, a sequence of ``(frame, cx, cy)`` keyframes.

    Before the first and after the last keyframe the actor holds still.
    ``visible`` lists inclusive frame ranges in which it is drawn; ``None``
    means always.
    """

    id: int
    label: str
    color: tuple[int, int, int]
    size: tuple[int, int]
    path: tuple[tuple[int, float, float], ...]
    visible: tuple[tuple[int, int], ...] | None = None

    def center(self, t: int) -> tuple[float, float]:
        f = [p[0] for p in self.path]
        return (float(np.interp(t, f, [p[1] for p in self.path])),
                float(np.interp(t, f, [p[2] for p in self.path])))

    def box(self, t: int) -> BoundingBox:
        cx, cy = self.center(t)
        return BoundingBox.from_center(cx, cy, *self.size)

    def is_visible(self, t: int) -> bool:
        if self.visible is None:
            return True
        return any(a <= t <= b for a, b in self.visible)


@dataclass(frozen=True)
class Fragmentation:
    """Cut a gap of ``gap`` pixels through an actor's mask for frames ``start..end``.

    ``pattern`` is ``"vertical"`` (gap is a column band at fraction ``split``
    of the width), ``"horizontal"`` (row band) or ``"diagonal"`` (band along
    the top-left to bottom-right diagonal).
    """

    actor_id: int
    start: int
    end: int
    pattern: str = "vertical"
    split: float = 0.5
    gap: int = 4

    def __post_init__(self) -> None:
        if self.pattern not in ("vertical", "horizontal", "diagonal"):
            raise ValueError(f"unknown split pattern {self.pattern!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    width: int
    height: int
    frames: int
    actors: tuple[Actor, ...]
    fragmentations: tuple[Fragmentation, ...] = ()
    seed: int = 0
    background: tuple[int, int, int] = (96, 96, 96)
    mask_noise: float = 0.0

    def __post_init__(self) -> None:
        ids = [a.id for a in self.actors]
        if len(set(ids)) != len(ids):
            raise ValueError("actor ids must be unique")


@dataclass
class Rendered:
    frames: list[np.ndarray] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)
    gt: TrajectorySet = field(default_factory=TrajectorySet)

    def __iter__(self):
        return iter((self.frames, self.masks, self.gt))


def _gap_mask(box: BoundingBox, frag: Fragmentation) -> np.ndarray:
    """Boolean array over ``box`` that is True inside the gap."""
    h, w = box.h, box.w
    rows, cols = np.indices((h, w))
    if frag.pattern == "vertical":
        c0 = int(round(frag.split * w - frag.gap / 2.0))
        return (cols >= c0) & (cols < c0 + frag.gap)
    if frag.pattern == "horizontal":
        r0 = int(round(frag.split * h - frag.gap / 2.0))
        return (rows >= r0) & (rows < r0 + frag.gap)
    # Distance of each pixel centre to the main diagonal.
    d = np.abs(h * (cols + 0.5) - w * (rows + 0.5)) / np.hypot(w, h)
    return d < frag.gap / 2.0


def render(s: Scenario) -> Rendered:
    """Frames, masks and ground-truth boxes for every frame of ``s``."""
    rng = np.random.default_rng(s.seed)
    out = Rendered()
    records = []
    for t in range(s.frames):
        frame = np.empty((s.height, s.width, 3), dtype=np.uint8)
        frame[:] = s.background
        mask = np.zeros((s.height, s.width), dtype=bool)
        for actor in s.actors:
            if not actor.is_visible(t):
                continue
            full = actor.box(t)
            vis = full.clip(s.width, s.height)
            if vis is None:
                continue
            ys = slice(vis.y, vis.y2)
            xs = slice(vis.x, vis.x2)
            frame[ys, xs] = actor.color
            sil = np.ones((full.h, full.w), dtype=bool)
            for frag in s.fragmentations:
                if frag.actor_id == actor.id and frag.start <= t <= frag.end:
                    sil &= ~_gap_mask(full, frag)
            oy, ox = vis.y - full.y, vis.x - full.x
            mask[ys, xs] |= sil[oy:oy + vis.h, ox:ox + vis.w]
            records.append(TrajectoryRecord(t, actor.id, vis, actor.label))
        if s.mask_noise > 0:
            mask |= rng.random(mask.shape) < s.mask_noise
        out.frames.append(frame)
        out.masks.append(mask)
    out.gt = TrajectorySet(records)
    return out


def linear_path(start_frame: int, cx: float, cy: float, vx: float, vy: float, end_frame: int):
    return ((start_frame, cx, cy), (end_frame, cx + vx * (end_frame - start_frame),
                                    cy + vy * (end_frame - start_frame)))


RED = (200, 40, 40)
BLUE = (40, 60, 210)
YELLOW = (230, 210, 40)
GREEN = (40, 170, 60)
ORANGE = (240, 140, 30)
PURPLE = (130, 40, 140)


def _single() -> Scenario:
    a = Actor(1, "car", RED, (32, 24), linear_path(0, 60, 120, 2, 0, 59))
    return Scenario("single", 320, 240, 60, (a,))


def _crossing() -> Scenario:
    a = Actor(1, "car", RED, (30, 30), linear_path(0, 50, 110, 3, 0, 69))
    b = Actor(2, "car", BLUE, (30, 30), linear_path(0, 270, 125, -3, 0, 69))
    return Scenario("crossing", 320, 240, 70, (a, b))


def _fragmentation() -> Scenario:
    a = Actor(1, "car", ORANGE, (48, 30), linear_path(0, 50, 120, 2, 0, 59))
    frags = (
        # Fragments too far apart to merge; the larger one keeps 28 of 48 columns.
        Fragmentation(1, 15, 19, "vertical", split=0.62, gap=4),
        # Fragments close enough to be merged back by the centroid rule.
        Fragmentation(1, 35, 39, "horizontal", split=0.5, gap=4),
    )
    return Scenario("fragmentation", 320, 240, 60, (a,), frags, seed=3, mask_noise=0.001)


def _stop_and_exit() -> Scenario:
    path = ((0, 60, 120), (20, 120, 120), (40, 120, 120), (100, 360, 120))
    a = Actor(1, "car", GREEN, (30, 20), path)
    return Scenario("stop-and-exit", 320, 240, 100, (a,))


def _drift_split() -> Scenario:
    # Same-colored actors overtaking each other: while merged, appearance
    # cannot tell them apart, so a filter may follow the wrong one out.  The
    # vertical offset keeps the merged region tall enough that the two boxes
    # never look redundant for long.
    a = Actor(1, "pedestrian", YELLOW, (20, 30), linear_path(0, 40, 110, 3, 0, 69))
    b = Actor(2, "pedestrian", YELLOW, (20, 30), linear_path(0, 110, 128, 1, 0, 69))
    return Scenario("drift-split", 320, 240, 70, (a, b))


def _platoon() -> Scenario:
    a = Actor(1, "car", RED, (30, 20), linear_path(0, 40, 100, 2, 0, 59))
    # Joins the adjacent lane by frame 15, then drives alongside.
    b = Actor(2, "car", BLUE, (30, 20), ((0, 50, 160), (15, 80, 120), (59, 168, 120)))
    return Scenario("platoon", 320, 240, 60, (a, b))


def _fragmented_start() -> Scenario:
    # One slow object whose mask starts out split along its diagonal, so two
    # trackers get created on it; they must be pruned once the mask heals.
    a = Actor(1, "car", PURPLE, (90, 60), linear_path(0, 100, 120, 1, 0, 39))
    frags = (Fragmentation(1, 0, 9, "diagonal", gap=6),)
    return Scenario("fragmented-start", 320, 240, 40, (a,), frags)


def _highway() -> Scenario:
    colors = (RED, BLUE, YELLOW, GREEN, ORANGE)
    actors = []
    for i, color in enumerate(colors):
        y = 90 + 100 * i
        vx = 3 + i % 3
        x0 = 80 + 60 * i
        actors.append(Actor(i + 1, "car", color, (64, 40), linear_path(0, x0, y, vx, 0, 99)))
    return Scenario("highway", 800, 600, 100, tuple(actors), seed=11, mask_noise=0.0005)


_BUILDERS = {
    "single": _single,
    "crossing": _crossing,
    "fragmentation": _fragmentation,
    "stop-and-exit": _stop_and_exit,
    "drift-split": _drift_split,
    "platoon": _platoon,
    "fragmented-start": _fragmented_start,
    "highway": _highway,
}


def builtin_scenarios() -> dict[str, Scenario]:
    return {name: build() for name, build in _BUILDERS.items()}


def get_scenario(name: str, seed: int | None = None) -> Scenario:
    if name not in _BUILDERS:
        raise KeyError(name)
    s = _BUILDERS[name]()
    if seed is not None:
        s = replace(s, seed=seed)
    return s
