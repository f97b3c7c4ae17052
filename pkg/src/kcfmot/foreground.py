"""Blob analysis: turn binary foreground masks into candidate object regions.

Masks are 2-D boolean arrays (nonzero pixels are foreground).  Masks are
cleaned with a binary median filter, a closing and hole filling, split into
8-connected components, then filtered by size and aspect ratio, and finally
nearby components are merged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import BoundingBox, Point, distance

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
BACKGROUND_RATE = 0.01


@dataclass(frozen=True)
class BlobParams:
    T_r: int = 20
    T_c: float = 24.0
    ratio_min: float = 0.15
    ratio_max: float = 8.0
    median_radius: int = 1
    close_radius: int = 2

    def __post_init__(self) -> None:
        if self.T_r < 0 or self.T_c < 0:
            raise ValueError("T_r and T_c must be non-negative")
        if not 0 < self.ratio_min < self.ratio_max:
            raise ValueError("need 0 < ratio_min < ratio_max")
        if self.median_radius < 0 or self.close_radius < 0:
            raise ValueError("morphology radii must be non-negative")


@dataclass(frozen=True)
class CandidateRegion:
    """One foreground region.

    ``parts`` counts the components merged into this region; merged regions
    are exempt from the aspect-ratio filter.
    """

    box: BoundingBox
    area_px: int
    centroid: Point
    parts: int = 1

    def merge(self, other: "CandidateRegion") -> "CandidateRegion":
        n = self.area_px + other.area_px
        cx = (self.centroid.x * self.area_px + other.centroid.x * other.area_px) / n
        cy = (self.centroid.y * self.area_px + other.centroid.y * other.area_px) / n
        return CandidateRegion(
            self.box.union(other.box), n, Point(cx, cy), self.parts + other.parts
        )


def as_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim == 3:
        mask = mask[:, :, 0]
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    return mask if mask.dtype == bool else mask != 0


def _median(mask: np.ndarray, radius: int) -> np.ndarray:
    size = 2 * radius + 1
    # Majority vote over the square window equals the binary median.
    counts = ndimage.uniform_filter(mask.astype(np.float32), size=size, mode="reflect")
    return counts * (size * size) > (size * size) / 2.0


def _closing(mask: np.ndarray, radius: int) -> np.ndarray:
    # Pad so that objects touching the border are not eroded by the closing.
    size = 2 * radius + 1
    padded = np.pad(mask, radius, mode="edge")
    dil = ndimage.maximum_filter(padded, size=size, mode="nearest")
    ero = ndimage.minimum_filter(dil, size=size, mode="nearest")
    return ero[radius:-radius, radius:-radius]


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set background components that do not touch the border to foreground."""
    bg = ~mask
    labels, n = ndimage.label(bg)
    if n == 0:
        return mask.copy()
    border = np.zeros(n + 1, dtype=bool)
    for edge in (labels[0], labels[-1], labels[:, 0], labels[:, -1]):
        border[edge] = True
    border[0] = False  # label 0 is the foreground itself
    return ~border[labels]


def _occupied(mask: np.ndarray, margin: int) -> tuple[slice, slice] | None:
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    h, w = mask.shape
    return (slice(max(rows[0] - margin, 0), min(rows[-1] + margin + 1, h)),
            slice(max(cols[0] - margin, 0), min(cols[-1] + margin + 1, w)))


def clean(mask: np.ndarray, p: BlobParams | None = None) -> np.ndarray:
    """Median filter, closing with a square element, then hole filling."""
    p = p or BlobParams()
    m = as_mask(mask)
    if p.median_radius > 0 and m.any():
        m = _median(m, p.median_radius)
    # Work on the occupied bounding area plus a background ring: closing and
    # hole filling cannot change anything outside it.
    window = _occupied(m, p.close_radius + 1)
    out = np.zeros(m.shape, dtype=bool)
    if window is None:
        return out
    sub = m[window]
    if p.close_radius > 0:
        sub = _closing(sub, p.close_radius)
    out[window] = fill_holes(sub)
    return out


def components(mask: np.ndarray) -> list[CandidateRegion]:
    """8-connected components in raster order of their first pixel."""
    labels, n = ndimage.label(as_mask(mask), structure=EIGHT_CONNECTED)
    regions = []
    for i, sl in enumerate(ndimage.find_objects(labels)):
        ys, xs = sl
        pix = labels[sl] == i + 1
        cnt = int(pix.sum())
        box = BoundingBox(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start)
        # Pixel centres sit at half-integer coordinates.
        cy = ys.start + (pix.sum(axis=1) @ np.arange(pix.shape[0])) / cnt + 0.5
        cx = xs.start + (pix.sum(axis=0) @ np.arange(pix.shape[1])) / cnt + 0.5
        regions.append(CandidateRegion(box, cnt, Point(float(cx), float(cy))))
    return regions


def refine(regions: list[CandidateRegion], p: BlobParams | None = None) -> list[CandidateRegion]:
    """Drop small or implausibly shaped regions, then merge close ones.

    Merging repeatedly joins the closest pair whose centroid distance is
    strictly below ``T_c``; ties go to the lowest index pair.
    """
    p = p or BlobParams()
    kept = []
    for r in regions:
        if r.area_px < p.T_r:
            continue
        if r.parts == 1 and not p.ratio_min <= r.box.w / r.box.h <= p.ratio_max:
            continue
        kept.append(r)

    while len(kept) > 1:
        best = None
        for i, j in itertools.combinations(range(len(kept)), 2):
            d = distance(kept[i].centroid, kept[j].centroid)
            if d < p.T_c and (best is None or d < best[0]):
                best = (d, i, j)
        if best is None:
            break
        _, i, j = best
        merged = kept[i].merge(kept[j])
        kept = [r for k, r in enumerate(kept) if k not in (i, j)]
        kept.insert(i, merged)
    return kept


def extract_regions(mask: np.ndarray, p: BlobParams | None = None) -> list[CandidateRegion]:
    """Full blob-analysis pipeline for one mask."""
    p = p or BlobParams()
    return refine(components(clean(mask, p)), p)


@dataclass
class RunningAverage:
    """Running-average grayscale background for the fallback subtractor."""

    mean: np.ndarray
    threshold: float = 25.0
    rate: float = BACKGROUND_RATE

    @classmethod
    def from_frame(cls, frame: np.ndarray, threshold: float = 25.0) -> "RunningAverage":
        return cls(_gray(frame), threshold)


def _gray(frame: np.ndarray) -> np.ndarray:
    f = np.asarray(frame, dtype=np.float64)
    if f.ndim == 3:
        f = f[:, :, :3] @ np.array([0.299, 0.587, 0.114])
    return f


def fallback_subtract(frame: np.ndarray, bg: RunningAverage) -> tuple[np.ndarray, RunningAverage]:
    """Threshold the difference to a running-average background, then blend the frame in."""
    g = _gray(frame)
    if g.shape != bg.mean.shape:
        raise ValueError(f"frame shape {g.shape} does not match background {bg.mean.shape}")
    mask = np.abs(g - bg.mean) > bg.threshold
    mean = (1.0 - bg.rate) * bg.mean + bg.rate * g
    return mask, RunningAverage(mean, bg.threshold, bg.rate)
