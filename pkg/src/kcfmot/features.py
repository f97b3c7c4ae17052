"""Appearance features for the correlation filter: grayscale plus color names.

A feature patch is an ``(rows, cols, 11)`` float array.  Channel 0 holds the
grayscale intensity shifted to ``[-0.5, 0.5]``; channels 1..10 hold per-pixel
color-name probabilities.  Every channel is average-pooled over square cells
and tapered with a 2-D Hann window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import BoundingBox

COLOR_NAMES = (
    "black", "blue", "brown", "gray", "green",
    "orange", "pink", "purple", "red", "yellow",
)

# sRGB anchors for the fallback table, in COLOR_NAMES order.
REFERENCE_COLORS = np.array(
    [
        [0, 0, 0],
        [0, 0, 255],
        [139, 69, 19],
        [128, 128, 128],
        [0, 128, 0],
        [255, 165, 0],
        [255, 192, 203],
        [128, 0, 128],
        [255, 0, 0],
        [255, 255, 0],
    ],
    dtype=np.float64,
)

N_CHANNELS = 1 + len(COLOR_NAMES)

# Optional learned table shipped next to this module; see load_color_names.
DEFAULT_TABLE_PATH = Path(__file__).with_name("colornames.csv")


class TrackerLost(RuntimeError):
    """Raised when a search window no longer intersects the frame."""


@dataclass(frozen=True)
class ColorNamesTable:
    """Lookup from quantized RGB to probabilities over the ten color names.

    ``entries`` has one row per RGB bin in row-major ``(r, g, b)`` order.
    """

    entries: np.ndarray
    bins_per_channel: int = 16

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.float64)
        n_bins = self.bins_per_channel ** 3
        if entries.shape != (n_bins, len(COLOR_NAMES)):
            raise ValueError(
                f"color names table must be {n_bins}x{len(COLOR_NAMES)}, got {entries.shape}"
            )
        if (entries < 0).any() or not np.allclose(entries.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("color names rows must be non-negative and sum to 1")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def bin_index(self, rgb: np.ndarray) -> np.ndarray:
        step = 256 // self.bins_per_channel
        q = rgb.astype(np.intp) // step
        b = self.bins_per_channel
        return (q[..., 0] * b + q[..., 1]) * b + q[..., 2]

    def lookup(self, rgb: np.ndarray) -> np.ndarray:
        """Per-pixel probabilities, shape ``rgb.shape[:2] + (10,)``."""
        return self.entries[self.bin_index(rgb)]


def fallback_color_names(bins_per_channel: int = 16) -> ColorNamesTable:
    """One-hot table assigning each RGB bin to its nearest reference color."""
    step = 256 // bins_per_channel
    centers = np.arange(bins_per_channel) * step + step / 2.0
    r, g, b = np.meshgrid(centers, centers, centers, indexing="ij")
    rgb = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=1)
    d2 = ((rgb[:, None, :] - REFERENCE_COLORS[None, :, :]) ** 2).sum(axis=2)
    entries = np.zeros((rgb.shape[0], len(COLOR_NAMES)))
    entries[np.arange(rgb.shape[0]), d2.argmin(axis=1)] = 1.0
    return ColorNamesTable(entries, bins_per_channel)


def read_color_names(path: str | Path, bins_per_channel: int = 16) -> ColorNamesTable:
    """Read a CSV table with ten comma-separated probabilities per row."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return ColorNamesTable(np.array(rows), bins_per_channel)


def write_color_names(table: ColorNamesTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in table.entries:
            writer.writerow([repr(float(v)) for v in row])


def load_color_names(path: str | Path | None = None) -> ColorNamesTable:
    """Load the table from ``path`` or the packaged file, else build the fallback."""
    if path is not None:
        return read_color_names(path)
    if DEFAULT_TABLE_PATH.exists():
        return read_color_names(DEFAULT_TABLE_PATH)
    return _default_fallback()


@lru_cache(maxsize=1)
def _default_fallback() -> ColorNamesTable:
    return fallback_color_names()


def hann1d(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("window length must be >= 1")
    if n == 1:
        return np.zeros(1)
    return np.hanning(n)


@lru_cache(maxsize=64)
def _hann2d_cached(w: int, h: int) -> np.ndarray:
    if w == 1 and h == 1:
        win = np.zeros((1, 1))
    else:
        # A singleton axis is left untapered so a 1-row window is the 1-D window.
        rows = hann1d(h) if h > 1 else np.ones(1)
        cols = hann1d(w) if w > 1 else np.ones(1)
        win = np.outer(rows, cols)
    win.setflags(write=False)
    return win


def hann2d(w: int, h: int) -> np.ndarray:
    """Outer product of 1-D Hann windows, shape ``(h, w)``."""
    return _hann2d_cached(int(w), int(h)).copy()


def as_rgb(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim == 2:
        return np.repeat(frame[:, :, None], 3, axis=2)
    if frame.ndim == 3 and frame.shape[2] == 4:
        return frame[:, :, :3]
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an RGB or grayscale image, got shape {frame.shape}")
    return frame


def inflated_size(w: int, h: int, padding: float) -> tuple[int, int]:
    return max(1, int(round(w * (1.0 + padding)))), max(1, int(round(h * (1.0 + padding))))


def extract_window(frame: np.ndarray, cx: float, cy: float, w: int, h: int) -> np.ndarray:
    """Crop a ``w x h`` window centred on ``(cx, cy)`` with edge replication.

    Raises TrackerLost when the window does not touch the frame at all.
    """
    frame = as_rgb(frame)
    fh, fw = frame.shape[:2]
    x0 = int(round(cx - w / 2.0))
    y0 = int(round(cy - h / 2.0))
    if x0 >= fw or y0 >= fh or x0 + w <= 0 or y0 + h <= 0:
        raise TrackerLost(f"window at ({x0}, {y0}) size {w}x{h} is outside the frame")
    if x0 >= 0 and y0 >= 0 and x0 + w <= fw and y0 + h <= fh:
        return frame[y0:y0 + h, x0:x0 + w]
    rows = np.clip(np.arange(y0, y0 + h), 0, fh - 1)
    cols = np.clip(np.arange(x0, x0 + w), 0, fw - 1)
    return frame[np.ix_(rows, cols)]


def extract_patch(frame: np.ndarray, box: BoundingBox, padding: float) -> np.ndarray:
    """Crop ``box`` inflated by ``1 + padding`` about its centre."""
    if padding < 0:
        raise ValueError("padding must be non-negative")
    fh, fw = np.shape(frame)[:2]
    if box.clip(fw, fh) is None:
        raise TrackerLost(f"{box} lies outside the {fw}x{fh} frame")
    w, h = inflated_size(box.w, box.h, padding)
    cx, cy = box.centroid
    return extract_window(frame, cx, cy, w, h)


def _resize_to_cells(patch: np.ndarray, cell: int) -> np.ndarray:
    h, w = patch.shape[:2]
    nh = max(cell, int(round(h / cell)) * cell)
    nw = max(cell, int(round(w / cell)) * cell)
    if (nh, nw) == (h, w):
        return patch
    img = Image.fromarray(np.ascontiguousarray(patch, dtype=np.uint8))
    return np.asarray(img.resize((nw, nh), Image.BILINEAR))


def featurize(
    patch: np.ndarray, table: ColorNamesTable, cell: int = 1, dtype=np.float64
) -> np.ndarray:
    """Windowed grayscale + color-names features, shape ``(h/cell, w/cell, 11)``."""
    if cell < 1:
        raise ValueError("cell must be >= 1")
    patch = _resize_to_cells(as_rgb(patch), cell)
    rgb = patch.astype(np.float64)
    h, w = patch.shape[:2]
    feat = np.empty((h, w, N_CHANNELS))
    feat[:, :, 0] = (rgb @ np.array([0.299, 0.587, 0.114])) / 255.0 - 0.5
    feat[:, :, 1:] = table.lookup(patch)
    if cell > 1:
        feat = feat.reshape(h // cell, cell, w // cell, cell, N_CHANNELS).mean(axis=(1, 3))
    feat *= _hann2d_cached(feat.shape[1], feat.shape[0])[:, :, None]
    return feat.astype(dtype, copy=False)
