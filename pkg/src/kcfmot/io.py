"""Reading and writing numbered frame and mask images."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

FILE_PATTERN = "%06d.png"


class SequenceError(RuntimeError):
    """Missing or inconsistent image files."""


def read_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in ("RGB", "L"):
            img = img.convert("RGB")
        return np.asarray(img)


def read_mask(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) != 0


def write_image(path: str | Path, image: np.ndarray) -> None:
    arr = np.asarray(image)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8)).save(path)


def expand_pattern(pattern: str) -> str:
    """Accept a directory as shorthand for ``<dir>/%06d.png``."""
    if "%" not in pattern and os.path.isdir(pattern):
        return os.path.join(pattern, FILE_PATTERN)
    return pattern


def list_sequence(pattern: str, start: int | None = None) -> list[tuple[int, str]]:
    """Numbered files matching a printf-style ``pattern``, as ``(index, path)``.

    Numbering starts at ``start`` (by default 0, or 1 if there is no file 0)
    and stops at the first missing index.
    """
    pattern = expand_pattern(pattern)
    if "%" not in pattern:
        raise SequenceError(f"pattern {pattern!r} has no frame-number field")
    if start is None:
        start = 0 if os.path.exists(pattern % 0) else 1
    items = []
    i = start
    while os.path.exists(pattern % i):
        items.append((i, pattern % i))
        i += 1
    return items


def write_sequence(out_dir: str | Path, frames, masks=None, start: int = 0) -> None:
    """Write ``frames/`` (and ``masks/``) as numbered PNG files under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames, start):
        write_image(out_dir / "frames" / (FILE_PATTERN % i), frame)
    if masks is not None:
        (out_dir / "masks").mkdir(parents=True, exist_ok=True)
        for i, mask in enumerate(masks, start):
            write_image(out_dir / "masks" / (FILE_PATTERN % i), mask)
