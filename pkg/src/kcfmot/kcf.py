"""Single-object kernelized correlation filter with a Gaussian kernel.

Conventions, for a feature patch ``x`` of shape ``(rows, cols, channels)``:

* ``gaussian_correlation(x, z)[s] = exp(-|roll(z, -s) - x|^2 / (sigma^2 * N))``
  with ``N = x.size``; it is evaluated for every cyclic shift ``s`` at once
  with FFTs.
* The regression target peaks at shift ``(0, 0)`` and wraps around, so a
  response maximum at row ``r`` means a displacement of ``r`` (or ``r - rows``
  past the half-way point).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .features import (
    ColorNamesTable,
    extract_window,
    featurize,
    inflated_size,
    load_color_names,
)
from .geometry import BoundingBox

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class KcfParams:
    sigma_kernel: float = 0.5
    lambda_: float = 1e-4
    learning_rate: float = 0.02
    output_sigma_factor: float = 0.1
    padding: float = 1.0
    cell: int = 1

    def __post_init__(self) -> None:
        if not self.sigma_kernel > 0:
            raise ValueError("sigma_kernel must be > 0")
        if not self.lambda_ >= 0:
            raise ValueError("lambda must be >= 0")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in [0, 1]")
        if not self.output_sigma_factor > 0:
            raise ValueError("output_sigma_factor must be > 0")
        if not self.padding >= 0:
            raise ValueError("padding must be >= 0")
        if int(self.cell) != self.cell or self.cell < 1:
            raise ValueError("cell must be an integer >= 1")


@dataclass(frozen=True)
class Response:
    map: np.ndarray
    peak_value: float
    peak_offset: tuple[int, int]


@dataclass(frozen=True)
class KcfModel:
    """Learned filter state.

    ``window_size`` and ``target_size`` are ``(w, h)`` in pixels and never
    change after training; adapting to a new scale means training a new model.
    """

    alphaf: np.ndarray
    template: np.ndarray
    window_size: tuple[int, int]
    target_size: tuple[int, int]
    params: KcfParams = field(default_factory=KcfParams)
    # Spectrum of ``template``, kept alongside it to save a transform per detection.
    template_f: np.ndarray | None = field(default=None, repr=False, compare=False)


def _check_same_shape(a: tuple, b: tuple) -> None:
    if tuple(a) != tuple(b):
        raise ValueError(f"feature shapes differ: {tuple(a)} vs {tuple(b)}")


def _as_3d(x: np.ndarray) -> np.ndarray:
    # Single precision is kept as is (the tracking path); anything else goes to double.
    x = np.asarray(x)
    if x.dtype != np.float32:
        x = x.astype(np.float64)
    return x[:, :, None] if x.ndim == 2 else x


def gaussian_correlation(x: np.ndarray, z: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian kernel between ``x`` and every cyclic shift of ``z``."""
    _check_same_shape(np.shape(x), np.shape(z))
    x, z = _as_3d(x), _as_3d(z)
    xf = sfft.fft2(x, axes=(0, 1))
    zf = sfft.fft2(z, axes=(0, 1))
    return _gaussian_correlation_f(x, xf, z, zf, sigma)


def _gaussian_correlation_f(x, xf, z, zf, sigma):
    cross = sfft.ifft2(np.einsum("ijk,ijk->ij", xf.conj(), zf)).real
    d2 = np.vdot(x, x) + np.vdot(z, z) - 2.0 * cross
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (sigma * sigma * x.size))


def gaussian_label(rows: int, cols: int, sigma: float) -> np.ndarray:
    """Gaussian regression target peaking at shift (0, 0), wrapped cyclically."""
    r = np.arange(rows) - rows // 2
    c = np.arange(cols) - cols // 2
    g = np.exp(-0.5 * (r[:, None] ** 2 + c[None, :] ** 2) / sigma ** 2)
    return np.roll(g, (-(rows // 2), -(cols // 2)), axis=(0, 1))


@lru_cache(maxsize=128)
def _label_spectrum(rows: int, cols: int, sigma: float) -> np.ndarray:
    yf = sfft.fft2(gaussian_label(rows, cols, sigma))
    yf.setflags(write=False)
    return yf


def label_sigma(target_size: tuple[int, int], params: KcfParams) -> float:
    tw, th = target_size
    return params.output_sigma_factor * np.sqrt(tw * th) / params.cell


def _solve_alphaf(x: np.ndarray, params: KcfParams, target_size) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = x.shape[:2]
    yf = _label_spectrum(rows, cols, float(label_sigma(target_size, params)))
    xf = sfft.fft2(x, axes=(0, 1))
    kf = sfft.fft2(_gaussian_correlation_f(x, xf, x, xf, params.sigma_kernel))
    denom = kf + params.lambda_
    small = np.abs(denom) < DENOMINATOR_FLOOR
    if small.any():
        denom = np.where(small, DENOMINATOR_FLOOR, denom)
    return (yf / denom).astype(xf.dtype, copy=False), xf


def train(
    patch: np.ndarray,
    params: KcfParams | None = None,
    target_size: tuple[int, int] | None = None,
) -> KcfModel:
    """Fit the dual ridge-regression coefficients to one windowed patch.

    ``target_size`` (object size in pixels) sets the width of the regression
    target; by default it is the window size deflated by the padding.
    """
    params = params or KcfParams()
    x = _as_3d(patch)
    rows, cols = x.shape[:2]
    window = (cols * params.cell, rows * params.cell)
    if target_size is None:
        target_size = (
            max(1, int(round(window[0] / (1.0 + params.padding)))),
            max(1, int(round(window[1] / (1.0 + params.padding)))),
        )
    alphaf, xf = _solve_alphaf(x, params, target_size)
    return KcfModel(alphaf, x.copy(), window, tuple(target_size), params, xf)


def detect(model: KcfModel, patch: np.ndarray) -> Response:
    z = _as_3d(patch)
    _check_same_shape(model.template.shape, z.shape)
    x = model.template
    xf = model.template_f if model.template_f is not None else sfft.fft2(x, axes=(0, 1))
    k = _gaussian_correlation_f(x, xf, z, sfft.fft2(z, axes=(0, 1)), model.params.sigma_kernel)
    resp = sfft.ifft2(model.alphaf * sfft.fft2(k))
    resp_map = resp.real
    rows, cols = resp_map.shape
    r, c = np.unravel_index(int(np.argmax(resp_map)), resp_map.shape)
    if r >= rows / 2.0:
        r -= rows
    if c >= cols / 2.0:
        c -= cols
    cell = model.params.cell
    return Response(resp_map, float(resp_map.max()), (int(c) * cell, int(r) * cell))


def update(model: KcfModel, patch: np.ndarray) -> KcfModel:
    """Blend a freshly trained model on ``patch`` into ``model``."""
    x = _as_3d(patch)
    _check_same_shape(model.template.shape, x.shape)
    lr = model.params.learning_rate
    if lr == 0.0:
        return model
    alphaf, xf = _solve_alphaf(x, model.params, model.target_size)
    if lr == 1.0:
        return replace(model, alphaf=alphaf, template=x.copy(), template_f=xf)
    old_xf = model.template_f if model.template_f is not None else sfft.fft2(model.template, axes=(0, 1))
    return replace(
        model,
        alphaf=(1.0 - lr) * model.alphaf + lr * alphaf,
        template=(1.0 - lr) * model.template + lr * x,
        template_f=(1.0 - lr) * old_xf + lr * xf,
    )


def window_size_for(box: BoundingBox, params: KcfParams) -> tuple[int, int]:
    """Padded search window for ``box``, rounded up to whole cells."""
    w, h = inflated_size(box.w, box.h, params.padding)
    cell = params.cell
    return -(-w // cell) * cell, -(-h // cell) * cell


def init_model(
    frame: np.ndarray,
    box: BoundingBox,
    params: KcfParams | None = None,
    table: ColorNamesTable | None = None,
) -> KcfModel:
    """Train a new model on ``box`` in ``frame``."""
    params = params or KcfParams()
    table = table or load_color_names()
    w, h = window_size_for(box, params)
    cx, cy = box.centroid
    x = featurize(extract_window(frame, cx, cy, w, h), table, params.cell, np.float32)
    return train(x, params, (box.w, box.h))


def locate(
    model: KcfModel,
    frame: np.ndarray,
    prev_box: BoundingBox,
    table: ColorNamesTable | None = None,
) -> tuple[BoundingBox, Response]:
    """Detect the object around ``prev_box`` without touching the model.

    The returned box always has the model's target size.
    """
    table = table or load_color_names()
    w, h = model.window_size
    cx, cy = prev_box.centroid
    z = featurize(extract_window(frame, cx, cy, w, h), table, model.params.cell, np.float32)
    response = detect(model, z)
    dx, dy = response.peak_offset
    tw, th = model.target_size
    return BoundingBox.from_center(cx + dx, cy + dy, tw, th), response


def update_at(
    model: KcfModel,
    frame: np.ndarray,
    box: BoundingBox,
    table: ColorNamesTable | None = None,
) -> KcfModel:
    """Blend in the appearance of the window centred on ``box``."""
    if model.params.learning_rate == 0.0:
        return model
    table = table or load_color_names()
    w, h = model.window_size
    cx, cy = box.centroid
    return update(model, featurize(extract_window(frame, cx, cy, w, h), table, model.params.cell, np.float32))


def step(
    model: KcfModel,
    frame: np.ndarray,
    prev_box: BoundingBox,
    table: ColorNamesTable | None = None,
) -> tuple[BoundingBox, Response, KcfModel]:
    """Locate the object in ``frame`` starting from ``prev_box``, then update the model.

    Raises TrackerLost if the search window falls entirely outside the frame.
    """
    table = table or load_color_names()
    new_box, response = locate(model, frame, prev_box, table)
    return new_box, response, update_at(model, frame, new_box, table)
