"""Crops, visual-bounds estimation and pixel similarity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..capture import Rect
from ..errors import EmptyCrop

#: Per-channel deviation (0-255) above which a pixel counts as foreground.
FOREGROUND_TOLERANCE = 24
#: Components smaller than this many pixels are treated as noise.
MIN_COMPONENT_AREA = 4
#: Quantization step used when voting for the background color.
_BG_QUANT = 16

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Crop:
    pixels: np.ndarray
    origin: Rect

    def __post_init__(self):
        h, w = self.pixels.shape[:2]
        if (w, h) != (self.origin.width, self.origin.height):
            raise ValueError(f"pixels {w}x{h} do not match origin {self.origin}")


def image_rect(image: np.ndarray) -> Rect:
    return Rect(0, 0, int(image.shape[1]), int(image.shape[0]))


def crop(image: np.ndarray, r: Rect) -> Crop:
    """Copy the part of ``image`` under ``r`` (clamped to the image)."""
    inter = r.clamp(image_rect(image))
    if inter.area == 0:
        raise EmptyCrop(f"{r} does not overlap the {image.shape[1]}x{image.shape[0]} image")
    pixels = image[inter.top:inter.bottom, inter.left:inter.right].copy()
    return Crop(pixels, inter)


def expand_rect(r: Rect, pad: int, screen: Rect) -> Rect:
    """Grow ``r`` by ``pad`` pixels on every side, clamped to ``screen``."""
    if pad < 0:
        raise ValueError("pad must be non-negative")
    grown = Rect(r.left - pad, r.top - pad, r.right + pad, r.bottom + pad)
    return grown.clamp(screen)


def to_gray(pixels: np.ndarray) -> np.ndarray:
    """Luma in [0, 1] as float64."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        return arr / 255.0
    return arr[..., :3] @ _LUMA / 255.0


def estimate_background(pixels: np.ndarray) -> np.ndarray:
    """Modal color of the 1-pixel border ring.

    Colors are binned at 16 levels per channel; the winning bin's mean
    color is returned. Ties go to the smallest bin key.
    """
    px = np.asarray(pixels)
    if px.ndim == 2:
        px = px[:, :, None]
    h, w = px.shape[:2]
    if h <= 2 or w <= 2:
        ring = px.reshape(-1, px.shape[2])
    else:
        ring = np.concatenate([px[0], px[-1], px[1:-1, 0], px[1:-1, -1]])
    ring = ring.astype(np.int64)
    q = ring // _BG_QUANT
    keys = (q * (_BG_QUANT ** np.arange(q.shape[1]))).sum(axis=1)
    uniq, counts = np.unique(keys, return_counts=True)
    winner = uniq[np.argmax(counts)]
    return ring[keys == winner].mean(axis=0)


def foreground_mask(pixels: np.ndarray, background, tolerance: float = FOREGROUND_TOLERANCE) -> np.ndarray:
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim == 2:
        px = px[:, :, None]
    dev = np.abs(px - np.asarray(background, dtype=np.float64)).max(axis=2)
    return dev > tolerance


def visual_bounds(c: Crop, *, tolerance: float = FOREGROUND_TOLERANCE,
                  min_area: int = MIN_COMPONENT_AREA, anchor: Rect | None = None) -> Rect | None:
    """Tight bounds (screenshot coordinates) of the glyph drawn in a crop.

    Background is the modal border color; pixels deviating from it by more
    than ``tolerance`` on any channel are foreground. The union of all
    4-connected foreground components of at least ``min_area`` pixels is
    returned, or None when there is none.

    With ``anchor`` set, only components overlapping that rect (screenshot
    coordinates) count, so a neighbor that leaks into a padded crop is not
    merged into the element's glyph.
    """
    if c.pixels.size == 0:
        raise EmptyCrop("empty crop")
    mask = foreground_mask(c.pixels, estimate_background(c.pixels), tolerance)
    if not mask.any():
        return None
    labels, n = ndimage.label(mask)
    if n == 0:
        return None
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    keep = areas >= min_area
    keep[0] = False
    if anchor is not None:
        local = anchor.translate(-c.origin.left, -c.origin.top).clamp(
            Rect(0, 0, c.origin.width, c.origin.height))
        touched = np.zeros(n + 1, dtype=bool)
        touched[np.unique(labels[local.top:local.bottom, local.left:local.right])] = True
        keep &= touched
    if not keep.any():
        return None
    ys, xs = np.nonzero(keep[labels])
    ox, oy = c.origin.left, c.origin.top
    return Rect(ox + int(xs.min()), oy + int(ys.min()), ox + int(xs.max()) + 1, oy + int(ys.max()) + 1)


def resize_nearest(arr: np.ndarray, height: int, width: int) -> np.ndarray:
    h, w = arr.shape[:2]
    rows = (np.arange(height) * h) // height
    cols = (np.arange(width) * w) // width
    return arr[rows[:, None], cols[None, :]]


def similarity(a: Crop, b: Crop) -> float:
    """``1 - MSE`` of the two crops in grayscale, ``b`` resized onto ``a``."""
    if a.pixels.size == 0 or b.pixels.size == 0:
        raise EmptyCrop("similarity of an empty crop")
    ga = to_gray(a.pixels)
    gb = to_gray(resize_nearest(b.pixels, ga.shape[0], ga.shape[1]))
    mse = float(np.mean((ga - gb) ** 2))
    return min(1.0, max(0.0, 1.0 - mse))
