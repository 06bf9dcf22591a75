"""Closure-icon templates and the default template-matching detector.

The matcher does not slide every template over the whole screen. Cheap
region proposals come from edge blobs and flat-color regions of a
downsampled image. Each proposal is scored by normalized cross-correlation
(NCC) against every template, over the template heights allowed for the
screen (every integer height in 2%-10% of its larger side). Scoring runs
coarse to fine: a small rendering picks the template, a medium one the
height, and the final score and location come from full resolution.
Matches above ``threshold`` go through class-agnostic non-maximum
suppression.

NCC is taken in absolute value, so light-on-dark icons match as well as
dark-on-light ones.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import cv2
import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage
from skimage import measure

from ..capture import Rect
from .raster import Crop

NCC_THRESHOLD = 0.80
NMS_IOU = 0.3
SCALE_RANGE = (0.02, 0.10)
#: Reference heights (fractions of the larger screen side) always in the ladder.
ANCHOR_SCALES = (0.02, 0.04, 0.06, 0.08, 0.10)

_BASE = 256
_COARSE_SCORE = 0.55
_COARSE_SIDE = 24
_MID_SIDE = 48
#: A second template is refined only when its coarse score is this close.
_RUNNER_UP = 0.1
_EDGE_LEVEL = 0.1
#: Color distance (0-1, max over channels) at which the keyed map reaches zero.
_KEY_RANGE = 0.25
#: Plain luma scores at or above this skip the keyed map.
_KEY_BELOW = 0.9
#: Right shift applied to each channel before color-region labeling.
_COLOR_SHIFT = 4
#: Proposals overlapping a larger one by more than this are dropped.
_PROPOSAL_IOU = 0.85
#: Share of a match's area inside a larger match that marks it as nested.
_NESTED = 0.9
#: Nested matches are only dropped when at most this fraction of the outer area.
_NESTED_AREA = 0.5
_PERFECT = 1.0 - 1e-6
_SAME_GUESS = 0.8
#: Ring kept around the glyph when scoring, as a fraction of the template side.
_SUPPORT_RING = 0.06


class IconKind(str, enum.Enum):
    CROSS = "cross"
    CHECKMARK = "checkmark"
    BACK_ARROW = "back_arrow"
    HAMBURGER = "hamburger"
    CHEVRON_DOWN = "chevron_down"
    DONE = "done"


@dataclass(frozen=True, eq=False)
class IconTemplate:
    """A square glyph; ``alpha`` is the coverage mask (uint8, 255 = ink)."""

    kind: IconKind
    alpha: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        h, w = self.alpha.shape
        if h < 8 or w < 8:
            raise ValueError("templates must be at least 8x8")

    @property
    def pixels(self) -> np.ndarray:
        """Grayscale rendering: dark glyph on white, 0-255."""
        return 255 - self.alpha

    def render(self, size: int) -> np.ndarray:
        """Coverage in [0, 1] resampled to ``size`` x ``size``."""
        out = self._cache.get(size)
        if out is None:
            out = cv2.resize(self.alpha.astype(np.float32) / 255.0, (size, size),
                             interpolation=cv2.INTER_AREA)
            out.flags.writeable = False
            self._cache[size] = out
        return out

    def support(self, size: int) -> np.ndarray:
        """Scoring mask: the glyph dilated by a thin ring, 0/1 float32."""
        key = ("support", size)
        out = self._cache.get(key)
        if out is None:
            base = self._cache.get("support")
            if base is None:
                r = max(1, int(round(_SUPPORT_RING * self.alpha.shape[0])))
                disk = cv2.getStructuringElement(cv2.MORPH_ELLIPSE, (2 * r + 1, 2 * r + 1))
                base = cv2.dilate((self.alpha > 0).astype(np.uint8), disk)
                self._cache["support"] = base
            out = cv2.resize(base, (size, size), interpolation=cv2.INTER_NEAREST).astype(np.float32)
            out.flags.writeable = False
            self._cache[key] = out
        return out

    @property
    def glyph_box(self) -> tuple[float, float, float, float]:
        """Inked extent as fractions of the template side (x0, y0, x1, y1)."""
        box = self._cache.get("box")
        if box is None:
            ys, xs = np.nonzero(self.alpha > 127)
            n = self.alpha.shape[0]
            box = (xs.min() / n, ys.min() / n, (xs.max() + 1) / n, (ys.max() + 1) / n)
            self._cache["box"] = box
        return box


@dataclass(frozen=True)
class IconMatch:
    kind: IconKind
    score: float
    location: Rect


def _draw(kind: IconKind) -> np.ndarray:
    im = Image.new("L", (_BASE, _BASE), 0)
    d = ImageDraw.Draw(im)
    if kind is IconKind.CROSS:
        d.line([(44, 44), (212, 212)], fill=255, width=38)
        d.line([(212, 44), (44, 212)], fill=255, width=38)
    elif kind is IconKind.CHECKMARK:
        d.line([(34, 132), (98, 196), (222, 62)], fill=255, width=38, joint="curve")
    elif kind is IconKind.BACK_ARROW:
        d.line([(52, 128), (224, 128)], fill=255, width=34)
        d.line([(124, 44), (40, 128), (124, 212)], fill=255, width=34, joint="curve")
    elif kind is IconKind.HAMBURGER:
        for top in (54, 110, 166):
            d.rectangle([36, top, 220, top + 36], fill=255)
    elif kind is IconKind.CHEVRON_DOWN:
        d.line([(36, 76), (128, 168), (220, 76)], fill=255, width=40, joint="curve")
    elif kind is IconKind.DONE:
        d.ellipse([14, 14, 242, 242], outline=255, width=22)
        d.line([(70, 134), (112, 176), (188, 92)], fill=255, width=26, joint="curve")
    return np.asarray(im, dtype=np.uint8).copy()


def default_bank() -> list[IconTemplate]:
    """One template per closure-icon kind."""
    return [IconTemplate(kind, _draw(kind)) for kind in IconKind]


def scale_ladder(extent: int) -> list[int]:
    """Every integer template height between 2% and 10% of ``extent``."""
    lo = max(8, round(SCALE_RANGE[0] * extent))
    hi = max(lo, round(SCALE_RANGE[1] * extent))
    return list(range(lo, hi + 1))


class IconDetector(Protocol):
    def __call__(self, c: Crop, bank: Sequence[IconTemplate], *,
                 screen_extent: int | None = None) -> list[IconMatch]: ...


def _ncc(window: np.ndarray, template: np.ndarray, mask: np.ndarray) -> np.ndarray:
    res = cv2.matchTemplate(window, template, cv2.TM_CCOEFF_NORMED, mask=mask)
    res[~np.isfinite(res)] = 0.0
    np.abs(res, out=res)
    np.minimum(res, 1.0, out=res)
    return res


def _edge_blobs(img: np.ndarray, k: int, h_max: int) -> list[Rect]:
    """Edge blobs of the downsampled image, long straight runs removed."""
    H, W = img.shape[:2]
    small = _gray32(cv2.resize(img, (max(1, W // k), max(1, H // k)), interpolation=cv2.INTER_AREA))
    grad = cv2.morphologyEx(small, cv2.MORPH_GRADIENT, np.ones((3, 3), np.uint8))
    ink = (grad > _EDGE_LEVEL).astype(np.uint8)
    run = int(1.25 * h_max / k) + 1
    bars = cv2.morphologyEx(ink, cv2.MORPH_OPEN, np.ones((1, run), np.uint8))
    bars |= cv2.morphologyEx(ink, cv2.MORPH_OPEN, np.ones((run, 1), np.uint8))
    ink &= 1 - bars
    closed = cv2.morphologyEx(ink, cv2.MORPH_CLOSE, np.ones((3, 3), np.uint8))
    blobs = set()
    for level in (ink, closed):
        _, _, stats, _ = cv2.connectedComponentsWithStats(level, connectivity=8)
        for x, y, w, h, _area in stats[1:]:
            blobs.add(Rect(int(x) * k, int(y) * k, int(x + w) * k, int(y + h) * k))
    return sorted(blobs)


def _color_blobs(img: np.ndarray, k: int) -> dict[int, list[Rect]]:
    """Regions of one quantized color on a nearest-neighbor downsample, by color."""
    small = img[::k, ::k]
    q = (small >> _COLOR_SHIFT).astype(np.int32)
    levels = 256 >> _COLOR_SHIFT
    keys = (q[..., 0] * levels + q[..., 1]) * levels + q[..., 2]
    labels = measure.label(keys, background=-1, connectivity=1)
    groups: dict[int, list[Rect]] = {}
    for i, sl in enumerate(ndimage.find_objects(labels)):
        if sl is None:
            continue
        ys, xs = sl
        key = int(keys[ys.start, xs.start]) if labels[ys.start, xs.start] == i + 1 else \
            int(keys[labels == i + 1][0])
        groups.setdefault(key, []).append(
            Rect(xs.start * k, ys.start * k, xs.stop * k, ys.stop * k))
    return groups


def _proposals(img: np.ndarray, h_min: int, h_max: int) -> list[Rect]:
    """Candidate icon boxes.

    Two sources: edge blobs (straight runs longer than the largest icon,
    such as bar borders and text-line outlines, are opened away first) and
    regions of a single quantized color, which keep a monochrome icon apart
    from clutter it touches. Blobs, and close pairs of blobs from one
    source (a hamburger is three), whose size fits the template range
    become proposals.
    """
    k = max(1, h_min // 12)
    lo, hi = 0.35 * h_min, 1.1 * h_max

    def fits(r: Rect) -> bool:
        return lo <= max(r.width, r.height) <= hi and min(r.width, r.height) >= 0.2 * h_min

    found: set[Rect] = set()
    groups = [_edge_blobs(img, k, h_max), *_color_blobs(img, k).values()]
    for group in groups:
        blobs = sorted(r for r in group if max(r.width, r.height) <= hi
                       and max(r.width, r.height) >= 0.1 * h_min)
        found.update(r for r in blobs if fits(r))
        for i, a in enumerate(blobs):
            for b in blobs[i + 1:]:
                if b.left - a.right > 0.3 * h_max:
                    break
                u = a.union(b)
                gap = max(b.top - a.bottom, a.top - b.bottom, b.left - a.right, a.left - b.right)
                if (gap <= 0.4 * max(u.width, u.height) and fits(u)
                        and max(u.width, u.height) <= 1.7 * min(u.width, u.height)):
                    found.add(u)
    kept: list[Rect] = []
    for r in sorted(found, key=lambda r: (-r.area, tuple(r))):
        if all(r.iou(o) <= _PROPOSAL_IOU for o in kept):
            kept.append(r)
    return sorted(kept)


def _window(img: np.ndarray, left: float, top: float, size: int, slack: int):
    H, W = img.shape[:2]
    x0, y0 = max(0, int(math.floor(left)) - slack), max(0, int(math.floor(top)) - slack)
    x1, y1 = min(W, int(math.ceil(left)) + size + slack), min(H, int(math.ceil(top)) + size + slack)
    if x1 - x0 < size or y1 - y0 < size:
        return None
    return x0, y0, img[y0:y1, x0:x1]


def _spread(values: list[int], n: int) -> list[int]:
    if len(values) <= n:
        return values
    idx = np.linspace(0, len(values) - 1, n).round().astype(int)
    return [values[i] for i in sorted(set(idx))]


def _gray32(rgb: np.ndarray) -> np.ndarray:
    return cv2.cvtColor(rgb, cv2.COLOR_RGB2GRAY).astype(np.float32) / 255.0


def _score(patch: np.ndarray, template: IconTemplate, size: int):
    """Best NCC of ``template`` in an RGB uint8 patch and its offset.

    Two maps are scored: plain luma, and a color-keyed map that marks how
    close each pixel is to the glyph color read under the template core at
    the luma peak. The keyed map ignores clutter in other colors.
    """
    tmpl, mask = template.render(size), template.support(size)
    res = _ncc(_gray32(patch), tmpl, mask)
    _, score, _, (px, py) = cv2.minMaxLoc(res)
    core = tmpl >= 0.8
    if score < _KEY_BELOW and core.any():
        rgb = patch.astype(np.float32) / 255.0
        color = np.median(rgb[py:py + size, px:px + size][core], axis=0)
        keyed = 1.0 - np.clip(np.abs(rgb - color).max(axis=2) / _KEY_RANGE, 0.0, 1.0)
        res = _ncc(keyed.astype(np.float32), tmpl, mask)
        _, keyed_score, _, loc = cv2.minMaxLoc(res)
        if keyed_score > score:
            score, (px, py) = keyed_score, loc
    return score, px, py


def _coarse(img, box: Rect, template: IconTemplate, ladder: list[int]):
    gx0, gy0, gx1, gy1 = template.glyph_box
    est_w, est_h = box.width / (gx1 - gx0), box.height / (gy1 - gy0)
    if max(est_w, est_h) > 1.45 * min(est_w, est_h):
        return None
    est = 0.5 * (est_w + est_h)
    heights = [h for h in ladder if 0.85 * est <= h <= 1.15 * est]
    best = None
    for h in _spread(heights, 3):
        f = min(1.0, _COARSE_SIDE / h)
        left = box.left + box.width / 2 - (gx0 + gx1) / 2 * h
        top = box.top + box.height / 2 - (gy0 + gy1) / 2 * h
        slack = int(0.15 * h) + 4
        win = _window(img, left, top, h, slack)
        if win is None:
            continue
        x0, y0, patch = win
        ts = max(4, int(round(h * f)))
        small = cv2.resize(patch, (max(ts, int(round(patch.shape[1] * f))),
                                   max(ts, int(round(patch.shape[0] * f)))),
                           interpolation=cv2.INTER_AREA)
        score, px, py = _score(small, template, ts)
        if best is None or score > best[0]:
            best = (score, h, x0 + px / f, y0 + py / f, f)
    return best


def _scan(img, template: IconTemplate, heights: list[int], h: int, left: float, top: float,
          slack: int, f: float):
    """Score ``heights`` centered on the ``h``-sized guess at scale ``f``."""
    best = None
    for size in heights:
        shift = (size - h) / 2
        win = _window(img, left - shift, top - shift, size, slack)
        if win is None:
            continue
        x0, y0, patch = win
        if f < 1.0:
            ts = max(4, int(round(size * f)))
            patch = cv2.resize(patch, (max(ts, int(round(patch.shape[1] * f))),
                                       max(ts, int(round(patch.shape[0] * f)))),
                               interpolation=cv2.INTER_AREA)
        else:
            ts = size
        score, px, py = _score(patch, template, ts)
        if best is None or score > best[0] + 1e-9:
            best = (score, size, x0 + px / f, y0 + py / f)
    return best


def _refine(img, template: IconTemplate, ladder: list[int], h: int, left: float, top: float, f: float):
    near = [v for v in ladder if 0.93 * h <= v <= 1.07 * h]
    g = min(1.0, _MID_SIDE / h)
    mid = _scan(img, template, _spread(near, 5), h, left, top, int(math.ceil(1.5 / f)) + 2, g)
    if mid is None:
        return None
    # full resolution: climb along the ladder from the medium-scale height
    _, hm, lm, tm = mid
    slack = int(math.ceil(1.0 / g)) + 1
    pos = {v: i for i, v in enumerate(ladder)}
    scored = {}

    def at(i):
        if i not in scored:
            scored[i] = _scan(img, template, [ladder[i]], hm, lm, tm, slack, 1.0)
        return scored[i]

    i = pos[hm]
    for _ in range(int(math.ceil(2.0 / g)) + 2):
        best = at(i)
        if best is not None and best[0] >= _PERFECT:
            break
        # scores zig-zag with the parity of the height, so look two steps each way
        moves = [(at(j)[0], j) for j in (i - 2, i - 1, i + 1, i + 2)
                 if 0 <= j < len(ladder) and at(j) is not None]
        if best is None or not moves:
            break
        score, j = max(moves, key=lambda m: (m[0], -abs(m[1] - i)))
        if score <= best[0] + 1e-9:
            break
        i = j
    best = at(i)
    if best is None:
        return None
    score, size, x, y = best
    x, y = int(round(x)), int(round(y))
    return score, Rect(x, y, x + size, y + size)


def nms(matches: list[IconMatch], iou: float = NMS_IOU) -> list[IconMatch]:
    """Greedy class-agnostic suppression, highest score first.

    A match lying almost entirely inside a much larger match is dropped
    first: composite glyphs (a check inside a ring) contain smaller ones.
    """
    def nested(m: IconMatch) -> bool:
        for o in matches:
            if m.location.area <= _NESTED_AREA * o.location.area:
                inter = o.location.intersection(m.location)
                if inter is not None and inter.area >= _NESTED * m.location.area:
                    return True
        return False

    ordered = sorted((m for m in matches if not nested(m)),
                     key=lambda m: (-m.score, tuple(m.location), m.kind.value))
    kept: list[IconMatch] = []
    for m in ordered:
        if all(m.location.iou(k.location) <= iou for k in kept):
            kept.append(m)
    return kept


def detect_closure_icons(c: Crop, bank: Sequence[IconTemplate] | None = None, *,
                         screen_extent: int | None = None, threshold: float = NCC_THRESHOLD,
                         nms_iou: float = NMS_IOU) -> list[IconMatch]:
    """Find closure icons in a crop; locations are in screenshot coordinates.

    ``screen_extent`` is the larger side of the screen the crop came from
    and fixes the range of template heights; it defaults to the crop's own
    larger side.
    """
    bank = default_bank() if bank is None else bank
    img = np.asarray(c.pixels)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    img = np.ascontiguousarray(img[:, :, :3], dtype=np.uint8)
    H, W = img.shape[:2]
    extent = screen_extent or max(H, W)
    ladder = [h for h in scale_ladder(extent) if h <= min(H, W)]
    if not ladder or not bank:
        return []
    found: list[IconMatch] = []
    tried: list[tuple[IconKind, Rect]] = []
    for box in _proposals(img, ladder[0], ladder[-1]):
        candidates = []
        for template in bank:
            coarse = _coarse(img, box, template, ladder)
            if coarse is not None and coarse[0] >= _COARSE_SCORE:
                candidates.append((coarse, template))
        candidates.sort(key=lambda item: -item[0][0])
        for rank, ((score, h, left, top, f), template) in enumerate(candidates[:2]):
            if rank and score < candidates[0][0][0] - _RUNNER_UP:
                break
            guess = (template.kind, Rect(int(left), int(top), int(left) + h, int(top) + h))
            # overlapping proposals of one icon converge to the same match
            if any(k is guess[0] and r.iou(guess[1]) >= _SAME_GUESS for k, r in tried):
                continue
            tried.append(guess)
            refined = _refine(img, template, ladder, h, left, top, f)
            if refined is not None and refined[0] >= threshold:
                loc = refined[1].translate(c.origin.left, c.origin.top)
                found.append(IconMatch(template.kind, round(float(refined[0]), 6), loc))
    return nms(found, nms_iou)
