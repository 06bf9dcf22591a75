"""Synthetic closure-icon dataset: one icon composited per background.

Records are lightweight; the composited image is rendered on access so a
dataset of several thousand 1080x1920 screens does not live in memory.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from ..capture import Rect
from ..errors import InvalidParams
from .icons import IconKind, IconTemplate, SCALE_RANGE

#: Reference screen the pixel size limits are defined on.
REFERENCE_EXTENT = 1920
MIN_ICON_PX = 38
MAX_ICON_PX = 192

_MIN_CONTRAST = 0.35


def paste_icon(image: np.ndarray, template: IconTemplate, rect: Rect, color) -> np.ndarray:
    """Alpha-composite ``template`` in ``color`` over ``image`` at ``rect`` (in place)."""
    if rect.width != rect.height:
        raise ValueError("icon rects are square")
    alpha = template.render(rect.width)[:, :, None].astype(np.float64)
    region = image[rect.top:rect.bottom, rect.left:rect.right].astype(np.float64)
    out = region * (1.0 - alpha) + np.asarray(color, dtype=np.float64) * alpha
    image[rect.top:rect.bottom, rect.left:rect.right] = np.rint(out).astype(np.uint8)
    return image


@dataclass(frozen=True, eq=False)
class _Source:
    backgrounds: tuple[np.ndarray, ...]
    bank: tuple[IconTemplate, ...]


@dataclass(frozen=True)
class SyntheticRecord:
    index: int
    kind: IconKind
    rect: Rect
    split: str
    background: int
    template: int
    color: tuple[int, int, int]
    source: _Source = field(repr=False, compare=False)

    @property
    def image(self) -> np.ndarray:
        canvas = self.source.backgrounds[self.background].copy()
        return paste_icon(canvas, self.source.bank[self.template], self.rect, self.color)

    @property
    def file(self) -> str:
        return f"{self.split}_{self.index:05d}.png"

    def manifest_entry(self) -> dict:
        return {"index": self.index, "file": self.file, "kind": self.kind.value, "rect": self.rect.to_list(),
                "split": self.split, "background": self.background, "template": self.template,
                "color": list(self.color)}


def icon_size_bounds(extent: int) -> tuple[int, int]:
    scale = extent / REFERENCE_EXTENT
    return max(1, round(MIN_ICON_PX * scale)), max(1, round(MAX_ICON_PX * scale))


def _luma(rgb) -> float:
    r, g, b = rgb
    return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0


def _pick_color(rng: np.random.Generator, local_luma: float) -> tuple[int, int, int]:
    for _ in range(32):
        color = tuple(int(v) for v in rng.integers(0, 256, size=3))
        if abs(_luma(color) - local_luma) >= _MIN_CONTRAST:
            return color
    return (0, 0, 0) if local_luma > 0.5 else (255, 255, 255)


def generate_synthetic_dataset(backgrounds: Sequence[np.ndarray], bank: Sequence[IconTemplate],
                               count: int, split_ratio: float, seed: int):
    """Composite ``count`` icons onto backgrounds and split train/test.

    Kinds cycle round-robin over the bank's kinds. Icon height is drawn
    uniformly from 2%-10% of the background's larger side and clamped to
    the 38-192 px limits (scaled from a 1920 px reference). The first
    ``round(count * split_ratio)`` records of a seeded shuffle form the
    training split.

    Returns ``(train, test)`` lists of :class:`SyntheticRecord`.
    """
    if count < 1:
        raise InvalidParams("count must be >= 1")
    if not 0.0 < split_ratio < 1.0:
        raise InvalidParams("split_ratio must lie strictly between 0 and 1")
    if not backgrounds:
        raise InvalidParams("at least one background is required")
    if not bank:
        raise InvalidParams("the template bank is empty")
    bgs = []
    for bg in backgrounds:
        arr = np.asarray(bg)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise InvalidParams("backgrounds must be HxWx3 uint8 arrays")
        arr = arr.copy()
        arr.flags.writeable = False
        bgs.append(arr)
    source = _Source(tuple(bgs), tuple(bank))
    kinds = list(dict.fromkeys(t.kind for t in bank))
    by_kind = {k: [i for i, t in enumerate(bank) if t.kind == k] for k in kinds}

    rng = np.random.default_rng(seed)
    n_train = int(round(count * split_ratio))
    order = rng.permutation(count)
    split_of = np.empty(count, dtype=object)
    split_of[order[:n_train]] = "train"
    split_of[order[n_train:]] = "test"

    records = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        template = int(rng.choice(by_kind[kind]))
        b = int(rng.integers(len(bgs)))
        bg = bgs[b]
        H, W = bg.shape[:2]
        extent = max(H, W)
        lo, hi = icon_size_bounds(extent)
        size = int(round(rng.uniform(*SCALE_RANGE) * extent))
        size = min(max(size, lo), hi, H, W)
        left = int(rng.integers(0, W - size + 1))
        top = int(rng.integers(0, H - size + 1))
        rect = Rect(left, top, left + size, top + size)
        local = bg[top:top + size, left:left + size].reshape(-1, 3).mean(axis=0)
        color = _pick_color(rng, _luma(local))
        records.append(SyntheticRecord(i, kind, rect, str(split_of[i]), b, template, color, source))
    train = [r for r in records if r.split == "train"]
    test = [r for r in records if r.split == "test"]
    return train, test


def mock_screens(n: int, seed: int, size: tuple[int, int] = (1080, 1920)) -> list[np.ndarray]:
    """Flat, app-like screens (bars, cards, text lines) to composite icons on."""
    rng = np.random.default_rng(seed)
    W, H = size
    out = []
    for _ in range(n):
        dark = rng.random() < 0.25
        base = rng.integers(10, 60, 3) if dark else rng.integers(225, 256, 3)
        img = np.empty((H, W, 3), dtype=np.uint8)
        img[:] = base
        bar_h = int(rng.integers(130, 180))
        img[:bar_h] = rng.integers(0, 256, 3)
        y = bar_h + int(rng.integers(30, 80))
        while y < H - 300:
            card_h = int(rng.integers(160, 420))
            margin = int(rng.integers(24, 60))
            shade = np.clip(base.astype(int) + rng.integers(-18, 19, 3), 0, 255)
            img[y:y + card_h, margin:W - margin] = shade
            ink = rng.integers(170, 240, 3) if dark else rng.integers(40, 110, 3)
            ty = y + 30
            for _line in range(int(rng.integers(1, 4))):
                if ty + 26 > y + card_h - 20:
                    break
                length = int(rng.integers(200, W - 2 * margin - 60))
                img[ty:ty + 22, margin + 30:margin + 30 + length] = ink
                ty += int(rng.integers(48, 70))
            y += card_h + int(rng.integers(30, 90))
        if rng.random() < 0.6:
            img[H - 150:] = np.clip(base.astype(int) + rng.integers(-30, 31, 3), 0, 255)
        out.append(img)
    return out


def load_backgrounds(dir_path: str | os.PathLike) -> list[np.ndarray]:
    from ..capture import load_image

    paths = sorted(p for p in Path(dir_path).iterdir()
                   if p.is_file() and p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    if not paths:
        raise InvalidParams(f"no background images in {dir_path}")
    return [load_image(p) for p in paths]


def write_dataset(train, test, out_dir: str | os.PathLike, *, images: bool = True) -> Path:
    """Write PNGs (optional) and ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sorted([*train, *test], key=lambda r: r.index)
    if images:
        for r in records:
            Image.fromarray(r.image).save(out / r.file, optimize=False)
    manifest = {
        "schema_version": 1,
        "counts": {"train": len(train), "test": len(test)},
        "records": [r.manifest_entry() for r in records],
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_manifest(path: str | os.PathLike, backgrounds: Sequence[np.ndarray],
                  bank: Sequence[IconTemplate]):
    """Rebuild ``(train, test)`` records from a manifest written by :func:`write_dataset`.

    ``backgrounds`` and ``bank`` must be the ones the dataset was generated
    from; images are rendered on access as usual.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    source = _Source(tuple(np.asarray(b) for b in backgrounds), tuple(bank))
    train, test = [], []
    for e in doc["records"]:
        rec = SyntheticRecord(e["index"], IconKind(e["kind"]), Rect(*e["rect"]), e["split"], e["background"],
                              e["template"], tuple(e["color"]), source)
        (train if rec.split == "train" else test).append(rec)
    return train, test


__all__ = [
    "SyntheticRecord", "generate_synthetic_dataset", "icon_size_bounds", "load_backgrounds", "load_manifest",
    "mock_screens", "paste_icon", "write_dataset", "MIN_ICON_PX", "MAX_ICON_PX",
]
