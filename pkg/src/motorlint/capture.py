"""Capture model: geometry, uiautomator hierarchy parsing and capture loading.

A capture directory holds ``<name>.png`` / ``<name>.xml`` pairs produced by an
input-generation tool (one pair per visited screen). :func:`load_capture`
turns such a directory into an :class:`AppCapture`.
"""
from __future__ import annotations

import logging
import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .errors import MalformedBounds, MalformedXml, NoPairsFound

logger = logging.getLogger(__name__)

_BOUNDS_RE = re.compile(r"^\s*\[(\d+),(\d+)\]\[(\d+),(\d+)\]\s*$")


@dataclass(frozen=True, order=True)
class Rect:
    """Integer pixel rectangle, right/bottom exclusive."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if self.right < self.left or self.bottom < self.top:
            raise ValueError(f"negative extent: {tuple(self)}")

    def __iter__(self):
        return iter((self.left, self.top, self.right, self.bottom))

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    @property
    def area(self) -> int:
        return self.width * self.height

    def intersection(self, other: Rect) -> Rect | None:
        left, top = max(self.left, other.left), max(self.top, other.top)
        right, bottom = min(self.right, other.right), min(self.bottom, other.bottom)
        if right < left or bottom < top:
            return None
        return Rect(left, top, right, bottom)

    def intersects(self, other: Rect) -> bool:
        """True when the two rects share a region of positive area."""
        inter = self.intersection(other)
        return inter is not None and inter.area > 0

    def contains(self, other: Rect) -> bool:
        return (self.left <= other.left and self.top <= other.top
                and other.right <= self.right and other.bottom <= self.bottom)

    def union(self, other: Rect) -> Rect:
        return Rect(min(self.left, other.left), min(self.top, other.top),
                    max(self.right, other.right), max(self.bottom, other.bottom))

    def clamp(self, bounds: Rect) -> Rect:
        """Clamp into ``bounds``; a rect fully outside collapses onto its edge."""
        left = min(max(self.left, bounds.left), bounds.right)
        top = min(max(self.top, bounds.top), bounds.bottom)
        right = min(max(self.right, left), bounds.right)
        bottom = min(max(self.bottom, top), bounds.bottom)
        return Rect(left, top, right, bottom)

    def translate(self, dx: int, dy: int) -> Rect:
        return Rect(self.left + dx, self.top + dy, self.right + dx, self.bottom + dy)

    def iou(self, other: Rect) -> float:
        inter = self.intersection(other)
        if inter is None or inter.area == 0:
            return 0.0
        return inter.area / (self.area + other.area - inter.area)

    def to_list(self) -> list[int]:
        return [self.left, self.top, self.right, self.bottom]


def parse_bounds(s: str) -> tuple[Rect, bool]:
    """Parse a uiautomator ``[x1,y1][x2,y2]`` string.

    Returns the rect and a flag telling whether the corners had to be
    swapped to make the rect well formed.
    """
    m = _BOUNDS_RE.match(s or "")
    if m is None:
        raise MalformedBounds(f"cannot parse bounds {s!r}")
    x1, y1, x2, y2 = (int(g) for g in m.groups())
    swapped = x2 < x1 or y2 < y1
    return Rect(min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2)), swapped


def format_bounds(r: Rect) -> str:
    return f"[{r.left},{r.top}][{r.right},{r.bottom}]"


@dataclass(frozen=True)
class UiElement:
    """One node of a view hierarchy.

    ``index`` is the node's position in document order (the virtual
    ``hierarchy`` root is -1); it gives elements without a resource-id a
    stable name.
    """

    class_name: str
    bounds: Rect
    element_id: str | None = None
    text: str | None = None
    content_desc: str | None = None
    clickable: bool = False
    children: tuple[UiElement, ...] = ()
    index: int = -1

    def walk(self) -> Iterator[UiElement]:
        """Yield this element and all descendants in document order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def descendants(self) -> Iterator[UiElement]:
        it = self.walk()
        next(it)
        return it

    @property
    def label(self) -> str:
        if self.element_id:
            return self.element_id
        short = self.class_name.rsplit(".", 1)[-1] or "node"
        return f"{short}#{self.index}"


def _opt(value: str | None) -> str | None:
    return value if value else None


def parse_hierarchy(xml_bytes: bytes | str, warnings: list[str] | None = None) -> UiElement:
    """Parse a uiautomator dump into an element tree.

    The returned root is a virtual element of class ``hierarchy`` whose
    children are the dump's top-level ``node`` elements, so dumps with
    several windows keep all of them. Its bounds are the union of its
    children's bounds. Problems that do not prevent parsing (swapped
    corners, an empty hierarchy) are appended to ``warnings``.
    """
    if warnings is None:
        warnings = []
    try:
        tree = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if tree.tag != "hierarchy":
        raise MalformedXml(f"root element is <{tree.tag}>, expected <hierarchy>")

    counter = 0

    def build(node: ET.Element) -> UiElement:
        nonlocal counter
        index = counter
        counter += 1
        raw = node.get("bounds")
        if raw is None:
            bounds = Rect(0, 0, 0, 0)
            warnings.append(f"node {index} has no bounds")
        else:
            bounds, swapped = parse_bounds(raw)
            if swapped:
                warnings.append(f"node {index} bounds {raw} normalized")
        children = tuple(build(child) for child in node if child.tag == "node")
        return UiElement(
            class_name=node.get("class", ""),
            bounds=bounds,
            element_id=_opt(node.get("resource-id")),
            text=_opt(node.get("text")),
            content_desc=_opt(node.get("content-desc")),
            clickable=node.get("clickable", "").strip().lower() == "true",
            children=children,
            index=index,
        )

    top = tuple(build(child) for child in tree if child.tag == "node")
    if not top:
        warnings.append("empty hierarchy: no <node> elements")
        bounds = Rect(0, 0, 0, 0)
    else:
        bounds = top[0].bounds
        for child in top[1:]:
            bounds = bounds.union(child.bounds)
    return UiElement(class_name="hierarchy", bounds=bounds, children=top, index=-1)


def _clamp_tree(element: UiElement, screen: Rect, warnings: list[str]) -> UiElement:
    bounds = element.bounds
    if not screen.contains(bounds):
        clamped = bounds.clamp(screen)
        if element.index >= 0:
            warnings.append(f"{element.label} bounds {format_bounds(bounds)} clamped to "
                            f"{format_bounds(clamped)}")
        bounds = clamped
    children = tuple(_clamp_tree(c, screen, warnings) for c in element.children)
    return replace(element, bounds=bounds, children=children)


@dataclass(frozen=True, eq=False)
class UiScreen:
    """A screenshot and the hierarchy dumped alongside it."""

    name: str
    image: np.ndarray
    root: UiElement
    warnings: tuple[str, ...] = ()

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    @property
    def height(self) -> int:
        return int(self.image.shape[0])

    @property
    def screen_rect(self) -> Rect:
        return Rect(0, 0, self.width, self.height)

    @property
    def image_file(self) -> str:
        return f"{self.name}.png"

    def elements(self) -> Iterator[UiElement]:
        """All real nodes (the virtual root excluded) in document order."""
        return self.root.descendants()

    @classmethod
    def from_parts(cls, name: str, image: np.ndarray, root: UiElement,
                   warnings: list[str] | tuple[str, ...] = ()) -> UiScreen:
        """Build a screen, flattening the image to RGB and clamping bounds."""
        image = as_rgb(image)
        if image.shape[0] == 0 or image.shape[1] == 0:
            raise ValueError(f"screen {name!r} has an empty image")
        image.flags.writeable = False
        notes = list(warnings)
        root = _clamp_tree(root, Rect(0, 0, image.shape[1], image.shape[0]), notes)
        return cls(name=name, image=image, root=root, warnings=tuple(notes))


@dataclass(frozen=True, eq=False)
class AppCapture:
    app_id: str
    screens: tuple[UiScreen, ...]
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        names = [s.name for s in self.screens]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate screen names in app {self.app_id!r}")

    def screen(self, name: str) -> UiScreen:
        for s in self.screens:
            if s.name == name:
                return s
        raise KeyError(name)


def as_rgb(image) -> np.ndarray:
    """Return an HxWx3 uint8 copy; alpha is flattened over white."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3:
        raise ValueError(f"unsupported image shape {arr.shape}")
    if arr.shape[2] == 4:
        alpha = arr[:, :, 3:4].astype(np.float64) / 255.0
        rgb = arr[:, :, :3].astype(np.float64) * alpha + 255.0 * (1.0 - alpha)
        arr = np.rint(rgb)
    elif arr.shape[2] != 3:
        raise ValueError(f"unsupported channel count {arr.shape[2]}")
    return np.ascontiguousarray(arr, dtype=np.uint8).copy()


def load_image(path: str | os.PathLike) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode in ("RGBA", "LA") or (im.mode == "P" and "transparency" in im.info):
            im = im.convert("RGBA")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        return as_rgb(np.asarray(im))


def load_screen(png_path: str | os.PathLike, xml_path: str | os.PathLike,
                name: str | None = None) -> UiScreen:
    png_path, xml_path = Path(png_path), Path(xml_path)
    notes: list[str] = []
    root = parse_hierarchy(xml_path.read_bytes(), notes)
    return UiScreen.from_parts(name or png_path.stem, load_image(png_path), root, notes)


def load_capture(dir_path: str | os.PathLike, app_id: str | None = None) -> AppCapture:
    """Load every complete png/xml pair of a directory.

    Pairs are matched by identical basename and sorted by name. Files
    without a partner only produce warnings; zero complete pairs raise
    :class:`NoPairsFound`.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise NoPairsFound(f"{root} is not a directory")
    pngs, xmls = {}, {}
    for entry in root.iterdir():
        if not entry.is_file():
            continue
        suffix = entry.suffix.lower()
        if suffix == ".png":
            pngs[entry.stem] = entry
        elif suffix == ".xml":
            xmls[entry.stem] = entry
    names = sorted(pngs.keys() & xmls.keys())
    unpaired = [pngs.get(stem) or xmls[stem] for stem in set(pngs) ^ set(xmls)]
    warnings = [f"unpaired file {p.name}" for p in sorted(unpaired)]
    if not names:
        raise NoPairsFound(f"no png/xml pairs in {root}")
    screens = tuple(load_screen(pngs[n], xmls[n], n) for n in names)
    for w in warnings:
        logger.warning("%s: %s", root.name, w)
    return AppCapture(app_id=app_id or root.name, screens=screens, warnings=tuple(warnings))


def _has_pairs(path: Path) -> bool:
    return any(p.is_file() and p.suffix.lower() in (".png", ".xml") for p in path.iterdir())


def load_capture_set(dir_path: str | os.PathLike) -> list[AppCapture]:
    """One app directory, or a directory holding one subdirectory per app.

    A directory that directly contains png/xml files is a single app;
    otherwise every non-hidden subdirectory is loaded as an app, sorted by
    name.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise NoPairsFound(f"{root} is not a directory")
    if _has_pairs(root):
        return [load_capture(root)]
    apps = sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))
    if not apps:
        raise NoPairsFound(f"no captures under {root}")
    return [load_capture(p) for p in apps]
