"""The four motor-accessibility detectors and the per-app scan that runs them.

Single-screen detectors (expanding section, touch target, icon distance)
return a :class:`DetectorResult` per screen. The persisting-element
detector needs the whole app and runs once after the per-screen pass.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Mapping, Protocol, Sequence

from .capture import AppCapture, Rect, UiElement, UiScreen
from .config import ToolConfig
from .errors import EmptyCrop
from .lexicon import ClosureLexicon, default_lexicon, match_closure, normalize_tokens
from .vision import Crop, IconTemplate, crop, default_bank, detect_closure_icons, expand_rect, similarity, visual_bounds

logger = logging.getLogger(__name__)

SECTION_CLASSES = ("android.widget.FrameLayout", "android.widget.ListView")
#: Slack on float thresholds so values printed as the threshold compare as equal.
_EPS = 1e-9


class ViolationKind(str, enum.Enum):
    EXPANDING_SECTION = "expanding_section"
    TOUCH_TARGET = "touch_target"
    ICON_DISTANCE = "icon_distance"
    PERSISTING = "persisting"

    @property
    def order(self) -> int:
        return list(ViolationKind).index(self)


SCREEN_KINDS = (ViolationKind.EXPANDING_SECTION, ViolationKind.TOUCH_TARGET, ViolationKind.ICON_DISTANCE)


@dataclass(frozen=True)
class Violation:
    """One guideline violation.

    ``screen_name`` is the screen the violation was found on; persisting
    violations also name ``other_screen``. ``evidence`` holds JSON-ready
    measurements (sizes, gaps, similarity, what was searched for).
    """

    kind: ViolationKind
    screen_name: str
    element_id: str | None
    bounds: Rect
    evidence: Mapping[str, Any] = field(default_factory=dict, compare=False)
    other_screen: str | None = None

    def sort_key(self):
        return (self.screen_name, self.kind.order, self.element_id or "", tuple(self.bounds),
                self.other_screen or "", str(self.evidence.get("other_element", "")))


@dataclass(frozen=True)
class DetectorResult:
    """Outcome of one detector on one unit (a screen, or an app for persisting).

    ``applicable`` is False when the detector had nothing to judge, e.g. no
    expanding section on the screen; such units are neither positives nor
    negatives. ``notes`` records skipped elements and the evidence trail.
    """

    kind: ViolationKind
    applicable: bool
    violations: tuple[Violation, ...] = ()
    notes: tuple[str, ...] = ()
    evidence: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @property
    def flagged(self) -> bool:
        return self.applicable and bool(self.violations)


@dataclass(frozen=True)
class ScreenVerdict:
    screen_name: str
    results: tuple[DetectorResult, ...]
    error: str | None = None

    def result(self, kind: ViolationKind) -> DetectorResult:
        for r in self.results:
            if r.kind is kind:
                return r
        raise KeyError(kind)

    @property
    def violations(self) -> list[Violation]:
        return [v for r in self.results for v in r.violations]


@dataclass(frozen=True)
class AppScan:
    app_id: str
    verdicts: tuple[ScreenVerdict, ...]
    persisting: DetectorResult
    warnings: tuple[str, ...] = ()

    @property
    def violations(self) -> list[Violation]:
        found = [v for s in self.verdicts for v in s.violations]
        found.extend(self.persisting.violations)
        return sorted(found, key=Violation.sort_key)

    def count(self, kind: ViolationKind) -> int:
        return sum(1 for v in self.violations if v.kind is kind)


class TextExtractor(Protocol):
    def extract_text(self, c: Crop) -> list[str]: ...


class NoTextExtractor:
    """XML-only mode: contributes no text."""

    def extract_text(self, c: Crop) -> list[str]:
        return []


def text_extractor_for(name: str) -> TextExtractor:
    if name == "none":
        return NoTextExtractor()
    raise ValueError(f"unknown text extractor {name!r}")


# -- threshold predicates -------------------------------------------------

def is_undersized(width: float, height: float, min_size: float) -> bool:
    """Strictly under the minimum in either dimension."""
    return width < min_size or height < min_size


def is_too_close(gap: float, min_gap: float) -> bool:
    return gap < min_gap


def is_comparable(sim: float, min_similarity: float) -> bool:
    """Similarity at or above the threshold means the two crops show the same element."""
    return sim >= min_similarity - _EPS


def same_location(a: Rect, b: Rect, tolerance: int) -> bool:
    return all(abs(p - q) <= tolerance for p, q in zip(a, b))


def rect_gap(a: Rect, b: Rect) -> float:
    """Euclidean gap between two rects; 0 when they touch or overlap."""
    dx = max(0, a.left - b.right, b.left - a.right)
    dy = max(0, a.top - b.bottom, b.top - a.bottom)
    return math.hypot(dx, dy)


# -- expanding sections ---------------------------------------------------

def find_expanding_section(screen: UiScreen, config: ToolConfig = ToolConfig()) -> UiElement | None:
    """Largest FrameLayout/ListView that covers part, but not all, of the screen."""
    screen_area = screen.width * screen.height
    lo, hi = config.section_area_min * screen_area, config.section_area_max * screen_area
    best = None
    for el in screen.elements():
        if el.class_name not in SECTION_CLASSES:
            continue
        area = el.bounds.area
        if lo <= area < hi and (best is None or area > best.bounds.area):
            best = el
    return best


def _section_tokens(screen: UiScreen, section: UiElement) -> list[str]:
    tokens = []
    for el in screen.elements():
        if el.bounds.intersects(section.bounds) or el is section:
            tokens.extend(normalize_tokens(el.text))
            tokens.extend(normalize_tokens(el.content_desc))
    return tokens


def detect_expanding_section(screen: UiScreen, lexicon: ClosureLexicon | None = None,
                             icon_bank: Sequence[IconTemplate] | None = None,
                             text_extractor: TextExtractor | None = None,
                             config: ToolConfig = ToolConfig()) -> DetectorResult:
    """Does the screen's expanding section offer a visible way to close it?

    Text is checked first (XML text and content descriptions of elements
    overlapping the section, then extracted text); the icon matcher runs
    only when no closure word was found.
    """
    kind = ViolationKind.EXPANDING_SECTION
    section = find_expanding_section(screen, config)
    if section is None:
        return DetectorResult(kind, False, notes=("no expanding section",))
    lexicon = lexicon or default_lexicon()
    extractor = text_extractor or NoTextExtractor()
    try:
        section_crop = crop(screen.image, section.bounds)
    except EmptyCrop:
        return DetectorResult(kind, False, notes=(f"section {section.label} has an empty crop",))

    tokens = _section_tokens(screen, section)
    for line in extractor.extract_text(section_crop):
        tokens.extend(normalize_tokens(line))
    evidence: dict[str, Any] = {"section": section.label, "section_class": section.class_name,
                                "stages": ["text"], "tokens_checked": len(tokens)}
    word = match_closure(tokens, lexicon)
    evidence["text_match"] = word
    if word is not None:
        return DetectorResult(kind, True, evidence=evidence)

    evidence["stages"].append("icon")
    matches = detect_closure_icons(section_crop, icon_bank, screen_extent=max(screen.width, screen.height),
                                   threshold=config.ncc_min, nms_iou=config.nms_iou)
    evidence["icon_match"] = matches[0].kind.value if matches else None
    if matches:
        evidence["icon_bounds"] = matches[0].location.to_list()
        evidence["icon_score"] = matches[0].score
        return DetectorResult(kind, True, evidence=evidence)
    violation = Violation(kind, screen.name, section.label, section.bounds, evidence=dict(evidence))
    return DetectorResult(kind, True, (violation,), evidence=evidence)


# -- visual touch targets and icon distance -------------------------------

def element_visual_bounds(screen: UiScreen, el: UiElement, config: ToolConfig = ToolConfig()) -> Rect | None:
    """Glyph bounds of an element: padded crop, background estimate, components.

    Only components overlapping the element's own bounds are kept, so a
    neighbor inside the padding does not inflate the measurement.
    """
    padded = expand_rect(el.bounds, config.crop_pad, screen.screen_rect)
    c = crop(screen.image, padded)
    return visual_bounds(c, tolerance=config.foreground_tolerance,
                         min_area=config.min_component_area, anchor=el.bounds)


def _clickables(screen: UiScreen):
    return [el for el in screen.elements() if el.clickable]


def detect_touch_targets(screen: UiScreen, config: ToolConfig = ToolConfig()) -> DetectorResult:
    kind = ViolationKind.TOUCH_TARGET
    clickables = _clickables(screen)
    if not clickables:
        return DetectorResult(kind, True, notes=("no clickable elements",))
    found, notes = [], []
    for el in clickables:
        try:
            vb = element_visual_bounds(screen, el, config)
        except EmptyCrop:
            vb = None
        if vb is None:
            notes.append(f"{el.label}: no glyph found")
            continue
        if is_undersized(vb.width, vb.height, config.touch_target_min):
            found.append(Violation(kind, screen.name, el.label, vb, evidence={
                "visual_width": vb.width, "visual_height": vb.height,
                "xml_bounds": el.bounds.to_list(), "min_size": config.touch_target_min}))
    found.sort(key=Violation.sort_key)
    return DetectorResult(kind, True, tuple(found), tuple(notes))


def detect_icon_distance(screen: UiScreen, config: ToolConfig = ToolConfig()) -> DetectorResult:
    """Pairs of clickable glyphs closer than the minimum gap."""
    kind = ViolationKind.ICON_DISTANCE
    boxes, notes = [], []
    for el in _clickables(screen):
        try:
            vb = element_visual_bounds(screen, el, config)
        except EmptyCrop:
            vb = None
        fallback = vb is None
        if fallback:
            if el.bounds.area == 0:
                notes.append(f"{el.label}: empty bounds, skipped")
                continue
            notes.append(f"{el.label}: no glyph found, using XML bounds")
            vb = el.bounds
        boxes.append((el, vb, fallback))
    found = []
    for (a, ra, fa), (b, rb, fb) in combinations(boxes, 2):
        gap = rect_gap(ra, rb)
        if is_too_close(gap, config.icon_gap_min):
            found.append(Violation(kind, screen.name, a.label, ra.union(rb), evidence={
                "gap": round(gap, 4), "min_gap": config.icon_gap_min,
                "other_element": b.label, "element_bounds": ra.to_list(), "other_bounds": rb.to_list(),
                "xml_fallback": [fa, fb]}))
    found.sort(key=Violation.sort_key)
    return DetectorResult(kind, True, tuple(found), tuple(notes))


# -- persisting elements ----------------------------------------------------

def detect_persisting_elements(app: AppCapture, config: ToolConfig = ToolConfig()) -> DetectorResult:
    """Elements keyed by resource-id that keep their look but change location.

    For every id seen on two or more screens and every pair of those
    screens, the element crops are compared. Crops that are not similar
    enough are treated as different elements (for instance one hidden
    behind a menu) and skipped; similar crops at different locations are
    violations. Ids that repeat within one screen (list rows) are ignored
    on that screen.
    """
    kind = ViolationKind.PERSISTING
    screens = sorted(app.screens, key=lambda s: s.name)
    if len(screens) < 2:
        return DetectorResult(kind, False, notes=("fewer than two screens",))
    by_id: dict[str, list[tuple[UiScreen, UiElement]]] = {}
    notes = []
    for s in screens:
        seen: dict[str, list[UiElement]] = {}
        for el in s.elements():
            if el.element_id:
                seen.setdefault(el.element_id, []).append(el)
        for eid, els in seen.items():
            if len(els) > 1:
                notes.append(f"{s.name}: id {eid} repeats {len(els)} times, ignored")
            else:
                by_id.setdefault(eid, []).append((s, els[0]))
    found = []
    skipped = 0
    for eid in sorted(by_id):
        for (sa, ea), (sb, eb) in combinations(by_id[eid], 2):
            if same_location(ea.bounds, eb.bounds, config.location_tolerance):
                continue
            try:
                sim = similarity(crop(sa.image, ea.bounds), crop(sb.image, eb.bounds))
            except EmptyCrop:
                skipped += 1
                notes.append(f"{eid}: empty crop on {sa.name}/{sb.name}, skipped")
                continue
            if not is_comparable(sim, config.similarity_min):
                skipped += 1
                notes.append(f"{eid}: {sa.name}/{sb.name} similarity {sim:.4f}, not comparable")
                continue
            found.append(Violation(kind, sa.name, eid, ea.bounds, other_screen=sb.name, evidence={
                "similarity": round(sim, 6), "other_bounds": eb.bounds.to_list(),
                "delta": [q - p for p, q in zip(ea.bounds, eb.bounds)]}))
    found.sort(key=Violation.sort_key)
    return DetectorResult(kind, True, tuple(found), tuple(notes), evidence={"skipped_pairs": skipped})


# -- orchestration ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scanner:
    """Bundles the configuration and shared resources of a scan."""

    config: ToolConfig = ToolConfig()
    lexicon: ClosureLexicon | None = None
    bank: Sequence[IconTemplate] | None = None
    text_extractor: TextExtractor | None = None

    @classmethod
    def from_config(cls, config: ToolConfig) -> Scanner:
        lex = default_lexicon()
        if config.lexicon_extra:
            lex = lex.extended_from_file(config.lexicon_extra)
        return cls(config, lex, tuple(default_bank()), text_extractor_for(config.text_extractor))

    def scan_screen(self, screen: UiScreen) -> ScreenVerdict:
        try:
            results = (
                detect_expanding_section(screen, self.lexicon, self.bank, self.text_extractor, self.config),
                detect_touch_targets(screen, self.config),
                detect_icon_distance(screen, self.config),
            )
        except Exception as exc:  # one bad screen must not sink the scan
            logger.warning("screen %s failed: %s", screen.name, exc)
            results = tuple(DetectorResult(k, False, notes=("screen failed",)) for k in SCREEN_KINDS)
            return ScreenVerdict(screen.name, results, error=f"{type(exc).__name__}: {exc}")
        return ScreenVerdict(screen.name, results)

    def scan_app(self, app: AppCapture, jobs: int = 1) -> AppScan:
        screens = sorted(app.screens, key=lambda s: s.name)
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                verdicts = tuple(pool.map(self.scan_screen, screens))
        else:
            verdicts = tuple(map(self.scan_screen, screens))
        persisting = detect_persisting_elements(app, self.config)
        warnings = [*app.warnings, *(f"{s.name}: {w}" for s in screens for w in s.warnings)]
        return AppScan(app.app_id, verdicts, persisting, tuple(warnings))


def scan_app(app: AppCapture, config: ToolConfig | None = None, jobs: int = 1) -> AppScan:
    """Run all four detectors on an app; output order never depends on ``jobs``."""
    return Scanner.from_config(config or ToolConfig()).scan_app(app, jobs)


__all__ = [
    "AppScan", "DetectorResult", "NoTextExtractor", "SCREEN_KINDS", "ScreenVerdict", "Scanner",
    "TextExtractor", "Violation", "ViolationKind", "detect_expanding_section",
    "detect_icon_distance", "detect_persisting_elements", "detect_touch_targets",
    "element_visual_bounds", "find_expanding_section", "is_comparable", "is_too_close",
    "is_undersized", "rect_gap", "same_location", "scan_app",
]
