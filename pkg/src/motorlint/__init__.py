"""Motor-impairment accessibility linter for Android UI captures."""
from .capture import AppCapture, Rect, UiElement, UiScreen, load_capture, load_capture_set, parse_hierarchy
from .config import ToolConfig
from .detectors import Scanner, Violation, ViolationKind, rect_gap, scan_app
from .evaluation import ConfusionMatrix, compute_metrics, macro_average, run_eval
from .lexicon import default_lexicon, match_closure, normalize_tokens
from .report import ScanReport, render_json, render_markdown

__version__ = "0.1.0"

__all__ = [
    "AppCapture", "ConfusionMatrix", "Rect", "ScanReport", "Scanner", "ToolConfig", "UiElement",
    "UiScreen", "Violation", "ViolationKind", "compute_metrics", "default_lexicon", "load_capture",
    "load_capture_set", "macro_average", "match_closure", "normalize_tokens", "parse_hierarchy",
    "rect_gap", "render_json", "render_markdown", "run_eval", "scan_app",
]
