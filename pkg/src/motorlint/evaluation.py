"""Benchmark harness: ground-truth labels, confusion matrices and metrics.

Metrics are computed with exact rational arithmetic; a metric whose
denominator is zero is ``None`` (undefined) rather than an error.

Labels file (JSON)::

    {
      "schema_version": 1,
      "expanding_section": {"app/screen": true, ...},
      "touch_target":      {"app/screen": false, ...},
      "icon_distance":     {"app/screen": false, ...},
      "persisting":        {"app": true, ...}
    }

Screen-level units are ``<app directory>/<screen name>``; persisting
labels are keyed by app. Detector keys may be omitted.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .capture import load_capture_set
from .config import ToolConfig
from .detectors import AppScan, Scanner, ViolationKind
from .errors import MissingPrediction

logger = logging.getLogger(__name__)

LABELS_SCHEMA_VERSION = 1
METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "fpr", "fnr")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{f.name} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> ConfusionMatrix:
        """The same outcomes with the positive and negative class exchanged."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: Fraction | None = None
    precision: Fraction | None = None
    recall: Fraction | None = None
    f1: Fraction | None = None
    fpr: Fraction | None = None
    fnr: Fraction | None = None

    def as_floats(self) -> dict[str, float | None]:
        return {n: None if getattr(self, n) is None else float(getattr(self, n)) for n in METRIC_NAMES}


def _ratio(num: int, den: int) -> Fraction | None:
    return Fraction(num, den) if den else None


def compute_metrics(cm: ConfusionMatrix) -> EvalMetrics:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = None
    if precision is not None and recall is not None:
        f1 = Fraction(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)
    return EvalMetrics(
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        precision=precision,
        recall=recall,
        f1=f1,
        fpr=_ratio(cm.fp, cm.fp + cm.tn),
        fnr=_ratio(cm.fn, cm.fn + cm.tp),
    )


def macro_average(metrics: Iterable[EvalMetrics]) -> EvalMetrics:
    """Unweighted mean of each metric over the detectors where it is defined."""
    metrics = list(metrics)
    out = {}
    for name in METRIC_NAMES:
        values = [Fraction(getattr(m, name)) for m in metrics if getattr(m, name) is not None]
        out[name] = sum(values, Fraction(0)) / len(values) if values else None
    return EvalMetrics(**out)


def build_confusion(predictions: Mapping[str, bool | None], labels: Mapping[str, bool]) -> tuple[ConfusionMatrix, int]:
    """Compare per-unit predictions with labels.

    A prediction of ``None`` marks an inapplicable unit, which is left out
    of the matrix; the number left out is returned alongside it. Labeled
    units without any prediction raise :class:`MissingPrediction`.
    """
    missing = [u for u in labels if u not in predictions]
    if missing:
        raise MissingPrediction(missing)
    tp = fp = fn = tn = excluded = 0
    for unit in sorted(labels):
        pred, truth = predictions[unit], bool(labels[unit])
        if pred is None:
            excluded += 1
        elif pred and truth:
            tp += 1
        elif pred:
            fp += 1
        elif truth:
            fn += 1
        else:
            tn += 1
    if excluded:
        logger.info("%d labeled unit(s) inapplicable, excluded", excluded)
    return ConfusionMatrix(tp, fp, fn, tn), excluded


@dataclass(frozen=True)
class DetectorEval:
    kind: ViolationKind
    confusion: ConfusionMatrix
    metrics: EvalMetrics
    excluded: int = 0


@dataclass(frozen=True)
class EvalReport:
    detectors: tuple[DetectorEval, ...]
    overall: EvalMetrics

    def to_dict(self) -> dict:
        def metrics(m: EvalMetrics):
            return {k: None if v is None else round(v, 4) for k, v in m.as_floats().items()}

        return {
            "schema_version": LABELS_SCHEMA_VERSION,
            "detectors": {d.kind.value: {"confusion": vars(d.confusion) | {"total": d.confusion.total},
                                         "excluded": d.excluded, "metrics": metrics(d.metrics)}
                          for d in self.detectors},
            "overall": metrics(self.overall),
        }

    def table(self) -> str:
        head = f"{'detector':<20}" + "".join(f"{n:>10}" for n in METRIC_NAMES) + f"{'units':>8}"
        rows = [head]
        for d in self.detectors:
            rows.append(f"{d.kind.value:<20}" + _cells(d.metrics) + f"{d.confusion.total:>8}")
        rows.append(f"{'all detectors':<20}" + _cells(self.overall) + f"{'':>8}")
        return "\n".join(rows)


def _cells(m: EvalMetrics) -> str:
    return "".join(f"{'n/a' if v is None else f'{v:.4f}':>10}" for v in m.as_floats().values())


def load_labels(path: str | os.PathLike) -> dict[ViolationKind, dict[str, bool]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("schema_version") != LABELS_SCHEMA_VERSION:
        raise ValueError(f"{path}: expected a labels object with schema_version {LABELS_SCHEMA_VERSION}")
    unknown = set(doc) - {"schema_version"} - {k.value for k in ViolationKind}
    if unknown:
        raise ValueError(f"{path}: unknown detector keys {sorted(unknown)}")
    out = {}
    for kind in ViolationKind:
        section = doc.get(kind.value, {})
        if not isinstance(section, dict) or not all(isinstance(v, bool) for v in section.values()):
            raise ValueError(f"{path}: {kind.value} must map unit names to true/false")
        out[kind] = dict(section)
    return out


def predictions_from(scans: Iterable[AppScan]) -> dict[ViolationKind, dict[str, bool | None]]:
    """Unit-level predictions; None for units where a detector was inapplicable."""
    out: dict[ViolationKind, dict[str, bool | None]] = {k: {} for k in ViolationKind}
    for app in scans:
        for verdict in app.verdicts:
            unit = f"{app.app_id}/{verdict.screen_name}"
            for r in verdict.results:
                out[r.kind][unit] = bool(r.violations) if r.applicable else None
        p = app.persisting
        out[ViolationKind.PERSISTING][app.app_id] = bool(p.violations) if p.applicable else None
    return out


def scan_root(capture_root: str | os.PathLike, config: ToolConfig | None = None, jobs: int = 1) -> list[AppScan]:
    """Scan every app under ``capture_root`` (see :func:`load_capture_set`)."""
    scanner = Scanner.from_config(config or ToolConfig())
    return [scanner.scan_app(app, jobs) for app in load_capture_set(capture_root)]


def evaluate(scans: Iterable[AppScan], labels: Mapping[ViolationKind, Mapping[str, bool]]) -> EvalReport:
    preds = predictions_from(scans)
    per = []
    for kind in ViolationKind:
        cm, excluded = build_confusion(preds[kind], labels.get(kind, {}))
        per.append(DetectorEval(kind, cm, compute_metrics(cm), excluded))
    overall = macro_average(d.metrics for d in per if d.confusion.total)
    return EvalReport(tuple(per), overall)


def run_eval(capture_root: str | os.PathLike, labels_file: str | os.PathLike,
             config: ToolConfig | None = None, jobs: int = 1) -> EvalReport:
    labels = load_labels(labels_file)
    return evaluate(scan_root(capture_root, config, jobs), labels)


__all__ = [
    "ConfusionMatrix", "DetectorEval", "EvalMetrics", "EvalReport", "LABELS_SCHEMA_VERSION",
    "build_confusion", "compute_metrics", "evaluate", "load_labels", "macro_average",
    "predictions_from", "run_eval", "scan_root",
]
