"""Markdown and JSON renderings of scan results.

Both are projections of one :class:`ScanReport`; the JSON form parses back
into an equal report, so ``render_json(parse_json(render_json(r)))`` is
byte-identical to ``render_json(r)``.
"""
from __future__ import annotations

import json
import os
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .capture import Rect, format_bounds
from .detectors import SCREEN_KINDS, AppScan, DetectorResult, ScreenVerdict, Violation, ViolationKind
from .errors import ConfigError

REPORT_SCHEMA_VERSION = 1

SECTION_TITLES = {
    ViolationKind.EXPANDING_SECTION: "Expanding sections without a closure control",
    ViolationKind.TOUCH_TARGET: "Visual touch targets below the minimum size",
    ViolationKind.ICON_DISTANCE: "Clickable icons too close together",
    ViolationKind.PERSISTING: "Persisting elements that change location",
}
SHORT_TITLES = {
    ViolationKind.EXPANDING_SECTION: "Expanding sections",
    ViolationKind.TOUCH_TARGET: "Touch targets",
    ViolationKind.ICON_DISTANCE: "Icon distance",
    ViolationKind.PERSISTING: "Persisting elements",
}


@dataclass(frozen=True)
class ScanReport:
    apps: tuple[AppScan, ...]
    generated_at: str | None = None

    @property
    def violations(self) -> list[Violation]:
        return [v for a in self.apps for v in a.violations]

    def counts(self) -> dict[str, int]:
        out = {k.value: 0 for k in ViolationKind}
        for v in self.violations:
            out[v.kind.value] += 1
        return out


def load_templates(templates_dir: str | os.PathLike | None = None) -> dict[ViolationKind, str]:
    """Violation templates, one ``<kind>.txt`` per kind; a directory overrides any subset."""
    out = {}
    for kind in ViolationKind:
        text = None
        if templates_dir is not None:
            p = Path(templates_dir) / f"{kind.value}.txt"
            if p.is_file():
                text = p.read_text(encoding="utf-8")
        if text is None:
            text = resources.files("motorlint").joinpath(f"data/report_{kind.value}.txt").read_text(encoding="utf-8")
        text = text.strip()
        try:
            fields = {name for _, name, _, _ in string.Formatter().parse(text) if name}
        except ValueError as exc:
            raise ConfigError(f"bad template for {kind.value}: {exc}") from exc
        if any(not f.isidentifier() for f in fields):
            raise ConfigError(f"template for {kind.value} uses an unsupported field: {sorted(fields)}")
        out[kind] = text
    return out


class _Fields(dict):
    def __missing__(self, key):
        return "?"


def _show(key: str, value: Any) -> Any:
    if key.endswith("bounds") and isinstance(value, (list, tuple)) and len(value) == 4:
        return format_bounds(Rect(*value))
    if isinstance(value, float):
        return f"{value:g}"
    return value


def format_violation(v: Violation, template: str) -> str:
    fields = _Fields({k: _show(k, val) for k, val in v.evidence.items()})
    fields.update(
        kind=v.kind.value, screen=v.screen_name, file=f"{v.screen_name}.png",
        element=v.element_id or "?", bounds=format_bounds(v.bounds),
        other_screen=v.other_screen or "", other_file=f"{v.other_screen}.png" if v.other_screen else "",
    )
    return template.format_map(fields)


def _screens_without(app: AppScan, kind: ViolationKind) -> list[str]:
    return [s.screen_name for s in app.verdicts if not s.result(kind).applicable]


def render_markdown(report: ScanReport, templates: Mapping[ViolationKind, str] | None = None) -> str:
    templates = templates or load_templates()
    counts = report.counts()
    lines = ["# Motor accessibility report", ""]
    if report.generated_at:
        lines += [f"Generated: {report.generated_at}", ""]
    lines += ["## Summary", "",
              "| App | Screens | " + " | ".join(SHORT_TITLES[k] for k in ViolationKind) + " | Total |",
              "|---|---:|" + "---:|" * (len(ViolationKind) + 1)]
    for app in report.apps:
        cells = [str(app.count(k)) for k in ViolationKind]
        lines.append(f"| {app.app_id} | {len(app.verdicts)} | " + " | ".join(cells)
                     + f" | {len(app.violations)} |")
    lines += ["", f"Total violations: {sum(counts.values())}", ""]

    for app in report.apps:
        lines += [f"## App `{app.app_id}`", ""]
        by_kind = {k: [v for v in app.violations if v.kind is k] for k in ViolationKind}
        for kind in ViolationKind:
            lines += [f"### {SECTION_TITLES[kind]}", ""]
            if by_kind[kind]:
                lines += [f"- {format_violation(v, templates[kind])}" for v in by_kind[kind]]
            else:
                lines.append("No violations found.")
            if kind is ViolationKind.PERSISTING:
                if not app.persisting.applicable:
                    lines += ["", "Not applicable: " + "; ".join(app.persisting.notes)]
            else:
                skipped = _screens_without(app, kind)
                if skipped:
                    lines += ["", "Not applicable on: " + ", ".join(f"`{s}.png`" for s in skipped)]
            lines.append("")
        errors = [s for s in app.verdicts if s.error]
        if errors or app.warnings:
            lines += ["### Warnings", ""]
            lines += [f"- `{s.screen_name}.png` could not be analyzed: {s.error}" for s in errors]
            lines += [f"- {w}" for w in app.warnings]
            lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


# -- JSON -------------------------------------------------------------------

def _violation_json(v: Violation) -> dict:
    return {"kind": v.kind.value, "screen": v.screen_name, "file": f"{v.screen_name}.png",
            "other_screen": v.other_screen, "element_id": v.element_id,
            "bounds": v.bounds.to_list(), "evidence": dict(v.evidence)}


def _result_json(r: DetectorResult) -> dict:
    return {"applicable": r.applicable, "violations": [_violation_json(v) for v in r.violations],
            "notes": list(r.notes), "evidence": dict(r.evidence)}


def to_dict(report: ScanReport) -> dict:
    apps = []
    for app in report.apps:
        apps.append({
            "app_id": app.app_id,
            "counts": {k.value: app.count(k) for k in ViolationKind},
            "screens": [{"name": s.screen_name, "file": f"{s.screen_name}.png", "error": s.error,
                         "detectors": {r.kind.value: _result_json(r) for r in s.results}}
                        for s in app.verdicts],
            "persisting": _result_json(app.persisting),
            "warnings": list(app.warnings),
        })
    counts = report.counts()
    return {"schema_version": REPORT_SCHEMA_VERSION, "generated_at": report.generated_at,
            "counts": counts, "total_violations": sum(counts.values()), "apps": apps}


def render_json(report: ScanReport) -> bytes:
    return (json.dumps(to_dict(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def _violation_from(d: Mapping) -> Violation:
    return Violation(ViolationKind(d["kind"]), d["screen"], d["element_id"], Rect(*d["bounds"]),
                     evidence=dict(d["evidence"]), other_screen=d["other_screen"])


def _result_from(kind: ViolationKind, d: Mapping) -> DetectorResult:
    return DetectorResult(kind, bool(d["applicable"]), tuple(_violation_from(v) for v in d["violations"]),
                          tuple(d["notes"]), evidence=dict(d["evidence"]))


def parse_json(data: bytes | str) -> ScanReport:
    doc = json.loads(data)
    version = doc.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {version!r}")
    apps = []
    for a in doc["apps"]:
        verdicts = tuple(
            ScreenVerdict(s["name"], tuple(_result_from(k, s["detectors"][k.value]) for k in SCREEN_KINDS),
                          s["error"])
            for s in a["screens"])
        apps.append(AppScan(a["app_id"], verdicts, _result_from(ViolationKind.PERSISTING, a["persisting"]),
                            tuple(a["warnings"])))
    return ScanReport(tuple(apps), doc["generated_at"])


__all__ = ["REPORT_SCHEMA_VERSION", "ScanReport", "format_violation", "load_templates",
           "parse_json", "render_json", "render_markdown", "to_dict"]
