"""``motorlint`` command line: scan, eval, gensynth, config.

Exit codes: 0 success with no violations, 1 violations found (scan only),
2 operational error (unreadable input, bad config or parameters).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence, TextIO

from .capture import load_capture_set
from .config import CONFIG_ENV, ToolConfig, resolve_config
from .detectors import Scanner
from .errors import MotorLintError
from .report import ScanReport, load_templates, render_json, render_markdown

EXIT_CLEAN, EXIT_VIOLATIONS, EXIT_ERROR = 0, 1, 2

logger = logging.getLogger("motorlint")


def _fail(err: TextIO, message: str) -> int:
    print(f"motorlint: error: {message}", file=err)
    return EXIT_ERROR


def report_timestamp(explicit: str | None = None) -> str | None:
    """Explicit value, else ``$SOURCE_DATE_EPOCH`` as UTC ISO-8601, else None."""
    if explicit:
        return explicit
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return None


def cmd_scan(capture_dir, out_md, out_json, config: ToolConfig | None = None, *, jobs: int = 1,
             timestamp: str | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        config = config or ToolConfig()
        scanner = Scanner.from_config(config)
        templates = load_templates(config.templates_dir)
        apps = load_capture_set(capture_dir)
        report = ScanReport(tuple(scanner.scan_app(app, jobs) for app in apps), report_timestamp(timestamp))
        md, js = render_markdown(report, templates), render_json(report)
        for path, data in ((out_md, md.encode("utf-8")), (out_json, js)):
            if path is not None:
                Path(path).parent.mkdir(parents=True, exist_ok=True)
                Path(path).write_bytes(data)
    except (MotorLintError, OSError, ValueError) as exc:
        return _fail(err, str(exc))
    for app in report.apps:
        for v in app.violations:
            where = f"{app.app_id}/{v.screen_name}.png"
            if v.other_screen:
                where += f" -> {v.other_screen}.png"
            print(f"{where}: {v.kind.value}: {v.element_id} {list(v.bounds)}", file=out)
    total = len(report.violations)
    print(f"{total} violation(s) in {sum(len(a.verdicts) for a in report.apps)} screen(s)", file=out)
    return EXIT_VIOLATIONS if total else EXIT_CLEAN


def cmd_eval(capture_root, labels, out_json=None, config: ToolConfig | None = None, *, jobs: int = 1,
             out: TextIO | None = None, err: TextIO | None = None) -> int:
    from .evaluation import run_eval

    out, err = out or sys.stdout, err or sys.stderr
    try:
        result = run_eval(capture_root, labels, config or ToolConfig(), jobs)
        if out_json is not None:
            Path(out_json).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    except (MotorLintError, OSError, ValueError, KeyError) as exc:
        return _fail(err, str(exc))
    print(result.table(), file=out)
    return EXIT_CLEAN


def cmd_gensynth(backgrounds_dir, out_dir, count: int, split: float, seed: int, *,
                 mock_backgrounds: int = 0, manifest_only: bool = False,
                 out: TextIO | None = None, err: TextIO | None = None) -> int:
    from .vision import default_bank
    from .vision.synth import generate_synthetic_dataset, load_backgrounds, mock_screens, write_dataset

    out, err = out or sys.stdout, err or sys.stderr
    try:
        if backgrounds_dir is not None:
            backgrounds = load_backgrounds(backgrounds_dir)
        elif mock_backgrounds > 0:
            backgrounds = mock_screens(mock_backgrounds, seed)
        else:
            return _fail(err, "give a backgrounds directory or --mock-backgrounds N")
        train, test = generate_synthetic_dataset(backgrounds, default_bank(), count, split, seed)
        manifest = write_dataset(train, test, out_dir, images=not manifest_only)
    except (MotorLintError, OSError, ValueError) as exc:
        return _fail(err, str(exc))
    print(f"{len(train)} train / {len(test)} test -> {manifest}", file=out)
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motorlint", description="Motor-impairment accessibility linter for "
                                "Android screenshot + uiautomator captures.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help=f"config file (default: ${CONFIG_ENV}, else built-in defaults)")
        sp.add_argument("--jobs", type=int, default=1, help="screens scanned in parallel (default 1)")

    s = sub.add_parser("scan", help="scan one app directory, or a directory of app directories")
    s.add_argument("capture_dir")
    s.add_argument("--out-md", default="motorlint-report.md")
    s.add_argument("--out-json", default="motorlint-report.json")
    s.add_argument("--timestamp", help="value of the report's generated_at field "
                   "(default: $SOURCE_DATE_EPOCH, else omitted)")
    with_config(s)

    e = sub.add_parser("eval", help="score the detectors against a labels file")
    e.add_argument("capture_root")
    e.add_argument("--labels", required=True)
    e.add_argument("--out-json")
    with_config(e)

    g = sub.add_parser("gensynth", help="generate a synthetic closure-icon dataset")
    g.add_argument("backgrounds_dir", nargs="?")
    g.add_argument("out_dir")
    g.add_argument("--count", type=int, default=7290)
    g.add_argument("--split", type=float, default=0.8, help="training fraction")
    g.add_argument("--seed", type=int, help="RNG seed (default: the config's seed)")
    g.add_argument("--mock-backgrounds", type=int, default=0, metavar="N",
                   help="use N generated app-like screens instead of a backgrounds directory")
    g.add_argument("--manifest-only", action="store_true", help="write manifest.json but no PNGs")
    g.add_argument("--config")

    c = sub.add_parser("config", help="print the effective configuration")
    c.add_argument("--config")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        config = resolve_config(args.config)
    except MotorLintError as exc:
        return _fail(sys.stderr, str(exc))
    if getattr(args, "jobs", 1) < 1:
        return _fail(sys.stderr, "--jobs must be at least 1")
    if args.command == "scan":
        return cmd_scan(args.capture_dir, args.out_md, args.out_json, config,
                        jobs=args.jobs, timestamp=args.timestamp)
    if args.command == "eval":
        return cmd_eval(args.capture_root, args.labels, args.out_json, config, jobs=args.jobs)
    if args.command == "gensynth":
        seed = config.seed if args.seed is None else args.seed
        return cmd_gensynth(args.backgrounds_dir, args.out_dir, args.count, args.split, seed,
                            mock_backgrounds=args.mock_backgrounds, manifest_only=args.manifest_only)
    sys.stdout.write(config.dumps())
    return EXIT_CLEAN


if __name__ == "__main__":
    sys.exit(main())
