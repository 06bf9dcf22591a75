# %% Scan the bundled fixture apps and look at what each detector reported.
from pathlib import Path

from motorlint import ScanReport, load_capture_set, render_markdown, scan_app
from motorlint.detectors import ViolationKind

bench = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "bench"
apps = load_capture_set(bench)
print([a.app_id for a in apps], sum(len(a.screens) for a in apps), "screens")

# %% One AppScan per app; violations come back sorted, so output is stable.
scans = [scan_app(a) for a in apps]
for s in scans:
    for v in s.violations:
        print(f"{s.app_id:8} {v.kind.value:18} {v.screen_name:12} {v.element_id}")

# %% The evidence dict carries the measurements behind each verdict.
tt = [v for s in scans for v in s.violations if v.kind is ViolationKind.TOUCH_TARGET][0]
print(tt.evidence)

# %% Screens without an expanding section are marked inapplicable, not clean.
notes = scans[0]
for verdict in notes.verdicts:
    r = verdict.result(ViolationKind.EXPANDING_SECTION)
    print(verdict.screen_name, "applicable" if r.applicable else r.notes)

# %% Markdown report, as the CLI would write it.
print(render_markdown(ScanReport(tuple(scans)))[:1200])
