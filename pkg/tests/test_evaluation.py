import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import BENCH, BENCH_LABELS
from motorlint.detectors import ViolationKind
from motorlint.errors import MissingPrediction
from motorlint.evaluation import (ConfusionMatrix, EvalMetrics, build_confusion, compute_metrics,
                                  load_labels, macro_average, run_eval)

counts = st.integers(0, 10_000)


def test_icon_distance_row():
    m = compute_metrics(ConfusionMatrix(tp=42, fp=17, fn=0, tn=341)).as_floats()
    assert m["precision"] == pytest.approx(0.7119, abs=5e-5)
    assert m["recall"] == 1.0
    assert m["accuracy"] == pytest.approx(0.9575, abs=5e-5)
    assert m["f1"] == pytest.approx(0.8317, abs=5e-5)
    assert m["fnr"] == 0.0
    assert m["fpr"] == pytest.approx(17 / 358)


def test_perfect_and_undefined():
    m = compute_metrics(ConfusionMatrix(tp=1, tn=1))
    assert all(v == 1 for k, v in vars(m).items() if k not in ("fpr", "fnr"))
    assert m.fpr == 0 and m.fnr == 0
    empty = compute_metrics(ConfusionMatrix(tn=5))
    assert empty.precision is None and empty.recall is None and empty.f1 is None
    assert empty.accuracy == 1
    assert compute_metrics(ConfusionMatrix()).accuracy is None


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        ConfusionMatrix(tp=-1)


def test_macro_average_of_four_accuracies():
    ms = [EvalMetrics(accuracy=Fraction(a)) for a in ("0.9123", "0.8525", "0.8776", "0.9575")]
    avg = macro_average(ms)
    assert avg.accuracy == Fraction("0.899975")
    assert float(avg.accuracy) == pytest.approx(0.8999, abs=5e-4)
    assert avg.precision is None


def test_macro_average_skips_undefined():
    avg = macro_average([EvalMetrics(precision=Fraction(1, 2)), EvalMetrics(precision=None)])
    assert avg.precision == Fraction(1, 2)


def test_build_confusion_examples():
    labels = {f"u{i}": i % 2 == 0 for i in range(10)}
    assert build_confusion(dict(labels), labels)[0] == ConfusionMatrix(tp=5, tn=5)
    inverted = {u: not v for u, v in labels.items()}
    cm, _ = build_confusion(inverted, labels)
    assert cm.tp == cm.tn == 0 and cm.fp == cm.fn == 5


def test_dataset_with_242_non_violations_has_241_positives():
    labels = {f"s{i}": i >= 242 for i in range(483)}
    cm, _ = build_confusion(labels, labels)
    assert cm.tp + cm.fn == 241 and cm.total == 483


def test_inapplicable_units_are_excluded():
    cm, excluded = build_confusion({"a": True, "b": None, "c": False}, {"a": True, "b": True, "c": False})
    assert cm == ConfusionMatrix(tp=1, tn=1) and excluded == 1


def test_missing_prediction():
    with pytest.raises(MissingPrediction) as info:
        build_confusion({"a": True}, {"a": True, "ghost": False})
    assert "ghost" in str(info.value)


@pytest.mark.property
@given(counts, counts, counts, counts, st.integers(1, 50))
def test_metrics_are_scale_invariant(tp, fp, fn, tn, k):
    assert compute_metrics(ConfusionMatrix(tp, fp, fn, tn)) == compute_metrics(
        ConfusionMatrix(k * tp, k * fp, k * fn, k * tn))


@pytest.mark.property
@given(counts, counts, counts, counts)
def test_metric_identities(tp, fp, fn, tn):
    m = compute_metrics(ConfusionMatrix(tp, fp, fn, tn))
    if tp + fp + fn + tn:
        assert m.accuracy == Fraction(tp + tn, tp + fp + fn + tn)
    if m.precision is not None and m.recall is not None and m.precision + m.recall:
        assert m.f1 == 2 * m.precision * m.recall / (m.precision + m.recall)
    for v in vars(m).values():
        assert v is None or 0 <= v <= 1


@pytest.mark.property
@given(counts, counts, counts, counts)
def test_swapping_classes(tp, fp, fn, tn):
    cm = ConfusionMatrix(tp, fp, fn, tn)
    m, s = compute_metrics(cm), compute_metrics(cm.swapped())
    assert s.fpr == m.fnr and s.fnr == m.fpr
    assert s.accuracy == m.accuracy
    assert s.precision == (Fraction(tn, tn + fn) if tn + fn else None)
    assert s.recall == (Fraction(tn, tn + fp) if tn + fp else None)


def test_load_labels_validation(tmp_path):
    p = tmp_path / "labels.json"
    p.write_text(json.dumps({"schema_version": 1, "touch_target": {"a/s": True}}))
    labels = load_labels(p)
    assert labels[ViolationKind.TOUCH_TARGET] == {"a/s": True}
    assert labels[ViolationKind.PERSISTING] == {}
    for bad in ({"schema_version": 2}, {"schema_version": 1, "typo": {}},
                {"schema_version": 1, "touch_target": {"a/s": "yes"}}):
        p.write_text(json.dumps(bad))
        with pytest.raises(ValueError):
            load_labels(p)


def test_run_eval_on_fixture_bench_is_perfect():
    report = run_eval(BENCH, BENCH_LABELS)
    for d in report.detectors:
        assert d.confusion.fp == d.confusion.fn == 0, d.kind
        assert d.confusion.tp == 1, d.kind
    assert set(report.overall.as_floats().values()) == {1.0, 0.0}
    assert report.overall.accuracy == 1 and report.overall.fpr == 0
    doc = report.to_dict()
    assert doc["overall"]["f1"] == 1.0
    assert "all detectors" in report.table()


def test_run_eval_missing_screen(tmp_path):
    p = tmp_path / "labels.json"
    p.write_text(json.dumps({"schema_version": 1, "touch_target": {"notes/nowhere": False}}))
    with pytest.raises(MissingPrediction):
        run_eval(BENCH, p)
