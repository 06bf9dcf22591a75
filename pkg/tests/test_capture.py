import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from motorlint.capture import (AppCapture, Rect, UiScreen, as_rgb, format_bounds, load_capture,
                               load_capture_set, parse_bounds, parse_hierarchy)
from motorlint.errors import MalformedBounds, MalformedXml, NoPairsFound


def node(bounds, **attrs):
    extra = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    return f'<node bounds="{bounds}" {extra}/>'


def test_rect_basics():
    r = Rect(0, 63, 147, 210)
    assert (r.width, r.height, r.area) == (147, 147, 147 * 147)
    assert Rect(5, 5, 5, 5).area == 0
    with pytest.raises(ValueError):
        Rect(10, 0, 5, 5)


def test_rect_iou_and_clamp():
    a, b = Rect(0, 0, 10, 10), Rect(5, 0, 15, 10)
    assert a.iou(b) == pytest.approx(50 / 150)
    assert a.iou(Rect(10, 0, 20, 10)) == 0.0
    assert Rect(-5, -5, 20, 20).clamp(Rect(0, 0, 10, 10)) == Rect(0, 0, 10, 10)
    assert Rect(50, 50, 60, 60).clamp(Rect(0, 0, 10, 10)).area == 0


@pytest.mark.parametrize("s, expected, swapped", [
    ("[0,63][147,210]", Rect(0, 63, 147, 210), False),
    ("[0,0][0,0]", Rect(0, 0, 0, 0), False),
    ("[10,5][3,20]", Rect(3, 5, 10, 20), True),
])
def test_parse_bounds(s, expected, swapped):
    assert parse_bounds(s) == (expected, swapped)


@pytest.mark.parametrize("bad", ["", "[0,0]", "[a,0][1,1]", "[0,0][1,1]x", "[-1,0][1,1]"])
def test_parse_bounds_malformed(bad):
    with pytest.raises(MalformedBounds):
        parse_bounds(bad)


@pytest.mark.property
@given(st.integers(0, 5000), st.integers(0, 5000), st.integers(0, 5000), st.integers(0, 5000))
def test_bounds_round_trip(x1, y1, w, h):
    r = Rect(x1, y1, x1 + w, y1 + h)
    assert parse_bounds(format_bounds(r)) == (r, False)


def test_parse_hierarchy_basic():
    xml = ('<hierarchy rotation="0">'
           '<node class="android.widget.FrameLayout" bounds="[0,0][1080,1920]" resource-id="">'
           + node("[0,0][48,48]", clickable="true", class_="android.widget.Button", resource_id="a:id/ok")
           + node("[0,50][48,98]", clickable="TRUE", text="Hi")
           + node("[0,100][48,148]", clickable="yes")
           + "</node></hierarchy>")
    root = parse_hierarchy(xml)
    assert root.class_name == "hierarchy"
    (frame,) = root.children
    assert frame.element_id is None
    a, b, c = frame.children
    assert a.clickable and a.bounds == Rect(0, 0, 48, 48) and a.element_id == "a:id/ok"
    assert b.clickable and b.text == "Hi" and b.element_id is None and b.content_desc is None
    assert not c.clickable
    assert [e.index for e in root.descendants()] == [0, 1, 2, 3]


def test_parse_hierarchy_children_not_contained():
    xml = '<hierarchy><node bounds="[0,0][10,10]"><node bounds="[500,500][600,600]"/></node></hierarchy>'
    root = parse_hierarchy(xml)
    assert root.children[0].children[0].bounds == Rect(500, 500, 600, 600)


def test_parse_hierarchy_errors_and_warnings():
    with pytest.raises(MalformedXml):
        parse_hierarchy("<hierarchy><node></hierarchy>")
    with pytest.raises(MalformedXml):
        parse_hierarchy("<dump/>")
    notes = []
    root = parse_hierarchy("<hierarchy/>", notes)
    assert root.children == () and any("empty" in n for n in notes)
    notes = []
    parse_hierarchy('<hierarchy><node bounds="[10,5][3,20]"/></hierarchy>', notes)
    assert any("normalized" in n for n in notes)


def _random_tree(rng, depth=0):
    kids = "".join(_random_tree(rng, depth + 1) for _ in range(rng.randint(0, 3 if depth < 3 else 0)))
    x, y = rng.randint(0, 1000), rng.randint(0, 1800)
    return f'<node bounds="[{x},{y}][{x + 20},{y + 20}]">{kids}</node>'


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_parse_hierarchy_keeps_every_node(seed):
    rng = random.Random(seed)
    xml = "<hierarchy>" + "".join(_random_tree(rng) for _ in range(rng.randint(0, 4))) + "</hierarchy>"
    assert sum(1 for _ in parse_hierarchy(xml).descendants()) == xml.count("<node")


def test_screen_clamps_bounds():
    root = parse_hierarchy('<hierarchy><node bounds="[900,1800][1200,2000]"/></hierarchy>')
    s = UiScreen.from_parts("s", np.zeros((1920, 1080, 3), np.uint8), root)
    (el,) = s.elements()
    assert el.bounds == Rect(900, 1800, 1080, 1920)
    assert any("clamped" in w for w in s.warnings)
    assert s.screen_rect == Rect(0, 0, 1080, 1920)


def test_as_rgb_flattens_alpha_over_white():
    rgba = np.zeros((2, 2, 4), np.uint8)
    rgba[0, 0] = (0, 0, 0, 255)
    out = as_rgb(rgba)
    assert tuple(out[0, 0]) == (0, 0, 0) and tuple(out[1, 1]) == (255, 255, 255)


def _pair(d, name, with_xml=True, with_png=True):
    if with_png:
        Image.new("RGB", (20, 30), (200, 10, 10)).save(d / f"{name}.png")
    if with_xml:
        (d / f"{name}.xml").write_text('<hierarchy><node bounds="[0,0][20,30]"/></hierarchy>')


def test_load_capture_pairs_and_warnings(tmp_path):
    _pair(tmp_path, "a")
    _pair(tmp_path, "b", with_xml=False)
    app = load_capture(tmp_path)
    assert [s.name for s in app.screens] == ["a"]
    assert app.warnings == ("unpaired file b.png",)
    assert app.app_id == tmp_path.name
    assert app.screens[0].image.shape == (30, 20, 3)


def test_load_capture_sorted(tmp_path):
    for n in ("s2", "s1"):
        _pair(tmp_path, n)
    assert [s.name for s in load_capture(tmp_path).screens] == ["s1", "s2"]


def test_load_capture_empty(tmp_path):
    with pytest.raises(NoPairsFound):
        load_capture(tmp_path)
    with pytest.raises(NoPairsFound):
        load_capture(tmp_path / "missing")


def test_load_capture_independent_of_creation_order(tmp_path):
    names = [f"s{i}" for i in range(6)]
    one, two = tmp_path / "one", tmp_path / "two"
    for d, order in ((one, names), (two, names[::-1])):
        d.mkdir()
        for n in order:
            _pair(d, n)
    a, b = load_capture(one), load_capture(two)
    assert [s.name for s in a.screens] == [s.name for s in b.screens]
    assert all(np.array_equal(x.image, y.image) for x, y in zip(a.screens, b.screens))


def test_load_capture_set(tmp_path):
    for app in ("zeta", "alpha"):
        (tmp_path / app).mkdir()
        _pair(tmp_path / app, "s")
    assert [a.app_id for a in load_capture_set(tmp_path)] == ["alpha", "zeta"]
    assert [a.app_id for a in load_capture_set(tmp_path / "alpha")] == ["alpha"]


def test_duplicate_screen_names_rejected():
    root = parse_hierarchy("<hierarchy/>")
    s = UiScreen.from_parts("x", np.zeros((4, 4, 3), np.uint8), root)
    with pytest.raises(ValueError):
        AppCapture("app", (s, s))


def test_screen_image_is_read_only():
    s = UiScreen.from_parts("x", np.zeros((4, 4, 3), np.uint8), parse_hierarchy("<hierarchy/>"))
    with pytest.raises(ValueError):
        s.image[0, 0] = 1
