import json

import numpy as np
import pytest

from motorlint.errors import InvalidParams
from motorlint.vision import default_bank, generate_synthetic_dataset, mock_screens
from motorlint.vision.synth import (MAX_ICON_PX, MIN_ICON_PX, icon_size_bounds, load_manifest,
                                    write_dataset)

BANK = default_bank()


@pytest.fixture(scope="module")
def backgrounds():
    return mock_screens(3, seed=5)


def test_default_split_counts(backgrounds):
    train, test = generate_synthetic_dataset(backgrounds, BANK, 7290, 0.8, seed=1)
    assert (len(train), len(test)) == (5832, 1458)
    assert not {r.index for r in train} & {r.index for r in test}


def test_sizes_within_pixel_limits(backgrounds):
    train, test = generate_synthetic_dataset(backgrounds, BANK, 3000, 0.5, seed=2)
    heights = [r.rect.height for r in train + test]
    assert min(heights) >= MIN_ICON_PX and max(heights) <= MAX_ICON_PX
    assert min(heights) == MIN_ICON_PX and max(heights) == MAX_ICON_PX  # clamping is exercised
    assert all(r.rect.width == r.rect.height for r in train + test)
    assert all(r.rect.right <= 1080 and r.rect.bottom <= 1920 for r in train + test)


def test_size_bounds_scale_with_screen():
    assert icon_size_bounds(1920) == (38, 192)
    assert icon_size_bounds(960) == (19, 96)


def test_kinds_round_robin(backgrounds):
    train, test = generate_synthetic_dataset(backgrounds, BANK, 60, 0.5, seed=3)
    counts = {}
    for r in train + test:
        counts[r.kind] = counts.get(r.kind, 0) + 1
    assert sorted(counts.values()) == [10] * 6


def test_deterministic_bytes(backgrounds, tmp_path):
    outs = []
    for run in ("a", "b"):
        train, test = generate_synthetic_dataset(backgrounds, BANK, 10, 0.8, seed=9)
        write_dataset(train, test, tmp_path / run)
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / run).iterdir())})
    assert outs[0] == outs[1] and len(outs[0]) == 11


def test_image_has_exactly_one_icon(backgrounds):
    train, _ = generate_synthetic_dataset(backgrounds, BANK, 5, 0.6, seed=4)
    for r in train:
        diff = np.any(r.image != backgrounds[r.background], axis=2)
        ys, xs = np.nonzero(diff)
        assert r.rect.contains(type(r.rect)(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1))


def test_manifest_round_trip(backgrounds, tmp_path):
    train, test = generate_synthetic_dataset(backgrounds, BANK, 12, 0.5, seed=6)
    path = write_dataset(train, test, tmp_path, images=False)
    doc = json.loads(path.read_text())
    assert doc["counts"] == {"train": 6, "test": 6}
    assert {"file", "kind", "rect", "split"} <= set(doc["records"][0])
    train2, test2 = load_manifest(path, backgrounds, BANK)
    assert [(r.index, r.kind, r.rect) for r in train2] == [(r.index, r.kind, r.rect) for r in train]
    assert np.array_equal(test2[0].image, test[0].image)


@pytest.mark.parametrize("count, split", [(0, 0.8), (10, 0.0), (10, 1.0), (10, 1.5)])
def test_invalid_params(backgrounds, count, split):
    with pytest.raises(InvalidParams):
        generate_synthetic_dataset(backgrounds, BANK, count, split, seed=0)


def test_needs_backgrounds_and_templates(backgrounds):
    with pytest.raises(InvalidParams):
        generate_synthetic_dataset([], BANK, 5, 0.5, seed=0)
    with pytest.raises(InvalidParams):
        generate_synthetic_dataset(backgrounds, [], 5, 0.5, seed=0)
