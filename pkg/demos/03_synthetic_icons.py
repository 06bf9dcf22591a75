# %% Build a small synthetic closure-icon set and run the matcher on it.
import time
from collections import Counter

from motorlint.capture import Rect
from motorlint.vision import Crop, default_bank, detect_closure_icons, mock_screens
from motorlint.vision.synth import generate_synthetic_dataset, icon_size_bounds

bank = default_bank()
print([t.kind.value for t in bank])
print("icon side range on a 1920 px screen:", icon_size_bounds(1920))

backgrounds = mock_screens(6, seed=5)
train, test = generate_synthetic_dataset(backgrounds, bank, 200, 0.8, seed=5)
print(len(train), "train /", len(test), "test")

# %% Each record renders lazily; the manifest entry is what gensynth writes.
r = test[0]
print(r.manifest_entry())

# %% Localize: a hit needs the right kind and IoU >= 0.5.
t0 = time.perf_counter()
hits, misses = 0, Counter()
for r in test:
    found = detect_closure_icons(Crop(r.image, Rect(0, 0, r.image.shape[1], r.image.shape[0])), bank)
    ok = any(m.kind is r.kind and m.location.iou(r.rect) >= 0.5 for m in found)
    hits += ok
    if not ok:
        misses[r.kind.value] += 1
print(f"{hits}/{len(test)} hits in {time.perf_counter() - t0:.1f}s, misses by kind: {dict(misses)}")
