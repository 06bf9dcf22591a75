# %% Declared XML bounds versus what is actually drawn.
import numpy as np

from motorlint.capture import UiScreen, parse_hierarchy
from motorlint.detectors import detect_touch_targets, element_visual_bounds

img = np.full((400, 400, 3), 250, np.uint8)
img[120:155, 120:155] = (40, 40, 40)        # 35x35 glyph
xml = """<hierarchy rotation="0">
  <node index="0" class="android.widget.FrameLayout" bounds="[0,0][400,400]" clickable="false">
    <node index="0" class="android.widget.ImageButton" resource-id="demo:id/help"
          bounds="[107,107][167,167]" clickable="true" />
  </node>
</hierarchy>"""
screen = UiScreen.from_parts("help", img, parse_hierarchy(xml))
button = next(el for el in screen.elements() if el.clickable)
print("xml bounds   ", button.bounds, button.bounds.width, "px")

# %% The crop is padded by 15 px, the background is the border color,
# and only components touching the declared bounds count.
vb = element_visual_bounds(screen, button)
print("visual bounds", vb, vb.width, "px")

# %% 60 px declared, 35 px drawn: a violation under the 48 px rule.
for v in detect_touch_targets(screen).violations:
    print(v.element_id, v.evidence["visual_width"], "x", v.evidence["visual_height"])

# %% Grow the glyph to exactly 48 px and the violation disappears.
img2 = img.copy()
img2[113:161, 113:161] = (40, 40, 40)
print(detect_touch_targets(UiScreen.from_parts("help", img2, parse_hierarchy(xml))).violations)
