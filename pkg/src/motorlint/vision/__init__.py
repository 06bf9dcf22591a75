"""Pixel-level primitives: crops, visual bounds, similarity, icon matching."""
from .icons import (IconDetector, IconKind, IconMatch, IconTemplate, default_bank,
                    detect_closure_icons, scale_ladder)
from .raster import Crop, crop, expand_rect, similarity, to_gray, visual_bounds
from .synth import SyntheticRecord, generate_synthetic_dataset, mock_screens, paste_icon

__all__ = [
    "Crop", "IconDetector", "IconKind", "IconMatch", "IconTemplate", "SyntheticRecord",
    "crop", "default_bank", "detect_closure_icons", "expand_rect", "generate_synthetic_dataset",
    "mock_screens", "paste_icon", "scale_ladder", "similarity", "to_gray", "visual_bounds",
]
