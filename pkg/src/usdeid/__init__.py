"""De-identification toolkit for ultrasound-style image stacks.

Detects and sequesters burned-in overlay text, isolates the scan region with
morphological and geometric analysis, and re-emits cropped lossless frames
with audit CSVs and a compression report.
"""

from .imgbuf import BoundingBox, FrameStack, crop, fill_box, to_gray
from .metrics import color_select, compression_report, dice_score, imshowpair
from .pipeline import JobConfig, JobResult, run
from .roi import RoiShape, Tunables, final_roi
from .textmask import TextRecord, detect_text_boxes, mask_text, static_overlay_map

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "FrameStack", "crop", "fill_box", "to_gray",
    "color_select", "compression_report", "dice_score", "imshowpair",
    "JobConfig", "JobResult", "run",
    "RoiShape", "Tunables", "final_roi",
    "TextRecord", "detect_text_boxes", "mask_text", "static_overlay_map",
    "__version__",
]
