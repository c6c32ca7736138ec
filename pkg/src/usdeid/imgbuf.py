"""Core raster types and pixel-level primitives shared by the rest of the package.

Conventions used everywhere:
  * grayscale image: 2-D numpy array, dtype uint8, shape (rows, cols)
  * color image:     3-D numpy array, dtype uint8, shape (rows, cols, 3)
  * binary mask:     2-D numpy array, dtype bool
  * coordinates are (x, y) = (column, row), y pointing down
All operations are pure: inputs are never mutated, outputs are fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

# ITU-R 601 luma weights
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114

# 8-connectivity structuring element for component labeling
EIGHT_CONN = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box; (x, y) is the top-left corner, w/h the extents."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"degenerate box {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def slices(self) -> tuple[slice, slice]:
        """(row, col) slices for indexing numpy images."""
        return slice(self.y, self.y2), slice(self.x, self.x2)

    def inside(self, rows: int, cols: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x2 <= cols and self.y2 <= rows

    def union(self, other: "BoundingBox") -> "BoundingBox":
        x = min(self.x, other.x)
        y = min(self.y, other.y)
        return BoundingBox(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)


@dataclass
class FrameStack:
    """An ordered list of same-shaped frames from one source file."""

    frames: list[np.ndarray]
    channels: int = 1
    source_id: str = ""

    def __post_init__(self):
        if not self.frames:
            raise ValueError("frame stack needs at least one frame")
        if self.channels not in (1, 3):
            raise ValueError(f"unsupported channel count {self.channels}")
        want = 2 if self.channels == 1 else 3
        shape0 = self.frames[0].shape
        for f in self.frames:
            if f.ndim != want or f.shape != shape0:
                raise ValueError("all frames must share dimensions and channels")
            if f.dtype != np.uint8:
                raise ValueError("frames must be 8-bit")

    @property
    def rows(self) -> int:
        return self.frames[0].shape[0]

    @property
    def cols(self) -> int:
        return self.frames[0].shape[1]

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def gray_frames(self) -> list[np.ndarray]:
        """Frames reduced to grayscale (no-op for 1-channel stacks)."""
        if self.channels == 1:
            return list(self.frames)
        return [to_gray(f) for f in self.frames]

    def copy(self) -> "FrameStack":
        return FrameStack([f.copy() for f in self.frames], self.channels, self.source_id)


def to_gray(frame: np.ndarray) -> np.ndarray:
    """Collapse a 3-channel frame to 8-bit luma."""
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError("to_gray expects an (rows, cols, 3) frame")
    luma = (LUMA_R * frame[..., 0].astype(np.float64)
            + LUMA_G * frame[..., 1]
            + LUMA_B * frame[..., 2])
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def _check_box(img: np.ndarray, box: BoundingBox) -> None:
    rows, cols = img.shape[:2]
    if not box.inside(rows, cols):
        raise ValueError(f"box {box} outside {rows}x{cols} image")


def crop(img: np.ndarray, box: BoundingBox) -> np.ndarray:
    """Copy out the sub-image covered by `box`."""
    _check_box(img, box)
    return img[box.slices()].copy()


def fill_box(img: np.ndarray, box: BoundingBox, value: int = 0) -> np.ndarray:
    """Return a copy of `img` with every pixel inside `box` set to `value`."""
    _check_box(img, box)
    out = img.copy()
    out[box.slices()] = value
    return out


def connected_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 8-connected components; returns (labels, count), labels 1..count."""
    labels, count = ndimage.label(mask, structure=EIGHT_CONN)
    return labels, count


def component_boxes(labels: np.ndarray, count: int) -> list[BoundingBox]:
    """Tight bounding box per component label (index i -> label i+1)."""
    boxes = []
    for sl in ndimage.find_objects(labels, max_label=count):
        ys, xs = sl
        boxes.append(BoundingBox(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start))
    return boxes


def mask_bbox(mask: np.ndarray) -> BoundingBox | None:
    """Tight bounding box of the set pixels, or None for an empty mask."""
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    x, y = int(xs.min()), int(ys.min())
    return BoundingBox(x, y, int(xs.max()) - x + 1, int(ys.max()) - y + 1)
