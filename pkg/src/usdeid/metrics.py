"""Evaluation helpers: overlap scoring, comparison overlays, size accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WHITE = (255, 255, 255)
DEFAULT_COLOR1 = (124, 252, 0)   # pixels only in the first mask
DEFAULT_COLOR2 = (255, 0, 252)   # pixels only in the second mask


def dice_score(pred: np.ndarray, true: np.ndarray, k: int = 1) -> float:
    """2|X n Y| / (|X| + |Y|) where membership means pixel value == k.

    Two empty sets agree perfectly and score 1.0.
    """
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {true.shape}")
    x = pred == k
    y = true == k
    total = int(np.count_nonzero(x)) + int(np.count_nonzero(y))
    if total == 0:
        return 1.0
    return 2.0 * np.count_nonzero(x & y) / total


def imshowpair(pred: np.ndarray, true: np.ndarray,
               color1=DEFAULT_COLOR1, color2=DEFAULT_COLOR2) -> np.ndarray:
    """Color-coded agreement image: white overlap, color1/color2 exclusives,
    black background."""
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {true.shape}")
    x = pred.astype(bool)
    y = true.astype(bool)
    out = np.zeros(x.shape + (3,), dtype=np.uint8)
    out[x & y] = WHITE
    out[x & ~y] = color1
    out[~x & y] = color2
    return out


def color_select(img: np.ndarray, x: int, y: int) -> tuple:
    """Pixel value at (x, y) as a 1- or 3-tuple; bounds are exclusive."""
    img = np.asarray(img)
    rows, cols = img.shape[:2]
    if not (0 <= x < cols and 0 <= y < rows):
        raise ValueError(f"({x}, {y}) outside {cols}x{rows} image")
    if img.ndim == 2:
        return (int(img[y, x]),)
    return tuple(int(v) for v in img[y, x])


def _human_size(n: float) -> str:
    for unit in ("B", "KB", "MB", "GB", "TB"):
        if abs(n) < 1000.0 or unit == "TB":
            if unit == "B":
                return f"{int(n)} {unit}"
            return f"{n:.1f} {unit}"
        n /= 1000.0
    return f"{n:.1f} TB"


@dataclass(frozen=True)
class CompressionReport:
    """Byte accounting for one run: original files vs emitted images + metadata."""

    before_bytes: int
    after_image_bytes: int
    after_meta_bytes: int

    def __post_init__(self):
        if self.before_bytes <= 0:
            raise ValueError("before_bytes must be positive")

    @property
    def after_bytes(self) -> int:
        return self.after_image_bytes + self.after_meta_bytes

    @property
    def retained(self) -> float:
        return self.after_bytes / self.before_bytes

    @property
    def ratio(self) -> float:
        """Fraction of the original volume removed."""
        return 1.0 - self.retained

    def render(self) -> str:
        """Plain-text table: before, after image/metadata/total, compression."""
        headers = ("Before", "Image Data", "MetaData", "Total", "Compression")
        row = (
            f"{_human_size(self.before_bytes)} (100%)",
            _human_size(self.after_image_bytes),
            _human_size(self.after_meta_bytes),
            f"{_human_size(self.after_bytes)} ({100.0 * self.retained:.1f}%)",
            f"{100.0 * self.ratio:.1f}%",
        )
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
        return "\n".join((fmt.format(*headers), rule, fmt.format(*row)))


def compression_report(before_bytes: int, after_image_bytes: int,
                       after_meta_bytes: int) -> CompressionReport:
    return CompressionReport(before_bytes, after_image_bytes, after_meta_bytes)
