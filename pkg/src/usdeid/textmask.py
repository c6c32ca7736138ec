"""Burned-in text detection, recognition, and removal.

Overlay text is static and bright: identical in every frame while the echo
speckle underneath changes. The temporal variance/median test below turns
that into a candidate mask, connected glyphs are grouped into line boxes, a
pluggable recognizer recovers each line's string, and the boxes are zero
filled across the whole stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import font
from .imgbuf import BoundingBox, FrameStack, component_boxes, connected_components, fill_box

DEFAULT_VAR_EPS = 2.0
DEFAULT_BRIGHT_THRESH = 40

GLYPH_MIN_HEIGHT = 3
GLYPH_MAX_HEIGHT = 64
GLYPH_MIN_AREA = 4
LINE_GAP_FACTOR = 1.5     # max horizontal gap, in median glyph heights
V_OVERLAP_FRAC = 0.5      # vertical overlap required to share a line

INK_LEVEL = 127           # default recognizer binarization cut


@dataclass(frozen=True)
class TextRecord:
    """One recovered text line."""

    source_id: str
    frame: int
    box: BoundingBox
    text: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


class Recognizer(Protocol):
    """Anything that maps a cropped grayscale image to (text, confidence).

    Implementations must be deterministic for a fixed input. Set
    `concurrent_safe = False` on implementations that must not be invoked
    from multiple threads; the batch runner serializes around them.
    """

    concurrent_safe: bool

    def __call__(self, box_img: np.ndarray) -> tuple[str, float]: ...


def static_overlay_map(stack: FrameStack,
                       var_eps: float = DEFAULT_VAR_EPS,
                       bright_thresh: float = DEFAULT_BRIGHT_THRESH) -> np.ndarray:
    """Pixels that are bright and constant across frames.

    Single-frame stacks cannot express temporal variance, so they degrade to a
    brightness-only test.
    """
    grays = np.stack(stack.gray_frames()).astype(np.float64)
    if grays.shape[0] == 1:
        return grays[0] > bright_thresh
    return (np.var(grays, axis=0) < var_eps) & (np.median(grays, axis=0) > bright_thresh)


def detect_text_boxes(overlay: np.ndarray) -> list[BoundingBox]:
    """Group glyph-sized components of the overlay mask into text-line boxes.

    Components 3..64 px tall with at least 4 px of ink are glyph candidates;
    candidates whose vertical extents overlap at least half the shorter one
    and whose horizontal gap stays under 1.5 median glyph heights merge into
    one line. Output is sorted top-to-bottom, then left-to-right.
    """
    labels, count = connected_components(overlay)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    candidates = [b for i, b in enumerate(component_boxes(labels, count))
                  if GLYPH_MIN_HEIGHT <= b.h <= GLYPH_MAX_HEIGHT
                  and areas[i + 1] >= GLYPH_MIN_AREA]
    if not candidates:
        return []
    max_gap = LINE_GAP_FACTOR * float(np.median([b.h for b in candidates]))

    parent = list(range(len(candidates)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, a in enumerate(candidates):
        for j in range(i + 1, len(candidates)):
            b = candidates[j]
            overlap = min(a.y2, b.y2) - max(a.y, b.y)
            if overlap < V_OVERLAP_FRAC * min(a.h, b.h):
                continue
            gap = max(a.x, b.x) - min(a.x2, b.x2)
            if gap < max_gap:
                parent[find(i)] = find(j)

    lines: dict[int, BoundingBox] = {}
    for i, b in enumerate(candidates):
        root = find(i)
        lines[root] = b if root not in lines else lines[root].union(b)
    return sorted(lines.values(), key=lambda b: (b.y, b.x))


def recognize(box_img: np.ndarray, rec: "Recognizer") -> tuple[str, float]:
    """Delegate to the recognizer; failures yield ("", 0.0), never an exception."""
    if box_img.size == 0:
        return "", 0.0
    try:
        text, confidence = rec(box_img)
    except Exception:
        return "", 0.0
    return text, float(confidence)


def mask_text(stack: FrameStack, boxes: list[BoundingBox]) -> FrameStack:
    """Zero-fill every box in every frame; text repeats per frame, so must the fill."""
    out = stack.copy()
    for f in range(out.n_frames):
        frame = out.frames[f]
        for box in boxes:
            frame = fill_box(frame, box, 0)
        out.frames[f] = frame
    return out


# --- default recognizer ------------------------------------------------------


def _ncc(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized cross-correlation of two same-shaped bool arrays."""
    if np.array_equal(a, b):
        return 1.0
    af = a.astype(np.float64) - a.mean()
    bf = b.astype(np.float64) - b.mean()
    denom = np.sqrt((af * af).sum() * (bf * bf).sum())
    if denom == 0.0:  # at least one side is constant and they differ
        return 0.0
    return float((af * bf).sum() / denom)


def _nearest_resize(bits: np.ndarray, rows: int, cols: int) -> np.ndarray:
    r_idx = ((np.arange(rows) + 0.5) * bits.shape[0] / rows).astype(int)
    c_idx = ((np.arange(cols) + 0.5) * bits.shape[1] / cols).astype(int)
    return bits[np.minimum(r_idx, bits.shape[0] - 1)][:, np.minimum(c_idx, bits.shape[1] - 1)]


class TemplateRecognizer:
    """Correlation matcher against the packaged 5x7 font.

    Intended for high-contrast crops (clean renders or detection-mask crops):
    ink is whatever sits above the binarization level. Glyphs are split on
    blank columns, each segment is shrunk to its inked rows and columns and
    matched against every template at the template's own tight size;
    inter-glyph spacing reconstructs spaces.
    """

    concurrent_safe = True
    ASPECT_SLACK = 1.6  # max disagreement between row and column scales

    def __init__(self, ink_level: int = INK_LEVEL):
        self.ink_level = ink_level
        self._templates = {}
        for ch in sorted(font.GLYPHS):
            glyph, left, right = font.glyph_tight(ch)
            rows = np.nonzero(glyph.any(axis=1))[0]
            self._templates[ch] = (glyph[rows.min():rows.max() + 1], left, right)

    def __call__(self, box_img: np.ndarray) -> tuple[str, float]:
        ink = np.asarray(box_img) > self.ink_level
        if not ink.any():
            return "", 0.0
        segments = []
        for x0, x1 in self._split_columns(ink):
            seg = ink[:, x0:x1]
            rows = np.nonzero(seg.any(axis=1))[0]
            segments.append((x0, x1, self._match_glyph(seg[rows.min():rows.max() + 1])))
        # Correlation alone cannot separate templates that are resized copies
        # of each other (a letter and its capital, say); the glyph scale most
        # consistent with the rest of the line breaks those ties.
        line_scale = float(np.median([cands[0][2] for _, _, cands in segments]))
        matches = []
        for x0, x1, cands in segments:
            tied = [c for c in cands if c[1] >= cands[0][1] - 1e-9]
            tied.sort(key=lambda c: (abs(np.log(c[2] / line_scale)), c[0]))
            matches.append((x0, x1, *tied[0]))
        scale = float(np.median([m[4] for m in matches]))
        text = []
        scores = []
        prev_cell_end = None
        for x0, x1, ch, score, _ in matches:
            _, left, right = self._templates.get(ch, (None, 0, font.CELL_W))
            cell_start = x0 - left * scale
            if prev_cell_end is not None:
                gap = cell_start - prev_cell_end
                spaces = int(round((gap - scale) / (font.ADVANCE * scale)))
                text.append(" " * max(0, spaces))
            text.append(ch)
            scores.append(score)
            prev_cell_end = x1 + (font.CELL_W - right) * scale
        return "".join(text), float(np.mean(scores))

    @staticmethod
    def _split_columns(ink: np.ndarray) -> list[tuple[int, int]]:
        cols = ink.any(axis=0)
        segments = []
        start = None
        for x, has in enumerate(cols):
            if has and start is None:
                start = x
            elif not has and start is not None:
                segments.append((start, x))
                start = None
        if start is not None:
            segments.append((start, len(cols)))
        return segments

    def _match_glyph(self, seg: np.ndarray) -> list[tuple[str, float, float]]:
        """Candidate (char, correlation, scale) triples, best first.

        Among equal correlations the larger template ranks first: big
        templates are much harder to match by accident, so they give the
        more trustworthy provisional scale estimate.
        """
        cands = []
        for ch, (tight, _, _) in self._templates.items():
            s_rows = seg.shape[0] / tight.shape[0]
            s_cols = seg.shape[1] / tight.shape[1]
            if max(s_rows, s_cols) > self.ASPECT_SLACK * min(s_rows, s_cols):
                continue
            resized = _nearest_resize(seg, tight.shape[0], tight.shape[1])
            cands.append((ch, _ncc(resized, tight), s_rows, tight.size))
        if not cands:
            return [("?", 0.0, 1.0)]
        cands.sort(key=lambda c: (-c[1], -c[3], c[0]))
        return [(ch, score, scale) for ch, score, scale, _ in cands]


class CtcRecognizer:
    """Recognizer seam for models that emit per-timestep label distributions.

    `prob_fn` maps a cropped image to a T x (|labels|+1) probability matrix
    over `alphabet` (blank last); the greedy decoder turns that into text and
    the path score becomes the confidence.
    """

    concurrent_safe = True

    def __init__(self, prob_fn: Callable[[np.ndarray], np.ndarray], alphabet):
        self.prob_fn = prob_fn
        self.alphabet = alphabet

    def __call__(self, box_img: np.ndarray) -> tuple[str, float]:
        from . import ctc

        probs = self.prob_fn(box_img)
        return ctc.best_path_decode(probs, self.alphabet)
