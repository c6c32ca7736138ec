"""Ground-truth phantom generation.

Phantoms mimic the three scan-region shapes (plain wedge, notched wedge,
rectangle): region pixels carry per-frame uniform speckle, overlay strings are
rendered from the packaged bitmap font identically in every frame, and the
generator hands back the exact region mask and text boxes so downstream
results can be scored against a known answer. A minimal in-memory DICOM
writer rounds out the loop for parser and end-to-end tests.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import font
from .imgbuf import BoundingBox, FrameStack, mask_bbox
from .roi import RECT, SECTOR, RoiShape, arc_span

SPECKLE_LO = 40
SPECKLE_HI = 255
TEXT_INTENSITY = 255

WEDGE = "wedge"
NOTCHED = "notched_wedge"
RECTANGLE = "rect"
KINDS = (WEDGE, NOTCHED, RECTANGLE)


@dataclass(frozen=True)
class PlantedText:
    x: int
    y: int
    text: str
    scale: int = 1


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    rows: int
    cols: int
    frames: int = 1
    seed: int = 0
    center: tuple[float, float] = (0.0, 0.0)
    r_outer: float = 0.0
    r_inner: float = 0.0
    theta_left: float = 0.0
    theta_right: float = 0.0
    rect: BoundingBox | None = None
    texts: tuple[PlantedText, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}")
        if self.frames < 1:
            raise ValueError("need at least one frame")

    def shape(self) -> RoiShape:
        """The analytic region this phantom renders."""
        if self.kind == RECTANGLE:
            return RoiShape(RECT, rect=self.rect)
        return RoiShape(SECTOR, self.center, self.r_outer, self.r_inner,
                        self.theta_left, self.theta_right)


@dataclass(frozen=True)
class GroundTruth:
    roi_mask: np.ndarray
    text_boxes: tuple[tuple[BoundingBox, str], ...]
    texts_overlap_roi: bool


def _sector_extremes(spec: PhantomSpec) -> list[tuple[float, float]]:
    """Points bounding the sector: arc endpoints plus axis-aligned arc extremes."""
    cx, cy = spec.center
    start, span = arc_span(spec.theta_left, spec.theta_right)
    angles = [start, start + span]
    for axis_ang in (0.0, math.pi / 2, math.pi, -math.pi / 2):
        if (axis_ang - start) % (2 * math.pi) <= span:
            angles.append(axis_ang)
    pts = []
    for r in (spec.r_inner, spec.r_outer):
        for a in angles:
            pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    return pts


def _check_fits(spec: PhantomSpec) -> None:
    if spec.kind == RECTANGLE:
        if spec.rect is None or not spec.rect.inside(spec.rows, spec.cols):
            raise ValueError(f"rect {spec.rect} overflows {spec.rows}x{spec.cols}")
        return
    if not 0.0 <= spec.r_inner < spec.r_outer:
        raise ValueError("need 0 <= r_inner < r_outer")
    for x, y in _sector_extremes(spec):
        if not (0.0 <= x < spec.cols and 0.0 <= y < spec.rows):
            raise ValueError(f"sector point ({x:.1f}, {y:.1f}) overflows "
                             f"{spec.rows}x{spec.cols}")


def rasterize_region(spec: PhantomSpec) -> np.ndarray:
    """Exact region mask for a phantom spec (the generator's own rasterizer)."""
    if spec.kind == RECTANGLE:
        mask = np.zeros((spec.rows, spec.cols), dtype=bool)
        mask[spec.rect.slices()] = True
        return mask
    cx, cy = spec.center
    ys, xs = np.mgrid[0:spec.rows, 0:spec.cols]
    dx = xs - cx
    dy = ys - cy
    d2 = dx * dx + dy * dy
    inside = (d2 >= spec.r_inner ** 2) & (d2 <= spec.r_outer ** 2)
    start, span = arc_span(spec.theta_left, spec.theta_right)
    ang = np.arctan2(dy, dx)
    return inside & ((ang - start) % (2.0 * math.pi) <= span)


def _text_ink(spec: PhantomSpec) -> tuple[np.ndarray, list[tuple[BoundingBox, str]]]:
    ink = np.zeros((spec.rows, spec.cols), dtype=bool)
    boxes = []
    for planted in spec.texts:
        glyphs = font.render_text(planted.text, planted.scale)
        h, w = glyphs.shape
        if planted.x < 0 or planted.y < 0 or \
                planted.x + w > spec.cols or planted.y + h > spec.rows:
            raise ValueError(f"text {planted.text!r} overflows the frame")
        ink[planted.y:planted.y + h, planted.x:planted.x + w] |= glyphs
        local = mask_bbox(glyphs)
        boxes.append((BoundingBox(planted.x + local.x, planted.y + local.y,
                                  local.w, local.h), planted.text))
    return ink, boxes


def render(spec: PhantomSpec) -> tuple[FrameStack, GroundTruth]:
    """Draw the phantom: speckled region, black background, constant overlays."""
    _check_fits(spec)
    region = rasterize_region(spec)
    ink, boxes = _text_ink(spec)
    n_region = int(np.count_nonzero(region))
    frames = []
    for f in range(spec.frames):
        rng = np.random.default_rng([spec.seed, f])
        frame = np.zeros((spec.rows, spec.cols), dtype=np.uint8)
        frame[region] = rng.integers(SPECKLE_LO, SPECKLE_HI + 1, n_region, dtype=np.uint8)
        frame[ink] = TEXT_INTENSITY
        frames.append(frame)
    truth = GroundTruth(region, tuple(boxes), bool(np.any(ink & region)))
    return FrameStack(frames, 1, f"phantom-{spec.kind}-{spec.seed}"), truth


# --- DICOM authoring ---------------------------------------------------------


def _element(group: int, elem: int, vr: str, value: bytes) -> bytes:
    if len(value) % 2:
        value += b"\x00" if vr in ("UI", "OB") else b" "
    head = struct.pack("<HH", group, elem) + vr.encode("ascii")
    if vr in ("OB", "OW", "OF", "SQ", "UT", "UN"):
        return head + b"\x00\x00" + struct.pack("<I", len(value)) + value
    return head + struct.pack("<H", len(value)) + value


def _text_elem(group, elem, vr, text: str) -> bytes:
    return _element(group, elem, vr, text.encode("ascii"))


def _us_elem(group, elem, value: int) -> bytes:
    return _element(group, elem, "US", struct.pack("<H", value))


def author_dicom(stack: FrameStack, patient_fields: dict[str, str] | None = None,
                 include_number_of_frames: bool | None = None) -> bytes:
    """Serialize a stack as a minimal Explicit-VR-Little-Endian file.

    `include_number_of_frames=None` writes the tag only for multi-frame stacks.
    """
    patient_fields = patient_fields or {}
    if include_number_of_frames is None:
        include_number_of_frames = stack.n_frames > 1

    pixel = b"".join(np.ascontiguousarray(f).tobytes() for f in stack.frames)
    out = [b"\x00" * 128, b"DICM"]
    out.append(_text_elem(0x0002, 0x0010, "UI", "1.2.840.10008.1.2.1"))
    out.append(_text_elem(0x0008, 0x0060, "CS", "US"))
    if "PatientName" in patient_fields:
        out.append(_text_elem(0x0010, 0x0010, "PN", patient_fields["PatientName"]))
    if "PatientID" in patient_fields:
        out.append(_text_elem(0x0010, 0x0020, "LO", patient_fields["PatientID"]))
    out.append(_us_elem(0x0028, 0x0002, stack.channels))
    out.append(_text_elem(0x0028, 0x0004,
                          "CS", "MONOCHROME2" if stack.channels == 1 else "RGB"))
    if stack.channels == 3:
        out.append(_us_elem(0x0028, 0x0006, 0))
    if include_number_of_frames:
        out.append(_text_elem(0x0028, 0x0008, "IS", str(stack.n_frames)))
    out.append(_us_elem(0x0028, 0x0010, stack.rows))
    out.append(_us_elem(0x0028, 0x0011, stack.cols))
    out.append(_us_elem(0x0028, 0x0100, 8))
    out.append(_element(0x7FE0, 0x0010, "OB", pixel))
    return b"".join(out)


# --- spec serialization ------------------------------------------------------


def spec_to_text(spec: PhantomSpec) -> str:
    """Human-reviewable key/value form, one field per line."""
    lines = [
        f"kind = {spec.kind}",
        f"rows = {spec.rows}",
        f"cols = {spec.cols}",
        f"frames = {spec.frames}",
        f"seed = {spec.seed}",
    ]
    if spec.kind == RECTANGLE:
        r = spec.rect
        lines.append(f"rect = {r.x} {r.y} {r.w} {r.h}")
    else:
        lines.append(f"center = {spec.center[0]!r} {spec.center[1]!r}")
        lines.append(f"r_outer = {spec.r_outer!r}")
        lines.append(f"r_inner = {spec.r_inner!r}")
        lines.append(f"theta_left = {spec.theta_left!r}")
        lines.append(f"theta_right = {spec.theta_right!r}")
    for t in spec.texts:
        lines.append(f"text = {t.x} {t.y} {t.scale} {t.text}")
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> PhantomSpec:
    scalar: dict[str, str] = {}
    texts: list[PlantedText] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "text":
            x, y, scale, string = value.split(" ", 3)
            texts.append(PlantedText(int(x), int(y), string, int(scale)))
        else:
            scalar[key] = value
    kind = scalar["kind"]
    kwargs = dict(
        kind=kind,
        rows=int(scalar["rows"]),
        cols=int(scalar["cols"]),
        frames=int(scalar.get("frames", "1")),
        seed=int(scalar.get("seed", "0")),
        texts=tuple(texts),
    )
    if kind == RECTANGLE:
        x, y, w, h = (int(v) for v in scalar["rect"].split())
        kwargs["rect"] = BoundingBox(x, y, w, h)
    else:
        cx, cy = (float(v) for v in scalar["center"].split())
        kwargs.update(center=(cx, cy),
                      r_outer=float(scalar["r_outer"]),
                      r_inner=float(scalar["r_inner"]),
                      theta_left=float(scalar["theta_left"]),
                      theta_right=float(scalar["theta_right"]))
    return PhantomSpec(**kwargs)


# --- corpus ------------------------------------------------------------------


def make_phantom_specs(seed: int = 0, per_kind: int = 10, frames: int = 8,
                       scale: int = 2) -> list[PhantomSpec]:
    """A varied, reproducible corpus: per_kind phantoms of each region shape.

    Overlay strings are placed in the top corners and along the bottom edge,
    clear of every region, so masking them never touches region pixels.
    """
    rng = np.random.default_rng(seed)
    specs = []
    for kind in KINDS:
        for i in range(per_kind):
            rows = int(rng.integers(300, 365))
            phantom_seed = int(rng.integers(0, 2 ** 31))
            if kind == RECTANGLE:
                cols = int(rng.integers(460, 560))
                w = int(rng.uniform(0.45, 0.60) * cols)
                h = int(rng.uniform(0.55, 0.70) * rows)
                x = (cols - w) // 2 + int(rng.integers(-10, 10))
                y = 40 + int(rng.integers(0, 14))
                specs.append(PhantomSpec(
                    kind, rows, cols, frames, phantom_seed,
                    rect=BoundingBox(x, y, w, h),
                    texts=_corner_texts(rng, rows, cols, scale)))
                continue
            # Wide fans keep the straight sides short relative to the region
            # area, which is where the geometric fit is most forgiving.
            half_span = float(rng.uniform(1.20, 1.35))
            cy = float(rng.uniform(36.0, 44.0))
            r_outer = rows - cy - 14.0
            cols = int(2 * (r_outer * math.sin(half_span) + rng.uniform(28, 44)))
            cx = cols / 2.0 + float(rng.uniform(-4, 4))
            r_inner = float(rng.uniform(0.18, 0.28)) * r_outer if kind == NOTCHED else 0.0
            specs.append(PhantomSpec(
                kind, rows, cols, frames, phantom_seed,
                center=(cx, cy), r_outer=r_outer, r_inner=r_inner,
                theta_left=math.pi / 2 + half_span,
                theta_right=math.pi / 2 - half_span,
                texts=_corner_texts(rng, rows, cols, scale)))
    return specs


_FIRST = ("JANE", "JOHN", "MARY", "OMAR", "LENA", "IVAN")
_LAST = ("DOE", "ROE", "POE", "LEE", "CHO", "RAY")


def _corner_texts(rng, rows: int, cols: int, scale: int) -> tuple[PlantedText, ...]:
    name = f"{rng.choice(_LAST)}^{rng.choice(_FIRST)}"
    hr = f"HR {int(rng.integers(48, 140))}"
    mrn = f"ID {int(rng.integers(10 ** 6, 10 ** 7))}"
    h = font.CELL_H * scale
    right_w = font.text_size(hr, scale)[1]
    return (
        PlantedText(6, 6, name, scale),
        PlantedText(cols - right_w - 6, 6, hr, scale),
        PlantedText(6, rows - h - 4, mrn, scale),
    )
