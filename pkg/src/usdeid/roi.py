"""Scan-region isolation.

A max-projection over the stack is smoothed, thresholded against the
background intensity and closed; the largest surviving component is the
morphological region estimate. Three points sampled from its lower boundary
drive a perpendicular-bisector circle fit that classifies the region as a
plain wedge, a notched wedge, or a rectangle and synthesizes an analytic mask.
If the analytic mask fails to cover the morphological estimate, the estimate
itself is returned, tagged as a fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage

from .errors import EmptyRoiError, GeometryDegenerateError
from .imgbuf import BoundingBox, FrameStack, connected_components, mask_bbox

SECTOR = "sector"
RECT = "rect"

DOWN = math.pi / 2  # y grows downward, so "down" is +pi/2 in atan2 terms


@dataclass(frozen=True)
class Tunables:
    """Every adjustable constant of the region pipeline, in one place."""

    sigma_divisor: float = 256.0   # adaptive sigma = max(1, min(rows,cols)/divisor)
    min_area_frac: float = 0.01    # component area floor for area_filter
    slope_tol: float = 0.05        # |chord slope| below this means rectangle
    parallel_eps: float = 1e-6     # chord slopes closer than this never intersect
    center_reach: float = 2.0      # max center distance, in image diagonals
    subset_ratio: float = 0.98     # morphological-mask coverage required of the fit
    notch_frac: float = 0.05       # inner radius below this fraction is no notch
    var_eps: float = 2.0           # temporal variance ceiling for static overlays
    bright_offset: int = 40        # overlay brightness margin above background

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Tunables":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in known:
                raise ValueError(f"unknown tunable {key!r}")
            kwargs[key] = int(value) if key == "bright_offset" else float(value)
        return cls(**kwargs)


@dataclass(frozen=True)
class GaussianKernel:
    """Separable-symmetric 2-D Gaussian, truncated at 3 sigma and normalized."""

    sigma: float
    radius: int
    weights: np.ndarray

    @classmethod
    def from_sigma(cls, sigma: float) -> "GaussianKernel":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        radius = math.ceil(3.0 * sigma)
        ax = np.arange(-radius, radius + 1, dtype=np.float64)
        xx, yy = np.meshgrid(ax, ax)
        w = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
        return cls(sigma, radius, w / w.sum())


@dataclass(frozen=True)
class StructElem:
    """Disk structuring element."""

    radius: int

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("radius must be >= 1")

    def footprint(self) -> np.ndarray:
        ax = np.arange(-self.radius, self.radius + 1)
        xx, yy = np.meshgrid(ax, ax)
        return (xx * xx + yy * yy) <= self.radius * self.radius


@dataclass(frozen=True)
class GeomPoints:
    """Boundary samples: three lower-edge points plus the extreme side pixels."""

    p1: tuple[int, int]
    p2: tuple[int, int]
    p3: tuple[int, int]
    q_left: tuple[int, int]
    q_right: tuple[int, int]
    m12: float
    m23: float


@dataclass(frozen=True)
class RoiShape:
    """Fitted region geometry: annular sector or axis-aligned rectangle."""

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    r_outer: float = 0.0
    r_inner: float = 0.0
    theta_left: float = 0.0
    theta_right: float = 0.0
    rect: BoundingBox | None = None

    def __post_init__(self):
        if self.kind == RECT:
            if self.rect is None:
                raise ValueError("rectangle shape needs a rect")
        elif self.kind == SECTOR:
            if self.rect is not None:
                raise ValueError("sector shape must not carry a rect")
            if not 0.0 <= self.r_inner < self.r_outer:
                raise ValueError(f"need 0 <= r_inner < r_outer, got "
                                 f"{self.r_inner}, {self.r_outer}")
            span = arc_span(self.theta_left, self.theta_right)[1]
            if not 0.0 < span <= math.pi + 1e-9:
                raise ValueError(f"sector span {span} outside (0, pi]")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")


@dataclass(frozen=True)
class RoiResult:
    mask: np.ndarray
    shape: RoiShape | None
    fallback: bool


def adaptive_sigma(rows: int, cols: int, divisor: float = 256.0) -> float:
    return max(1.0, min(rows, cols) / divisor)


def gaussian_smooth(img: np.ndarray, sigma: float | None = None) -> np.ndarray:
    """Blur with the adaptive kernel; borders replicate, output re-quantized."""
    if sigma is None:
        sigma = adaptive_sigma(*img.shape)
    kernel = GaussianKernel.from_sigma(sigma)
    out = ndimage.correlate(img.astype(np.float64), kernel.weights, mode="nearest")
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def threshold(img: np.ndarray, thresh: int = 0) -> np.ndarray:
    """Pixels strictly brighter than the background level."""
    if not 0 <= thresh <= 255:
        raise ValueError(f"threshold {thresh} outside [0, 255]")
    return img > thresh


def close(mask: np.ndarray, se: StructElem) -> np.ndarray:
    """Morphological closing: dilate then erode with the same disk.

    The mask is padded by the disk radius first so the result equals the
    closing computed on an unbounded background-filled plane.
    """
    fp = se.footprint()
    r = se.radius
    padded = np.pad(mask.astype(bool), r)
    dil = ndimage.binary_dilation(padded, structure=fp)
    ero = ndimage.binary_erosion(dil, structure=fp, border_value=0)
    return ero[r:-r, r:-r]


def area_filter(mask: np.ndarray, min_frac: float = 0.01) -> np.ndarray:
    """Drop components whose area is below min_frac of the image area."""
    if not 0.0 <= min_frac < 1.0:
        raise ValueError(f"min_frac {min_frac} outside [0, 1)")
    labels, count = connected_components(mask)
    if count == 0:
        return mask.astype(bool).copy()
    floor = min_frac * mask.size
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    keep = np.zeros(count + 1, dtype=bool)
    keep[1:] = areas[1:] >= floor
    return keep[labels]


def largest_component(mask: np.ndarray) -> np.ndarray:
    """Keep only the largest 8-connected component (empty stays empty)."""
    labels, count = connected_components(mask)
    if count == 0:
        return mask.astype(bool).copy()
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    return labels == int(np.argmax(areas[1:]) + 1)


def pick_geom_points(mask: np.ndarray, fracs=(0.15, 0.50, 0.85)) -> GeomPoints:
    """Sample the lower boundary at three columns plus the side extremes.

    Raises GeometryDegenerateError when the mask cannot support a fit (empty
    sampled column, or the sampled columns coincide).
    """
    box = mask_bbox(mask)
    if box is None:
        raise GeometryDegenerateError("empty mask")
    xs = [box.x + int(round(f * (box.w - 1))) for f in fracs]
    if not (xs[0] < xs[1] < xs[2]):
        raise GeometryDegenerateError(f"sampled columns {xs} not distinct")
    points = []
    for x in xs:
        ys = np.nonzero(mask[:, x])[0]
        if ys.size == 0:
            raise GeometryDegenerateError(f"no set pixels in column {x}")
        points.append((x, int(ys.max())))
    p1, p2, p3 = points

    ys_all, xs_all = np.nonzero(mask)
    left_i = np.lexsort((ys_all, xs_all))[0]       # min x, then min y on ties
    q_left = (int(xs_all[left_i]), int(ys_all[left_i]))
    right_x = int(xs_all.max())
    q_right = (right_x, int(ys_all[xs_all == right_x].min()))

    m12 = (p2[1] - p1[1]) / (p2[0] - p1[0])
    m23 = (p3[1] - p2[1]) / (p3[0] - p2[0])
    return GeomPoints(p1, p2, p3, q_left, q_right, m12, m23)


def _bisector_intersection(p1, p2, p3, m12: float, m23: float) -> tuple[float, float]:
    """Intersect the perpendicular bisectors of chords p1p2 and p2p3.

    Callers guarantee at most one chord is horizontal; vertical chords cannot
    occur because the sampled columns are strictly increasing.
    """
    mid12 = ((p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0)
    mid23 = ((p2[0] + p3[0]) / 2.0, (p2[1] + p3[1]) / 2.0)
    if m12 == 0.0:  # bisector of a horizontal chord is vertical
        x = mid12[0]
        y = mid23[1] - (x - mid23[0]) / m23
        return x, y
    if m23 == 0.0:
        x = mid23[0]
        y = mid12[1] - (x - mid12[0]) / m12
        return x, y
    s1 = -1.0 / m12
    s2 = -1.0 / m23
    x = (s1 * mid12[0] - s2 * mid23[0] + mid23[1] - mid12[1]) / (s1 - s2)
    y = mid12[1] + s1 * (x - mid12[0])
    return x, y


def ray_subtended_angle(m_left: float | None, m_right: float | None) -> float:
    """Acute angle between two rays given their slopes (None = vertical)."""
    if m_left is None and m_right is None:
        return 0.0
    if m_left is None:
        return math.pi / 2.0 - abs(math.atan(m_right))
    if m_right is None:
        return math.pi / 2.0 - abs(math.atan(m_left))
    denom = 1.0 + m_left * m_right
    if denom == 0.0:
        return math.pi / 2.0
    return abs(math.atan((m_left - m_right) / denom))


def arc_span(theta_left: float, theta_right: float) -> tuple[float, float]:
    """(start, span) of the closed arc between the two angles containing DOWN.

    Angles are atan2 values in (-pi, pi]; the arc runs from `start` by `span`
    in the positive direction.
    """
    two_pi = 2.0 * math.pi
    fwd = (theta_left - theta_right) % two_pi       # right -> left, positive
    if (DOWN - theta_right) % two_pi <= fwd + 1e-12:
        return theta_right, fwd
    return theta_left, (theta_right - theta_left) % two_pi


def _ray_slope(c: tuple[float, float], q: tuple[float, float]) -> float | None:
    dx = q[0] - c[0]
    if dx == 0.0:
        return None
    return (q[1] - c[1]) / dx


def fit_shape(pts: GeomPoints, mask: np.ndarray,
              cfg: Tunables = Tunables()) -> RoiShape:
    """Classify the region and fit its geometry from the boundary samples.

    Near-zero chord slopes, parallel bisectors, or a far-flung circle center
    all indicate a rectangular region; otherwise the bisector intersection is
    the sector center, the farthest lower-boundary sample sets the outer
    radius, and the nearest mask pixel sets the inner (notch) radius.
    """
    rows, cols = mask.shape

    def rect_shape() -> RoiShape:
        box = mask_bbox(mask)
        if box is None:
            raise GeometryDegenerateError("empty mask")
        return RoiShape(RECT, rect=box)

    if max(abs(pts.m12), abs(pts.m23)) < cfg.slope_tol:
        return rect_shape()
    if abs(pts.m12 - pts.m23) < cfg.parallel_eps:
        return rect_shape()

    cx, cy = _bisector_intersection(pts.p1, pts.p2, pts.p3, pts.m12, pts.m23)
    diag = math.hypot(rows, cols)
    if math.hypot(cx - cols / 2.0, cy - rows / 2.0) > cfg.center_reach * diag:
        return rect_shape()

    samples = np.array([pts.p1, pts.p2, pts.p3], dtype=np.float64)
    r_outer = float(np.max(np.hypot(samples[:, 0] - cx, samples[:, 1] - cy)))
    ys, xs = np.nonzero(mask)
    r_inner = float(np.min(np.hypot(xs - cx, ys - cy)))
    if r_outer <= 0.0:
        raise GeometryDegenerateError("zero outer radius")

    theta_left = math.atan2(pts.q_left[1] - cy, pts.q_left[0] - cx)
    theta_right = math.atan2(pts.q_right[1] - cy, pts.q_right[0] - cx)
    span = arc_span(theta_left, theta_right)[1]
    if not 0.0 < span <= math.pi + 1e-9:
        raise GeometryDegenerateError(f"sector span {span} outside (0, pi]")
    # The acute angle between the bounding rays, from the slope identity,
    # must agree with the span the ray angles imply; a mismatch means the
    # boundary samples do not describe a sane sector.
    theta = ray_subtended_angle(_ray_slope((cx, cy), pts.q_left),
                                _ray_slope((cx, cy), pts.q_right))
    if abs(min(span, math.pi - span) - theta) > 1e-6:
        raise GeometryDegenerateError(
            f"ray angle {theta} inconsistent with span {span}")

    if r_inner < cfg.notch_frac * r_outer:
        r_inner = 0.0
    if r_inner >= r_outer:
        raise GeometryDegenerateError("inner radius reached outer radius")
    return RoiShape(SECTOR, (cx, cy), r_outer, r_inner, theta_left, theta_right)


def shape_to_mask(shape: RoiShape, rows: int, cols: int) -> np.ndarray:
    """Rasterize a fitted shape onto a rows x cols grid."""
    if shape.kind == RECT:
        out = np.zeros((rows, cols), dtype=bool)
        box = shape.rect
        out[box.slices()] = True
        return out
    cx, cy = shape.center
    ys, xs = np.mgrid[0:rows, 0:cols]
    dx = xs - cx
    dy = ys - cy
    dist = np.hypot(dx, dy)
    radial = (dist >= shape.r_inner - 1e-9) & (dist <= shape.r_outer + 1e-9)
    start, span = arc_span(shape.theta_left, shape.theta_right)
    ang = np.arctan2(dy, dx)
    in_arc = (ang - start) % (2.0 * math.pi) <= span + 1e-12
    return radial & in_arc


def morphological_roi(stack: FrameStack, thresh: int = 0,
                      cfg: Tunables = Tunables()) -> np.ndarray:
    """Smoothed, thresholded, closed max-projection, largest component only."""
    grays = stack.gray_frames()
    proj = grays[0] if len(grays) == 1 else np.max(np.stack(grays), axis=0)
    sigma = adaptive_sigma(stack.rows, stack.cols, cfg.sigma_divisor)
    smoothed = gaussian_smooth(proj, sigma)
    mask = close(threshold(smoothed, thresh), StructElem(max(1, round(sigma))))
    mask = largest_component(mask)
    if not mask.any():
        raise EmptyRoiError("no region above threshold")
    return mask


def final_roi(stack: FrameStack, thresh: int = 0,
              cfg: Tunables = Tunables()) -> RoiResult:
    """Fit a geometric region; fall back to the morphological one if the fit
    fails to cover it."""
    morph = morphological_roi(stack, thresh, cfg)
    try:
        pts = pick_geom_points(morph)
        shape = fit_shape(pts, morph, cfg)
    except GeometryDegenerateError:
        return RoiResult(morph, None, fallback=True)
    geom = shape_to_mask(shape, stack.rows, stack.cols)
    covered = np.count_nonzero(morph & geom) / np.count_nonzero(morph)
    if covered >= cfg.subset_ratio:
        return RoiResult(geom, shape, fallback=False)
    return RoiResult(morph, None, fallback=True)
