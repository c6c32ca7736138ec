"""File ingestion: a minimal DICOM-subset parser plus PGM/PPM/PNG readers.

The DICOM reader handles exactly one wire format: 128-byte preamble, "DICM"
magic, Explicit VR Little Endian elements, native (defined-length) 8-bit pixel
data. Everything else raises a classified error; the parser never reads past a
declared length and never guesses.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    NotDicomError,
    UnsupportedDepthError,
    UnsupportedFormatError,
    UnsupportedTransferSyntaxError,
)
from .imgbuf import FrameStack

MAGIC_OFFSET = 128
UNDEFINED_LENGTH = 0xFFFFFFFF
EXPLICIT_VR_LITTLE_ENDIAN = "1.2.840.10008.1.2.1"

# VRs with a 2-byte length field; the rest use 2 reserved bytes + 4-byte length.
SHORT_VRS = frozenset({
    "AE", "AS", "AT", "CS", "DA", "DS", "DT", "FL", "FD", "IS", "LO", "LT",
    "PN", "SH", "SL", "SS", "ST", "TM", "UI", "UL", "US",
})
LONG_VRS = frozenset({"OB", "OW", "OF", "SQ", "UT", "UN"})
TEXT_VRS = frozenset({
    "AE", "AS", "CS", "DA", "DS", "DT", "IS", "LO", "LT", "PN", "SH", "ST",
    "TM", "UI", "UT",
})

TAG_TRANSFER_SYNTAX = (0x0002, 0x0010)
TAG_SAMPLES_PER_PIXEL = (0x0028, 0x0002)
TAG_PHOTOMETRIC = (0x0028, 0x0004)
TAG_PLANAR_CONFIG = (0x0028, 0x0006)
TAG_NUMBER_OF_FRAMES = (0x0028, 0x0008)
TAG_ROWS = (0x0028, 0x0010)
TAG_COLUMNS = (0x0028, 0x0011)
TAG_BITS_ALLOCATED = (0x0028, 0x0100)
TAG_PIXEL_DATA = (0x7FE0, 0x0010)

IMAGE_SUFFIXES = {".dcm", ".dicom", ".pgm", ".ppm", ".png"}


@dataclass(frozen=True)
class DicomElement:
    group: int
    element: int
    vr: str
    value: bytes

    @property
    def tag(self) -> tuple[int, int]:
        return (self.group, self.element)


@dataclass
class PixelMeta:
    rows: int
    cols: int
    frames: int
    samples_per_pixel: int
    bits_allocated: int
    photometric: str


@dataclass
class DicomDataset:
    elements: dict[tuple[int, int], DicomElement]
    pixel_meta: PixelMeta | None

    def get(self, tag: tuple[int, int]) -> DicomElement | None:
        return self.elements.get(tag)


class _Cursor:
    """Bounds-checked byte reader; every overrun is a corrupt-file error."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.remaining() < n:
            raise CorruptFileError(
                f"truncated element: wanted {n} bytes at offset {self.pos}, "
                f"have {self.remaining()}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def _element_int(elem: DicomElement) -> int:
    if elem.vr == "US":
        if len(elem.value) != 2:
            raise CorruptFileError(f"US element {elem.tag} has length {len(elem.value)}")
        return struct.unpack("<H", elem.value)[0]
    if elem.vr == "UL":
        if len(elem.value) != 4:
            raise CorruptFileError(f"UL element {elem.tag} has length {len(elem.value)}")
        return struct.unpack("<I", elem.value)[0]
    if elem.vr == "IS":
        text = elem.value.decode("ascii", errors="replace").strip("\x00 ")
        try:
            return int(text)
        except ValueError as exc:
            raise CorruptFileError(f"bad integer string {text!r} in {elem.tag}") from exc
    raise CorruptFileError(f"element {elem.tag} has non-integer VR {elem.vr}")


def _element_text(elem: DicomElement) -> str:
    return elem.value.decode("ascii", errors="replace").strip("\x00 ")


def parse_dicom(data: bytes) -> DicomDataset:
    """Parse one in-memory file; see module docstring for the accepted subset."""
    if len(data) < MAGIC_OFFSET + 4 or data[MAGIC_OFFSET:MAGIC_OFFSET + 4] != b"DICM":
        raise NotDicomError("missing DICM magic at offset 128")
    cur = _Cursor(data)
    cur.pos = MAGIC_OFFSET + 4

    elements: dict[tuple[int, int], DicomElement] = {}
    last_tag: tuple[int, int] | None = None
    while cur.remaining() > 0:
        group = cur.u16()
        element = cur.u16()
        tag = (group, element)
        if last_tag is not None and tag <= last_tag:
            raise CorruptFileError(f"tag {tag} not strictly increasing after {last_tag}")
        last_tag = tag
        vr = cur.take(2).decode("ascii", errors="replace")
        if vr in SHORT_VRS:
            length = cur.u16()
        elif vr in LONG_VRS:
            cur.take(2)  # reserved
            length = cur.u32()
        else:
            raise CorruptFileError(f"unknown VR {vr!r} for tag {tag}")
        if length == UNDEFINED_LENGTH:
            if tag == TAG_PIXEL_DATA:
                raise UnsupportedTransferSyntaxError(
                    "encapsulated (undefined-length) pixel data")
            raise UnsupportedTransferSyntaxError(
                f"undefined-length element {tag} not supported")
        value = cur.take(length)
        if vr == "SQ":
            continue  # sequences are skipped whole
        elements[tag] = DicomElement(group, element, vr, bytes(value))

    ts = elements.get(TAG_TRANSFER_SYNTAX)
    if ts is not None and _element_text(ts) != EXPLICIT_VR_LITTLE_ENDIAN:
        raise UnsupportedTransferSyntaxError(f"transfer syntax {_element_text(ts)!r}")

    bits = elements.get(TAG_BITS_ALLOCATED)
    if bits is not None and _element_int(bits) != 8:
        raise UnsupportedDepthError(f"BitsAllocated {_element_int(bits)} != 8")

    pixel_meta = None
    pixel = elements.get(TAG_PIXEL_DATA)
    if pixel is not None:
        pixel_meta = _build_pixel_meta(elements, pixel)
    return DicomDataset(elements, pixel_meta)


def _build_pixel_meta(elements, pixel: DicomElement) -> PixelMeta:
    def require(tag, name) -> DicomElement:
        elem = elements.get(tag)
        if elem is None:
            raise CorruptFileError(f"pixel data present but {name} missing")
        return elem

    rows = _element_int(require(TAG_ROWS, "Rows"))
    cols = _element_int(require(TAG_COLUMNS, "Columns"))
    samples = _element_int(require(TAG_SAMPLES_PER_PIXEL, "SamplesPerPixel"))
    bits = _element_int(require(TAG_BITS_ALLOCATED, "BitsAllocated"))
    photometric = _element_text(require(TAG_PHOTOMETRIC, "PhotometricInterpretation"))
    frames_elem = elements.get(TAG_NUMBER_OF_FRAMES)
    frames = _element_int(frames_elem) if frames_elem is not None else 1

    if rows < 1 or cols < 1 or frames < 1 or samples < 1:
        raise CorruptFileError("non-positive pixel geometry")
    expected = rows * cols * frames * samples
    padded = expected + (expected % 2)
    if len(pixel.value) not in (expected, padded):
        raise CorruptFileError(
            f"pixel data length {len(pixel.value)} != expected {expected}")
    return PixelMeta(rows, cols, frames, samples, bits, photometric)


def dataset_to_stack(ds: DicomDataset, source_id: str = "") -> FrameStack:
    """Split the pixel buffer into frames according to the header geometry."""
    if ds.pixel_meta is None:
        raise CorruptFileError("dataset has no pixel data")
    meta = ds.pixel_meta
    if meta.photometric == "MONOCHROME2":
        if meta.samples_per_pixel != 1:
            raise CorruptFileError("MONOCHROME2 with SamplesPerPixel != 1")
        channels = 1
    elif meta.photometric == "RGB":
        if meta.samples_per_pixel != 3:
            raise CorruptFileError("RGB with SamplesPerPixel != 3")
        planar = ds.get(TAG_PLANAR_CONFIG)
        if planar is not None and _element_int(planar) != 0:
            raise UnsupportedFormatError("planar (non-interleaved) RGB")
        channels = 3
    else:
        raise UnsupportedFormatError(
            f"photometric interpretation {meta.photometric!r}")

    expected = meta.rows * meta.cols * meta.frames * meta.samples_per_pixel
    raw = np.frombuffer(ds.get(TAG_PIXEL_DATA).value[:expected], dtype=np.uint8)
    if channels == 1:
        arr = raw.reshape(meta.frames, meta.rows, meta.cols)
    else:
        arr = raw.reshape(meta.frames, meta.rows, meta.cols, 3)
    return FrameStack([arr[i].copy() for i in range(meta.frames)], channels, source_id)


def extract_header_csv(ds: DicomDataset) -> list[tuple[str, str, str]]:
    """One (tag, vr, value) row per non-pixel element, values rendered as text."""
    rows = []
    for tag, elem in ds.elements.items():
        if tag == TAG_PIXEL_DATA:
            continue
        rows.append((f"{tag[0]:04X},{tag[1]:04X}", elem.vr, _render_value(elem)))
    return rows


def _render_value(elem: DicomElement) -> str:
    if elem.vr in ("US", "SS"):
        n = len(elem.value) // 2
        fmt = "<%d%s" % (n, "H" if elem.vr == "US" else "h")
        return "\\".join(str(v) for v in struct.unpack(fmt, elem.value[:2 * n]))
    if elem.vr in ("UL", "SL"):
        n = len(elem.value) // 4
        fmt = "<%d%s" % (n, "I" if elem.vr == "UL" else "i")
        return "\\".join(str(v) for v in struct.unpack(fmt, elem.value[:4 * n]))
    if elem.vr in ("FL", "FD"):
        size, code = (4, "f") if elem.vr == "FL" else (8, "d")
        n = len(elem.value) // size
        return "\\".join(repr(v) for v in struct.unpack(f"<{n}{code}", elem.value[:size * n]))
    raw = elem.value
    if elem.vr in TEXT_VRS:
        raw = raw.rstrip(b"\x00 ")
    return "".join(chr(b) if 0x20 <= b <= 0x7E else f"\\x{b:02x}" for b in raw)


# --- portable graymap / pixmap ---------------------------------------------


def _read_pnm_header(buf: io.BytesIO) -> tuple[bytes, int, int, int]:
    magic = buf.read(2)

    def token() -> bytes:
        tok = b""
        while True:
            ch = buf.read(1)
            if not ch:
                raise CorruptFileError("truncated netpbm header")
            if ch == b"#":
                while ch not in (b"\n", b""):
                    ch = buf.read(1)
                continue
            if ch.isspace():
                if tok:
                    return tok
                continue
            tok += ch

    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError as exc:
        raise CorruptFileError("malformed netpbm header") from exc
    return magic, width, height, maxval


def _read_pnm(data: bytes, magic_want: bytes, channels: int) -> np.ndarray:
    buf = io.BytesIO(data)
    magic, width, height, maxval = _read_pnm_header(buf)
    if magic != magic_want:
        raise CorruptFileError(f"expected {magic_want!r} magic, got {magic!r}")
    if width < 1 or height < 1:
        raise CorruptFileError("non-positive netpbm dimensions")
    if maxval != 255:
        raise UnsupportedDepthError(f"netpbm maxval {maxval} != 255")
    n = width * height * channels
    raw = buf.read(n)
    if len(raw) != n:
        raise CorruptFileError(f"netpbm pixel payload short: {len(raw)} < {n}")
    arr = np.frombuffer(raw, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape).copy()


def read_pgm(data: bytes) -> np.ndarray:
    """Binary P5 graymap, maxval 255."""
    return _read_pnm(data, b"P5", 1)


def read_ppm(data: bytes) -> np.ndarray:
    """Binary P6 pixmap, maxval 255."""
    return _read_pnm(data, b"P6", 3)


def write_pgm(img: np.ndarray) -> bytes:
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def write_ppm(img: np.ndarray) -> bytes:
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def _read_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8).copy()
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except OSError as exc:
        raise CorruptFileError(f"unreadable PNG {path.name}: {exc}") from exc


def _read_single_image(path: Path) -> np.ndarray:
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path.read_bytes())
    if suffix == ".ppm":
        return read_ppm(path.read_bytes())
    if suffix == ".png":
        return _read_png(path)
    raise UnsupportedFormatError(f"unsupported frame file {path.name}")


def read_frame_dir(path: Path, source_id: str = "") -> FrameStack:
    """A directory of equally-sized image files, sorted lexicographically."""
    files = sorted(p for p in Path(path).iterdir() if p.is_file())
    if not files:
        raise CorruptFileError(f"frame directory {path} is empty")
    frames = [_read_single_image(p) for p in files]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"mixed frame dimensions in {path}: {sorted(shapes)}")
    channels = 1 if frames[0].ndim == 2 else 3
    return FrameStack(frames, channels, source_id or Path(path).name)


def _looks_like_dicom(path: Path) -> bool:
    try:
        with open(path, "rb") as fh:
            fh.seek(MAGIC_OFFSET)
            return fh.read(4) == b"DICM"
    except OSError:
        return False


def load_stack(path: Path, source_id: str = "") -> tuple[FrameStack, DicomDataset | None]:
    """Load any supported input into a FrameStack.

    Returns the parsed dataset alongside the stack for DICOM inputs so callers
    can sequester the header.
    """
    path = Path(path)
    sid = source_id or path.name
    if path.is_dir():
        return read_frame_dir(path, sid), None
    suffix = path.suffix.lower()
    if suffix in (".dcm", ".dicom") or (suffix not in IMAGE_SUFFIXES and _looks_like_dicom(path)):
        ds = parse_dicom(path.read_bytes())
        return dataset_to_stack(ds, sid), ds
    if suffix in (".pgm", ".ppm", ".png"):
        frame = _read_single_image(path)
        channels = 1 if frame.ndim == 2 else 3
        return FrameStack([frame], channels, sid), None
    raise UnsupportedFormatError(f"unsupported input {path.name}")
