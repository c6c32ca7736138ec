"""Fixed 5x7 bitmap font used by the phantom renderer and the template recognizer.

Glyphs are 7 rows of 5 cells. The advance per character is 6 cells (5-cell
glyph box plus a 1-cell gap); a space advances 6 cells without ink.
"""

from __future__ import annotations

import numpy as np

CELL_W = 5
CELL_H = 7
ADVANCE = 6  # cells per character including inter-glyph gap

_RAW = {
    "0": ("0XXX0", "X000X", "X00XX", "X0X0X", "XX00X", "X000X", "0XXX0"),
    "1": ("00X00", "0XX00", "00X00", "00X00", "00X00", "00X00", "0XXX0"),
    "2": ("0XXX0", "X000X", "0000X", "000X0", "00X00", "0X000", "XXXXX"),
    "3": ("XXXXX", "0000X", "000X0", "00XX0", "0000X", "X000X", "0XXX0"),
    "4": ("000X0", "00XX0", "0X0X0", "X00X0", "XXXXX", "000X0", "000X0"),
    "5": ("XXXXX", "X0000", "XXXX0", "0000X", "0000X", "X000X", "0XXX0"),
    "6": ("00XX0", "0X000", "X0000", "XXXX0", "X000X", "X000X", "0XXX0"),
    "7": ("XXXXX", "0000X", "000X0", "00X00", "0X000", "0X000", "0X000"),
    "8": ("0XXX0", "X000X", "X000X", "0XXX0", "X000X", "X000X", "0XXX0"),
    "9": ("0XXX0", "X000X", "X000X", "0XXXX", "0000X", "000X0", "0XX00"),
    "A": ("00X00", "0X0X0", "X000X", "X000X", "XXXXX", "X000X", "X000X"),
    "B": ("XXXX0", "X000X", "X000X", "XXXX0", "X000X", "X000X", "XXXX0"),
    "C": ("0XXX0", "X000X", "X0000", "X0000", "X0000", "X000X", "0XXX0"),
    "D": ("XXX00", "X00X0", "X000X", "X000X", "X000X", "X00X0", "XXX00"),
    "E": ("XXXXX", "X0000", "X0000", "XXXX0", "X0000", "X0000", "XXXXX"),
    "F": ("XXXXX", "X0000", "X0000", "XXXX0", "X0000", "X0000", "X0000"),
    "G": ("0XXX0", "X000X", "X0000", "X0XXX", "X000X", "X000X", "0XXXX"),
    "H": ("X000X", "X000X", "X000X", "XXXXX", "X000X", "X000X", "X000X"),
    "I": ("0XXX0", "00X00", "00X00", "00X00", "00X00", "00X00", "0XXX0"),
    "J": ("00XXX", "000X0", "000X0", "000X0", "000X0", "X00X0", "0XX00"),
    "K": ("X000X", "X00X0", "X0X00", "XX000", "X0X00", "X00X0", "X000X"),
    "L": ("X0000", "X0000", "X0000", "X0000", "X0000", "X0000", "XXXXX"),
    "M": ("X000X", "XX0XX", "X0X0X", "X0X0X", "X000X", "X000X", "X000X"),
    "N": ("X000X", "XX00X", "X0X0X", "X00XX", "X000X", "X000X", "X000X"),
    "O": ("0XXX0", "X000X", "X000X", "X000X", "X000X", "X000X", "0XXX0"),
    "P": ("XXXX0", "X000X", "X000X", "XXXX0", "X0000", "X0000", "X0000"),
    "Q": ("0XXX0", "X000X", "X000X", "X000X", "X0X0X", "X00X0", "0XX0X"),
    "R": ("XXXX0", "X000X", "X000X", "XXXX0", "X0X00", "X00X0", "X000X"),
    "S": ("0XXXX", "X0000", "X0000", "0XXX0", "0000X", "0000X", "XXXX0"),
    "T": ("XXXXX", "00X00", "00X00", "00X00", "00X00", "00X00", "00X00"),
    "U": ("X000X", "X000X", "X000X", "X000X", "X000X", "X000X", "0XXX0"),
    "V": ("X000X", "X000X", "X000X", "X000X", "X000X", "0X0X0", "00X00"),
    "W": ("X000X", "X000X", "X000X", "X0X0X", "X0X0X", "XX0XX", "X000X"),
    "X": ("X000X", "X000X", "0X0X0", "00X00", "0X0X0", "X000X", "X000X"),
    "Y": ("X000X", "X000X", "0X0X0", "00X00", "00X00", "00X00", "00X00"),
    "Z": ("XXXXX", "0000X", "000X0", "00X00", "0X000", "X0000", "XXXXX"),
    "a": ("00000", "00000", "0XXX0", "0000X", "0XXXX", "X000X", "0XXXX"),
    "b": ("X0000", "X0000", "X0XX0", "XX00X", "X000X", "X000X", "XXXX0"),
    "c": ("00000", "00000", "0XXX0", "X0000", "X0000", "X000X", "0XXX0"),
    "d": ("0000X", "0000X", "0XX0X", "X00XX", "X000X", "X000X", "0XXXX"),
    "e": ("00000", "00000", "0XXX0", "X000X", "XXXXX", "X0000", "0XXX0"),
    "f": ("00XX0", "0X00X", "0X000", "XXX00", "0X000", "0X000", "0X000"),
    "g": ("00000", "0XXXX", "X000X", "X000X", "0XXXX", "0000X", "0XXX0"),
    "h": ("X0000", "X0000", "X0XX0", "XX00X", "X000X", "X000X", "X000X"),
    "i": ("00X00", "00000", "0XX00", "00X00", "00X00", "00X00", "0XXX0"),
    "j": ("000X0", "00000", "00XX0", "000X0", "000X0", "X00X0", "0XX00"),
    "k": ("X0000", "X0000", "X00X0", "X0X00", "XX000", "X0X00", "X00X0"),
    "l": ("0XX00", "00X00", "00X00", "00X00", "00X00", "00X00", "0XXX0"),
    "m": ("00000", "00000", "XX0X0", "X0X0X", "X0X0X", "X000X", "X000X"),
    "n": ("00000", "00000", "X0XX0", "XX00X", "X000X", "X000X", "X000X"),
    "o": ("00000", "00000", "0XXX0", "X000X", "X000X", "X000X", "0XXX0"),
    "p": ("00000", "XXXX0", "X000X", "X000X", "XXXX0", "X0000", "X0000"),
    "q": ("00000", "0XXXX", "X000X", "X000X", "0XXXX", "0000X", "0000X"),
    "r": ("00000", "00000", "X0XX0", "XX00X", "X0000", "X0000", "X0000"),
    "s": ("00000", "00000", "0XXXX", "X0000", "0XXX0", "0000X", "XXXX0"),
    "t": ("0X000", "0X000", "XXX00", "0X000", "0X000", "0X00X", "00XX0"),
    "u": ("00000", "00000", "X000X", "X000X", "X000X", "X00XX", "0XX0X"),
    "v": ("00000", "00000", "X000X", "X000X", "X000X", "0X0X0", "00X00"),
    "w": ("00000", "00000", "X000X", "X000X", "X0X0X", "X0X0X", "0X0X0"),
    "x": ("00000", "00000", "X000X", "0X0X0", "00X00", "0X0X0", "X000X"),
    "y": ("00000", "X000X", "X000X", "0XXXX", "0000X", "000X0", "XXX00"),
    "z": ("00000", "00000", "XXXXX", "000X0", "00X00", "0X000", "XXXXX"),
    "^": ("00X00", "0X0X0", "X000X", "00000", "00000", "00000", "00000"),
    "-": ("00000", "00000", "00000", "0XXX0", "00000", "00000", "00000"),
    "+": ("00000", "00X00", "00X00", "XXXXX", "00X00", "00X00", "00000"),
    "=": ("00000", "00000", "XXXXX", "00000", "XXXXX", "00000", "00000"),
    ".": ("00000", "00000", "00000", "00000", "00000", "0XX00", "0XX00"),
    ",": ("00000", "00000", "00000", "00000", "00XX0", "00XX0", "0X000"),
    ":": ("00000", "0XX00", "0XX00", "00000", "0XX00", "0XX00", "00000"),
    "/": ("0000X", "0000X", "000X0", "00X00", "0X000", "X0000", "X0000"),
    "(": ("000X0", "00X00", "0X000", "0X000", "0X000", "00X00", "000X0"),
    ")": ("0X000", "00X00", "000X0", "000X0", "000X0", "00X00", "0X000"),
    "%": ("XX00X", "XX00X", "000X0", "00X00", "0X000", "X00XX", "X00XX"),
    "'": ("00X00", "00X00", "00000", "00000", "00000", "00000", "00000"),
    "?": ("0XXX0", "X000X", "0000X", "000X0", "00X00", "00000", "00X00"),
}


def _to_bitmap(rows: tuple[str, ...]) -> np.ndarray:
    return np.array([[c == "X" for c in row] for row in rows], dtype=bool)


GLYPHS: dict[str, np.ndarray] = {ch: _to_bitmap(rows) for ch, rows in _RAW.items()}

SUPPORTED = set(GLYPHS) | {" "}


def glyph_tight(ch: str) -> tuple[np.ndarray, int, int]:
    """Glyph bitmap cropped to its inked columns plus its (left, right) cell offsets.

    Rows are kept at the full cell height so vertical alignment within a text
    line is preserved. Returns (bitmap, first_ink_col, last_ink_col_exclusive).
    """
    bm = GLYPHS[ch]
    cols = np.nonzero(bm.any(axis=0))[0]
    left, right = int(cols[0]), int(cols[-1]) + 1
    return bm[:, left:right], left, right


def text_size(text: str, scale: int = 1) -> tuple[int, int]:
    """(rows, cols) of the ink canvas `render_text` produces for `text`."""
    if not text:
        return 0, 0
    width = (ADVANCE * len(text) - 1) * scale  # drop the trailing gap
    return CELL_H * scale, width


def render_text(text: str, scale: int = 1) -> np.ndarray:
    """Rasterize `text` to a bool ink mask at an integer scale factor."""
    unsupported = set(text) - SUPPORTED
    if unsupported:
        raise ValueError(f"no glyphs for {sorted(unsupported)!r}")
    if scale < 1:
        raise ValueError("scale must be >= 1")
    rows, cols = text_size(text, scale)
    canvas = np.zeros((rows, cols), dtype=bool)
    for i, ch in enumerate(text):
        if ch == " ":
            continue
        big = np.kron(GLYPHS[ch], np.ones((scale, scale), dtype=bool))
        x0 = i * ADVANCE * scale
        canvas[:, x0:x0 + CELL_W * scale] |= big
    return canvas
