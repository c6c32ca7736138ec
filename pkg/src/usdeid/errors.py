"""Classified errors shared across the package.

Every error the batch runner treats as "skip this file and continue" derives
from SkippableError and carries a short machine-readable `reason` drawn from a
closed vocabulary, so log files stay greppable.
"""


class UsdeidError(Exception):
    """Base class for all package errors."""


class SkippableError(UsdeidError):
    """A per-file failure the batch runner records and survives."""

    reason = "error"


class NotDicomError(SkippableError):
    reason = "not-dicom"


class CorruptFileError(SkippableError):
    reason = "corrupt-file"


class UnsupportedTransferSyntaxError(SkippableError):
    reason = "unsupported-transfer-syntax"


class UnsupportedDepthError(SkippableError):
    reason = "unsupported-depth"


class UnsupportedFormatError(SkippableError):
    reason = "unsupported-format"


class DimensionMismatchError(SkippableError):
    reason = "dimension-mismatch"


class EmptyRoiError(SkippableError):
    reason = "empty-roi"


class GeometryDegenerateError(UsdeidError):
    """Boundary points too degenerate for shape fitting; callers fall back."""
