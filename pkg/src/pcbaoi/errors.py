"""Exception types shared across the package."""

from __future__ import annotations


class PcbAoiError(Exception):
    """Base class for all library errors."""


class DecodeError(PcbAoiError):
    """Image bytes are malformed; the message names the offset or reason."""


class UnsupportedFormatError(PcbAoiError):
    """Image bytes are not one of the supported formats (PNG, binary PGM)."""


class DimensionMismatchError(PcbAoiError):
    """Two inputs that must share dimensions do not.

    Carries both (width, height) pairs so callers can report which inputs
    disagree instead of silently resizing.
    """

    def __init__(self, expected: tuple[int, int], actual: tuple[int, int], what: str = "image"):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{what} dimensions differ: {expected[0]}x{expected[1]} vs {actual[0]}x{actual[1]}"
        )


class DetectionParseError(PcbAoiError):
    """A detections file could not be parsed; names the line or field at fault."""


class PatchBoundsError(PcbAoiError):
    """A fault-injection patch or target region does not fit inside the image."""


class PatchOverlapError(PcbAoiError):
    """A fault-injection patch overlaps the component it is meant to erase."""


class PatchNotFoundError(PcbAoiError):
    """No bare-board region of the required size could be found."""


class UndefinedAccuracyError(PcbAoiError):
    """Accuracy requested for a class with zero TP, FP and FN."""
