"""Binary subtraction, difference thresholding, and diff-pixel extraction.

The change-detection core of the pipeline: subtract the binarized test board
from the binarized design board, threshold the difference against its own
mean, and collect the surviving white pixels. Where the design has material
the test lacks (a missing component), the saturating difference lights up.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .errors import DimensionMismatchError
from .raster import BinaryImage, PixelCoord, RasterImage, binarize

SUBTRACT_MODES = ("saturating", "absolute")


class DiffPixelSet:
    """Coordinates of all white pixels in a thresholded difference image.

    Conceptually a set of (x, y) pixel coordinates plus the (width, height)
    of the image they came from; stored internally as a boolean mask so the
    matcher kernels can scan it without conversion. Duplicate coordinates
    cannot occur, and every coordinate lies inside ``source_dims``.
    """

    __slots__ = ("_mask", "_pixels")

    def __init__(self, pixels: Iterable[PixelCoord], source_dims: tuple[int, int]):
        width, height = source_dims
        if width < 1 or height < 1:
            raise ValueError(f"source_dims must be at least 1x1, got {width}x{height}")
        mask = np.zeros((height, width), dtype=bool)
        for px in pixels:
            x, y = px
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"diff pixel ({x}, {y}) outside {width}x{height} image")
            mask[y, x] = True
        mask.setflags(write=False)
        self._mask = mask
        self._pixels: frozenset[PixelCoord] | None = None

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "DiffPixelSet":
        """Build directly from a (height, width) boolean mask."""
        obj = cls.__new__(cls)
        m = np.ascontiguousarray(mask, dtype=bool)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"mask must be 2-D and non-empty, got shape {m.shape}")
        m.setflags(write=False)
        obj._mask = m
        obj._pixels = None
        return obj

    @property
    def source_dims(self) -> tuple[int, int]:
        """(width, height) of the subtraction image."""
        return (self._mask.shape[1], self._mask.shape[0])

    @property
    def pixels(self) -> frozenset[PixelCoord]:
        """The diff pixels as a frozen set of (x, y) coordinates."""
        if self._pixels is None:
            ys, xs = np.nonzero(self._mask)
            self._pixels = frozenset(
                PixelCoord(int(x), int(y)) for x, y in zip(xs.tolist(), ys.tolist())
            )
        return self._pixels

    def mask(self) -> np.ndarray:
        """Read-only (height, width) boolean view of the diff pixels."""
        return self._mask

    def __len__(self) -> int:
        return int(np.count_nonzero(self._mask))

    def __iter__(self) -> Iterator[PixelCoord]:
        return iter(self.pixels)

    def __contains__(self, coord: object) -> bool:
        try:
            x, y = coord  # type: ignore[misc]
        except (TypeError, ValueError):
            return False
        w, h = self.source_dims
        return 0 <= x < w and 0 <= y < h and bool(self._mask[y, x])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiffPixelSet):
            return NotImplemented
        return self._mask.shape == other._mask.shape and bool(
            np.array_equal(self._mask, other._mask)
        )

    def __hash__(self) -> int:
        return hash((self._mask.shape, self._mask.tobytes()))

    def __repr__(self) -> str:
        w, h = self.source_dims
        return f"DiffPixelSet({len(self)} pixels in {w}x{h})"


def subtract(design: RasterImage, test: RasterImage, mode: str = "saturating") -> RasterImage:
    """Per-pixel subtraction of the test board from the design board.

    ``saturating`` (the default) computes max(design - test, 0): with white =
    material, it fires exactly where the design has something the test lacks.
    ``absolute`` computes |design - test| for binarizations with inverted
    polarity. Inputs must have identical dimensions; mismatches raise
    :class:`DimensionMismatchError` rather than auto-resizing.
    """
    if mode not in SUBTRACT_MODES:
        raise ValueError(f"mode must be one of {SUBTRACT_MODES}, got {mode!r}")
    if design.dims != test.dims:
        raise DimensionMismatchError(design.dims, test.dims, what="design/test")
    diff = design.pixels.astype(np.int16) - test.pixels.astype(np.int16)
    if mode == "saturating":
        diff = np.maximum(diff, 0)
    else:
        diff = np.abs(diff)
    return RasterImage(diff.astype(np.uint8))


def threshold_diff(sub: RasterImage) -> BinaryImage:
    """Threshold a subtraction image: 255 where strictly above its mean.

    Same mean/strict-> semantics as :func:`pcbaoi.raster.binarize`, so an
    all-zero difference (identical boards) yields no diff pixels at all.
    """
    return binarize(sub)


def extract_diff_pixels(bin_img: BinaryImage) -> DiffPixelSet:
    """Collect the coordinates of every 255-valued pixel."""
    return DiffPixelSet.from_mask(bin_img.pixels == 255)
