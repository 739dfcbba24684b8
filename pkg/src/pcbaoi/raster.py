"""Grayscale image representation, PNG/PGM codecs, and mean-threshold binarization.

Every image in the pipeline is a single-channel 8-bit raster. Color inputs are
converted at decode time with the standard luminance weighting
0.299 R + 0.587 G + 0.114 B, rounded to the nearest integer. Pixel data is held
as a read-only ``(height, width)`` uint8 numpy array; rasters are immutable
after construction and safe to share across threads.

Coordinates in the public API are always ``(x, y)`` = (column, row); the
row-major numpy layout is an internal detail.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, UnsupportedFormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_PGM_MAGIC = b"P5"


class PixelCoord(NamedTuple):
    """A pixel position as (column, row), 0-based."""

    x: int
    y: int


def _as_pixel_array(pixels: object) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValueError(f"pixel array must be 2-D (height, width), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.floor(arr)):
                raise ValueError("pixel values must be integers")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("pixel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    else:
        arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Immutable single-channel grayscale image.

    ``pixels`` is a read-only ``(height, width)`` uint8 array; ``data`` exposes
    the same values flattened row-major, matching the on-disk byte order of a
    binary PGM.
    """

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pixels", _as_pixel_array(self.pixels))

    @classmethod
    def from_flat(cls, width: int, height: int, data: Sequence[int]) -> "RasterImage":
        """Build from row-major flat values; length must equal width * height."""
        data = np.asarray(data)
        if data.ndim != 1 or data.size != width * height:
            raise ValueError(
                f"data length {data.size} does not match {width}x{height} = {width * height}"
            )
        return cls(data.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        """(width, height)."""
        return (self.width, self.height)

    @property
    def data(self) -> np.ndarray:
        """Row-major flattened pixel values."""
        return self.pixels.reshape(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self) -> int:
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(width={self.width}, height={self.height})"


@dataclass(frozen=True, eq=False, repr=False)
class BinaryImage(RasterImage):
    """Raster whose every pixel is exactly 0 or 255."""

    def __post_init__(self) -> None:
        super().__post_init__()
        bad = (self.pixels != 0) & (self.pixels != 255)
        if bad.any():
            y, x = np.argwhere(bad)[0]
            raise ValueError(
                f"binary image may only contain 0 or 255; found {self.pixels[y, x]} at ({x}, {y})"
            )


def decode_image(data: bytes) -> RasterImage:
    """Decode PNG or binary PGM bytes into a grayscale raster.

    Multi-channel PNGs are reduced with 0.299 R + 0.587 G + 0.114 B, rounded
    to the nearest integer. Raises :class:`DecodeError` for malformed files
    and :class:`UnsupportedFormatError` for anything that is not a PNG or a
    P5-format PGM (including 16-bit depths).
    """
    if data.startswith(_PNG_MAGIC):
        return _decode_png(data)
    if data.startswith(_PGM_MAGIC):
        return _decode_pgm(data)
    if len(data) < 8 and _PNG_MAGIC.startswith(data[:8]):
        raise DecodeError(f"truncated PNG signature: got {len(data)} of 8 bytes")
    raise UnsupportedFormatError(
        f"unrecognized image format (magic {data[:8]!r}); expected PNG or binary PGM"
    )


def _decode_png(data: bytes) -> RasterImage:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"PNG decode failed: {exc}") from exc
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise UnsupportedFormatError(f"unsupported PNG bit depth (mode {img.mode})")
    if img.mode == "L":
        return RasterImage(np.asarray(img))
    try:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise DecodeError(f"PNG channel conversion failed: {exc}") from exc
    lum = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return RasterImage(np.floor(lum + 0.5).astype(np.uint8))


def _decode_pgm(data: bytes) -> RasterImage:
    # P5 header: magic, width, height, maxval, single whitespace, then raw rows.
    pos = 2
    fields: list[int] = []

    def skip_space(p: int) -> int:
        while p < len(data):
            if data[p : p + 1].isspace():
                p += 1
            elif data[p : p + 1] == b"#":
                nl = data.find(b"\n", p)
                p = len(data) if nl < 0 else nl + 1
            else:
                break
        return p

    while len(fields) < 3:
        pos = skip_space(pos)
        m = re.match(rb"\d+", data[pos:])
        if not m:
            raise DecodeError(f"PGM header field {len(fields) + 1} missing at offset {pos}")
        fields.append(int(m.group(0)))
        pos += m.end()
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise DecodeError(f"PGM header not terminated by whitespace at offset {pos}")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DecodeError(f"PGM dimensions {width}x{height} invalid")
    if maxval > 255:
        raise UnsupportedFormatError(f"PGM maxval {maxval} exceeds 8-bit range")
    if maxval < 1:
        raise DecodeError(f"PGM maxval {maxval} invalid")
    expected = width * height
    raw = data[pos : pos + expected]
    if len(raw) != expected:
        raise DecodeError(
            f"PGM pixel data truncated at offset {pos + len(raw)}: "
            f"expected {expected} bytes, got {len(raw)}"
        )
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return RasterImage(arr)


def encode_image(img: RasterImage, format: str = "png") -> bytes:
    """Encode a raster as PNG or binary PGM bytes.

    Round-trip stable: ``decode_image(encode_image(x, f))`` reproduces x's
    dimensions and pixel data exactly for both formats.
    """
    fmt = format.strip().lower()
    if fmt == "png":
        buf = io.BytesIO()
        Image.fromarray(np.asarray(img.pixels), mode="L").save(buf, format="PNG")
        return buf.getvalue()
    if fmt == "pgm":
        header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
        return header + img.pixels.tobytes()
    raise UnsupportedFormatError(f"unsupported encode format {format!r}; expected png or pgm")


def binarize(img: RasterImage, threshold: float | None = None) -> BinaryImage:
    """Threshold a raster to {0, 255}.

    With ``threshold=None`` (the default) a pixel becomes 255 iff it is
    strictly greater than the exact arithmetic mean of all pixels; the
    comparison is done in integer arithmetic (pixel * count > sum), so no
    float rounding can flip a boundary pixel. A numeric ``threshold`` keeps
    the same strict-> rule against that fixed value.
    """
    pix = img.pixels
    if threshold is None:
        total = int(pix.sum(dtype=np.int64))
        white = pix.astype(np.int64) * pix.size > total
    else:
        white = pix > threshold
    return BinaryImage(np.where(white, 255, 0).astype(np.uint8))
