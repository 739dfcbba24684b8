"""Flag detections whose bounding boxes contain difference pixels.

A component is declared missing iff at least ``min_diff_pixels`` (default 1)
of the diff-pixel set fall inside its box. Box membership uses the half-open
convention [x, x+w) x [y, y+h); boxes overhanging the image are clipped
first, and a box that clips to nothing is never flagged.

Coordinate discipline: rasters index row-then-column internally, while every
public coordinate is (x, y) = (column, row). The conversion between the two
lives in this module's kernel calls and nowhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import _kernels
from .detect import BBox, Detection
from .diffcore import DiffPixelSet
from .errors import DimensionMismatchError
from .raster import PixelCoord, RasterImage


@dataclass(frozen=True)
class FlaggedDetection:
    """A detection judged missing, with the first diff pixel that matched it."""

    detection: Detection
    matched_pixel: PixelCoord

    def to_dict(self) -> dict[str, Any]:
        out = self.detection.to_dict()
        out["matched_pixel"] = {"x": self.matched_pixel.x, "y": self.matched_pixel.y}
        return out


@dataclass(frozen=True)
class FaultReport:
    """Final verdict: which detections are missing, plus run provenance."""

    missing: tuple[FlaggedDetection, ...]
    total_detections: int
    image_dims: tuple[int, int]
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "image": {"width": self.image_dims[0], "height": self.image_dims[1]},
            "parameters": dict(self.parameters),
            "total_detections": self.total_detections,
            "missing": [f.to_dict() for f in self.missing],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def box_contains_diff_pixel(box: BBox, diff: DiffPixelSet) -> PixelCoord | None:
    """First diff pixel inside the box, or None.

    "First" is the deterministic smallest-(y, x) choice: scanning the clipped
    box row by row, left to right. The box is clipped against the diff set's
    source dimensions before iteration.
    """
    width, height = diff.source_dims
    clipped = box.clip(width, height)
    if clipped is None:
        return None
    boxes = np.array([[clipped.x, clipped.y, clipped.x2, clipped.y2]], dtype=np.int64)
    hit = _kernels.box_scan(diff.mask(), boxes, 1)[0]
    if hit[2] == 0:
        return None
    return PixelCoord(int(hit[1]), int(hit[0]))


def classify_missing(
    design: RasterImage,
    detections: Sequence[Detection],
    diff: DiffPixelSet,
    *,
    min_diff_pixels: int = 1,
    parameters: Mapping[str, Any] | None = None,
) -> FaultReport:
    """Partition detections into missing / present by diff-pixel membership.

    ``missing`` holds, in input order, exactly those detections whose clipped
    box contains at least ``min_diff_pixels`` diff pixels; each carries the
    first matched pixel for diagnostics. ``parameters`` is echoed into the
    report (alongside the effective ``min_diff_pixels``) so runs are
    reproducible from their own output.
    """
    if min_diff_pixels < 1:
        raise ValueError(f"min_diff_pixels must be >= 1, got {min_diff_pixels}")
    if design.dims != diff.source_dims:
        raise DimensionMismatchError(design.dims, diff.source_dims, what="design/diff")
    width, height = diff.source_dims

    rows = np.zeros((len(detections), 4), dtype=np.int64)
    live = []
    for i, det in enumerate(detections):
        clipped = det.bbox.clip(width, height)
        if clipped is None:
            continue
        rows[i] = (clipped.x, clipped.y, clipped.x2, clipped.y2)
        live.append(i)

    flagged: list[FlaggedDetection] = []
    if live:
        scan = _kernels.box_scan(diff.mask(), rows, int(min_diff_pixels))
        for i in live:
            hit_y, hit_x, count = scan[i]
            if count >= min_diff_pixels:
                flagged.append(
                    FlaggedDetection(
                        detection=detections[i],
                        matched_pixel=PixelCoord(int(hit_x), int(hit_y)),
                    )
                )

    params = dict(parameters) if parameters else {}
    params.setdefault("min_diff_pixels", int(min_diff_pixels))
    return FaultReport(
        missing=tuple(flagged),
        total_detections=len(detections),
        image_dims=(width, height),
        parameters=params,
    )
