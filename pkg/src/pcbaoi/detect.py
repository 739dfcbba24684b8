"""Detection data model, annotation ingestion, IoU geometry, and NMS.

Detections enter the pipeline from annotation files (darknet-txt or the JSON
document format below) rather than from a live network; this module owns the
parsing, the box geometry, greedy per-class Non-Maximum Suppression, and the
head-width consistency rule filters = (num_classes + 5) * 3 that any
compatible detector must satisfy.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import DetectionParseError

DEFAULT_IOU_THRESHOLD = 0.45
DEFAULT_SCORE_THRESHOLD = 0.25

DETECTION_FORMATS = ("darknet", "json")


class ComponentClass(enum.IntEnum):
    """The four component categories, with stable ids 0..3."""

    CAPACITOR = 0
    RESISTOR = 1
    INDUCTOR = 2
    IC = 3

    @property
    def label(self) -> str:
        """Canonical string name used in JSON documents."""
        return _CLASS_LABELS[self]

    @classmethod
    def from_id(cls, class_id: int) -> "ComponentClass":
        try:
            return cls(class_id)
        except ValueError:
            raise DetectionParseError(
                f"unknown class id {class_id}; known ids are 0..{len(cls) - 1}"
            ) from None

    @classmethod
    def from_label(cls, label: str) -> "ComponentClass":
        try:
            return _LABEL_TO_CLASS[label]
        except KeyError:
            known = ", ".join(sorted(_LABEL_TO_CLASS))
            raise DetectionParseError(f"unknown class {label!r}; known classes: {known}") from None


_CLASS_LABELS = {
    ComponentClass.CAPACITOR: "Capacitor",
    ComponentClass.RESISTOR: "Resistor",
    ComponentClass.INDUCTOR: "Inductor",
    ComponentClass.IC: "IC",
}
_LABEL_TO_CLASS = {label: c for c, label in _CLASS_LABELS.items()}


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box over the half-open pixel region [x, x+w) x [y, y+h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)):
                raise ValueError(f"bbox {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.w < 1 or self.h < 1:
            raise ValueError(f"bbox must have w >= 1 and h >= 1, got w={self.w} h={self.h}")

    @property
    def x2(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def clip(self, width: int, height: int) -> "BBox | None":
        """Intersect with the image rectangle; None if nothing remains."""
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.x2, width)
        y1 = min(self.y2, height)
        if x1 <= x0 or y1 <= y0:
            return None
        return BBox(x0, y0, x1 - x0, y1 - y0)

    def to_dict(self) -> dict[str, int]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BBox":
        try:
            return cls(int(data["x"]), int(data["y"]), int(data["w"]), int(data["h"]))
        except KeyError as exc:
            raise DetectionParseError(f"bbox missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Detection:
    """One component hypothesis: class label + box + confidence."""

    bbox: BBox
    component: ComponentClass
    confidence: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "component", ComponentClass(self.component))
        conf = float(self.confidence)
        if not (0.0 <= conf <= 1.0) or math.isnan(conf):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence!r}")
        object.__setattr__(self, "confidence", conf)

    def to_dict(self) -> dict[str, Any]:
        return {
            "class": self.component.label,
            "bbox": self.bbox.to_dict(),
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Detection":
        try:
            component = ComponentClass.from_label(str(data["class"]))
            bbox = BBox.from_dict(data["bbox"])
        except KeyError as exc:
            raise DetectionParseError(f"detection missing field {exc.args[0]!r}") from None
        conf = data.get("confidence", 1.0)
        try:
            return cls(bbox=bbox, component=component, confidence=float(conf))
        except (TypeError, ValueError) as exc:
            raise DetectionParseError(str(exc)) from None


def filters_for_classes(num_classes: int) -> int:
    """Final-layer filter count a compatible detector head must have.

    filters = (num_classes + 5) * 3; e.g. 4 classes -> 27.
    """
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    return (num_classes + 5) * 3


@dataclass(frozen=True)
class DetectorConfig:
    """Detector head configuration; rejects inconsistent filter counts."""

    num_classes: int
    final_filters: int

    def __post_init__(self) -> None:
        expected = filters_for_classes(self.num_classes)
        if self.final_filters != expected:
            raise ValueError(
                f"final_filters={self.final_filters} inconsistent with "
                f"num_classes={self.num_classes}; expected ({self.num_classes} + 5) * 3 = {expected}"
            )


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union under the half-open region convention."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def nms(
    dets: Sequence[Detection],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    score_threshold: float = DEFAULT_SCORE_THRESHOLD,
) -> list[Detection]:
    """Greedy per-class hard NMS.

    Walking detections in descending confidence (ties broken by input order),
    a detection is kept iff its IoU with every already-kept detection of the
    same class is <= ``iou_threshold``; suppression is strict ``>``, so a
    threshold of 1.0 keeps everything. Detections below ``score_threshold``
    are dropped first. Output is ordered by descending confidence with input
    order breaking ties, and the whole operation is idempotent.
    """
    for name, value in (("iou_threshold", iou_threshold), ("score_threshold", score_threshold)):
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    candidates = [i for i, d in enumerate(dets) if d.confidence >= score_threshold]
    if not candidates:
        return []
    # Stable sort on -confidence preserves input order among ties.
    candidates.sort(key=lambda i: -dets[i].confidence)
    boxes = np.array(
        [[d.bbox.x, d.bbox.y, d.bbox.x2, d.bbox.y2] for d in dets], dtype=np.int64
    )
    classes = np.array([int(dets[i].component) for i in range(len(dets))], dtype=np.int64)
    order = np.array(candidates, dtype=np.int64)
    keep = _kernels.nms_keep(boxes, classes, order, float(iou_threshold))
    return [dets[i] for i, k in zip(candidates, keep) if k]


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def _check_inside(bbox: BBox, width: int, height: int, where: str) -> None:
    if bbox.x >= width or bbox.x2 <= 0 or bbox.y >= height or bbox.y2 <= 0:
        raise DetectionParseError(
            f"{where}: box {bbox.to_dict()} lies entirely outside the {width}x{height} image"
        )


def _parse_darknet(text: str, image_dims: tuple[int, int]) -> list[Detection]:
    width, height = image_dims
    out: list[Detection] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (5, 6):
            raise DetectionParseError(
                f"line {lineno}: expected 'class_id cx cy w h [conf]', got {len(tokens)} fields"
            )
        try:
            class_id = int(tokens[0])
        except ValueError:
            raise DetectionParseError(
                f"line {lineno}: class id {tokens[0]!r} is not an integer"
            ) from None
        try:
            cx, cy, w, h = (float(t) for t in tokens[1:5])
            conf = float(tokens[5]) if len(tokens) == 6 else 1.0
        except ValueError:
            raise DetectionParseError(f"line {lineno}: malformed decimal field") from None
        component = ComponentClass.from_id(class_id)
        if w <= 0 or h <= 0:
            raise DetectionParseError(f"line {lineno}: box width/height must be positive")
        bbox = BBox(
            x=_round_half_up((cx - w / 2) * width),
            y=_round_half_up((cy - h / 2) * height),
            w=max(1, _round_half_up(w * width)),
            h=max(1, _round_half_up(h * height)),
        )
        _check_inside(bbox, width, height, f"line {lineno}")
        try:
            out.append(Detection(bbox=bbox, component=component, confidence=conf))
        except ValueError as exc:
            raise DetectionParseError(f"line {lineno}: {exc}") from None
    return out


def parse_detections_json(text: str) -> tuple[tuple[int, int], list[Detection]]:
    """Parse a detections JSON document; returns ((width, height), detections)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DetectionParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DetectionParseError("detections document must be a JSON object")
    image = doc.get("image")
    if not isinstance(image, dict) or "width" not in image or "height" not in image:
        raise DetectionParseError('document must carry {"image": {"width":.., "height":..}}')
    try:
        dims = (int(image["width"]), int(image["height"]))
    except (TypeError, ValueError):
        raise DetectionParseError("image width/height must be integers") from None
    if dims[0] < 1 or dims[1] < 1:
        raise DetectionParseError(f"image dimensions {dims} invalid")
    entries = doc.get("detections")
    if not isinstance(entries, list):
        raise DetectionParseError('document must carry a "detections" array')
    dets = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise DetectionParseError(f"detections[{i}] is not an object")
        det = Detection.from_dict(entry)
        _check_inside(det.bbox, dims[0], dims[1], f"detections[{i}]")
        dets.append(det)
    return dims, dets


def load_detections(
    data: bytes | str,
    format: str,
    image_dims: tuple[int, int] | None = None,
) -> list[Detection]:
    """Load detections from darknet-txt or JSON bytes.

    darknet-txt lines are ``class_id cx cy w h [conf]`` with coordinates
    normalized to [0, 1]; ``image_dims`` is required to denormalize them.
    A box entirely outside the image is an error; partial overhang is kept
    (it is clipped later, at pixel-iteration time).
    """
    if format not in DETECTION_FORMATS:
        raise ValueError(f"format must be one of {DETECTION_FORMATS}, got {format!r}")
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if format == "darknet":
        if image_dims is None:
            raise ValueError("image_dims is required for the darknet format")
        return _parse_darknet(text, image_dims)
    dims, dets = parse_detections_json(text)
    if image_dims is not None and tuple(image_dims) != dims:
        raise DetectionParseError(
            f"document image dimensions {dims[0]}x{dims[1]} do not match "
            f"expected {image_dims[0]}x{image_dims[1]}"
        )
    return dets


def save_detections(dets: Iterable[Detection], image_dims: tuple[int, int]) -> str:
    """Serialize detections to the JSON document format (round-trip exact)."""
    doc = {
        "image": {"width": int(image_dims[0]), "height": int(image_dims[1])},
        "detections": [d.to_dict() for d in dets],
    }
    return json.dumps(doc, indent=2) + "\n"
