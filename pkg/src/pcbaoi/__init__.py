"""Missing-component PCB inspection.

Given an aligned design image, a test image, and component detections, flags
each detection as missing iff difference pixels from the binarized
subtraction of the two images fall inside its bounding box. Ships the fault
injection and evaluation tooling needed to validate the pipeline end to end.
"""

from ._kernels import backend as kernel_backend
from .detect import (
    BBox,
    ComponentClass,
    Detection,
    DetectorConfig,
    filters_for_classes,
    iou,
    load_detections,
    nms,
    save_detections,
)
from .diffcore import DiffPixelSet, extract_diff_pixels, subtract, threshold_diff
from .errors import (
    DecodeError,
    DetectionParseError,
    DimensionMismatchError,
    PatchBoundsError,
    PatchNotFoundError,
    PatchOverlapError,
    PcbAoiError,
    UndefinedAccuracyError,
    UnsupportedFormatError,
)
from .evalkit import ClassStats, SampleSeries, class_accuracy, match_predictions, sse
from .faultgen import (
    FaultCase,
    FaultSpec,
    build_test_set,
    find_bare_patch,
    fixed_patch,
    inject_fault,
)
from .matcher import FaultReport, FlaggedDetection, box_contains_diff_pixel, classify_missing
from .raster import BinaryImage, PixelCoord, RasterImage, binarize, decode_image, encode_image

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BinaryImage",
    "ClassStats",
    "ComponentClass",
    "DecodeError",
    "Detection",
    "DetectionParseError",
    "DetectorConfig",
    "DiffPixelSet",
    "DimensionMismatchError",
    "FaultCase",
    "FaultReport",
    "FaultSpec",
    "FlaggedDetection",
    "PatchBoundsError",
    "PatchNotFoundError",
    "PatchOverlapError",
    "PcbAoiError",
    "PixelCoord",
    "RasterImage",
    "SampleSeries",
    "UndefinedAccuracyError",
    "UnsupportedFormatError",
    "binarize",
    "box_contains_diff_pixel",
    "build_test_set",
    "class_accuracy",
    "classify_missing",
    "decode_image",
    "encode_image",
    "extract_diff_pixels",
    "filters_for_classes",
    "find_bare_patch",
    "fixed_patch",
    "inject_fault",
    "iou",
    "kernel_backend",
    "load_detections",
    "match_predictions",
    "nms",
    "save_detections",
    "sse",
    "subtract",
    "threshold_diff",
    "__version__",
]
