"""Hot inner loops: per-box diff-pixel scans and greedy NMS suppression.

Both kernels exist twice: a numba-jitted version and a pure-numpy fallback.
Selection happens once at import time from the PCBAOI_BACKEND environment
variable:

    PCBAOI_BACKEND=numba   require the jit path (ImportError if numba missing)
    PCBAOI_BACKEND=numpy   force the fallback
    unset / auto           numba when importable, else numpy

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np


def _numpy_box_scan(mask: np.ndarray, boxes: np.ndarray, count_cap: int) -> np.ndarray:
    """For each clipped box [x0, y0, x1, y1), locate diff pixels inside it.

    Returns an (n, 3) int64 array of (hit_y, hit_x, count) where hit is the
    row-major-first (smallest (y, x)) true pixel, (-1, -1) if none, and count
    saturates at ``count_cap``.
    """
    n = boxes.shape[0]
    out = np.full((n, 3), -1, dtype=np.int64)
    for i in range(n):
        x0, y0, x1, y1 = boxes[i]
        if x1 <= x0 or y1 <= y0:
            out[i, 2] = 0
            continue
        sub = mask[y0:y1, x0:x1]
        count = int(np.count_nonzero(sub))
        out[i, 2] = min(count, count_cap)
        if count:
            flat = int(np.argmax(sub.reshape(-1)))
            out[i, 0] = y0 + flat // (x1 - x0)
            out[i, 1] = x0 + flat % (x1 - x0)
    return out


def _numpy_nms_keep(
    boxes: np.ndarray, classes: np.ndarray, order: np.ndarray, iou_threshold: float
) -> np.ndarray:
    """Greedy keep flags over ``order`` (already sorted by descending score).

    boxes are [x0, y0, x1, y1) half-open; a candidate is suppressed when its
    IoU with any already-kept box of the same class exceeds the threshold.
    """
    m = order.shape[0]
    keep = np.zeros(m, dtype=np.bool_)
    kept: list[int] = []
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    for j in range(m):
        i = order[j]
        suppressed = False
        for k in kept:
            if classes[k] != classes[i]:
                continue
            iw = min(boxes[i, 2], boxes[k, 2]) - max(boxes[i, 0], boxes[k, 0])
            ih = min(boxes[i, 3], boxes[k, 3]) - max(boxes[i, 1], boxes[k, 1])
            if iw <= 0 or ih <= 0:
                continue
            inter = iw * ih
            if inter / (areas[i] + areas[k] - inter) > iou_threshold:
                suppressed = True
                break
        if not suppressed:
            keep[j] = True
            kept.append(i)
    return keep


def _resolve_backend(requested: str, numba_available: bool) -> str:
    req = requested.strip().lower()
    if req in ("", "auto"):
        return "numba" if numba_available else "numpy"
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not numba_available:
            raise ImportError("PCBAOI_BACKEND=numba but numba is not importable")
        return "numba"
    raise ValueError(f"PCBAOI_BACKEND={requested!r} not understood (numba, numpy, auto)")


try:
    from numba import njit

    _NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via PCBAOI_BACKEND=numpy
    _NUMBA_AVAILABLE = False

_BACKEND = _resolve_backend(os.environ.get("PCBAOI_BACKEND", "auto"), _NUMBA_AVAILABLE)

if _BACKEND == "numba":

    @njit(cache=True)
    def _numba_box_scan(mask, boxes, count_cap):  # pragma: no cover - jitted
        n = boxes.shape[0]
        out = np.full((n, 3), -1, dtype=np.int64)
        for i in range(n):
            x0 = boxes[i, 0]
            y0 = boxes[i, 1]
            x1 = boxes[i, 2]
            y1 = boxes[i, 3]
            count = 0
            hy = -1
            hx = -1
            for y in range(y0, y1):
                for x in range(x0, x1):
                    if mask[y, x]:
                        if count == 0:
                            hy = y
                            hx = x
                        count += 1
                        if count >= count_cap:
                            break
                if count >= count_cap:
                    break
            out[i, 0] = hy
            out[i, 1] = hx
            out[i, 2] = count
        return out

    @njit(cache=True)
    def _numba_nms_keep(boxes, classes, order, iou_threshold):  # pragma: no cover - jitted
        m = order.shape[0]
        keep = np.zeros(m, dtype=np.bool_)
        kept = np.empty(m, dtype=np.int64)
        n_kept = 0
        for j in range(m):
            i = order[j]
            area_i = (boxes[i, 2] - boxes[i, 0]) * (boxes[i, 3] - boxes[i, 1])
            suppressed = False
            for kk in range(n_kept):
                k = kept[kk]
                if classes[k] != classes[i]:
                    continue
                iw = min(boxes[i, 2], boxes[k, 2]) - max(boxes[i, 0], boxes[k, 0])
                ih = min(boxes[i, 3], boxes[k, 3]) - max(boxes[i, 1], boxes[k, 1])
                if iw <= 0 or ih <= 0:
                    continue
                inter = iw * ih
                area_k = (boxes[k, 2] - boxes[k, 0]) * (boxes[k, 3] - boxes[k, 1])
                if inter / (area_i + area_k - inter) > iou_threshold:
                    suppressed = True
                    break
            if not suppressed:
                keep[j] = True
                kept[n_kept] = i
                n_kept += 1
        return keep

    box_scan = _numba_box_scan
    nms_keep = _numba_nms_keep
else:
    box_scan = _numpy_box_scan
    nms_keep = _numpy_nms_keep


def backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return _BACKEND
