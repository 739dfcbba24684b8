"""Synthetic board builders shared by the unit and acceptance tests.

Boards are dark bare substrate with bright rectangular components laid out on
a grid, so mean-threshold binarization sends component interiors to 255 and
bare board to 0 by construction. Each component's detection bbox is exactly
its bright rectangle.
"""

from __future__ import annotations

import math
import random

import numpy as np

from pcbaoi import BBox, ComponentClass, Detection, RasterImage

BG_LEVEL = 30
COMPONENT_LEVEL = 220


def make_board(
    n_components: int,
    seed: int = 0,
    cell: int = 28,
) -> tuple[RasterImage, list[Detection]]:
    """A grid board with ``n_components`` bright components on dark substrate."""
    rng = random.Random(seed)
    cols = math.ceil(math.sqrt(n_components))
    rows = math.ceil(n_components / cols)
    width, height = cols * cell, rows * cell
    pixels = np.full((height, width), BG_LEVEL, dtype=np.uint8)

    detections = []
    for i in range(n_components):
        cx = (i % cols) * cell
        cy = (i // cols) * cell
        w = rng.randint(cell // 4, cell // 2 - 2)
        h = rng.randint(cell // 4, cell // 2 - 2)
        x = cx + rng.randint(1, 3)
        y = cy + rng.randint(1, 3)
        pixels[y : y + h, x : x + w] = COMPONENT_LEVEL
        detections.append(
            Detection(
                bbox=BBox(x, y, w, h),
                component=ComponentClass(i % 4),
                confidence=round(0.5 + 0.49 * rng.random(), 3),
            )
        )
    return RasterImage(pixels), detections


def make_noise_board(seed: int, width: int = 48, height: int = 48) -> RasterImage:
    """Uniform-noise grayscale image (for null-case pipeline runs)."""
    rng = np.random.default_rng(seed)
    return RasterImage(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def random_detections(
    seed: int, width: int, height: int, max_count: int = 6
) -> list[Detection]:
    """Random in-bounds detections for property-style tests."""
    rng = random.Random(seed)
    out = []
    for _ in range(rng.randint(0, max_count)):
        w = rng.randint(1, max(1, width // 2))
        h = rng.randint(1, max(1, height // 2))
        x = rng.randint(0, width - w)
        y = rng.randint(0, height - h)
        out.append(
            Detection(
                bbox=BBox(x, y, w, h),
                component=ComponentClass(rng.randint(0, 3)),
                confidence=round(rng.random(), 3),
            )
        )
    return out
