"""Synthetic missing-component fault injection.

Erases a component by pasting a same-sized bare-board patch over its bounding
box, and builds whole test sets with exactly k components missing per image
(k = 1, 2, 3 reproduces the usual one/two/three-missing splits). The erased
ground truth travels with every generated image so the pipeline can be scored
closed-loop.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import comb
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .detect import BBox, Detection
from .errors import PatchBoundsError, PatchNotFoundError, PatchOverlapError
from .raster import PixelCoord, RasterImage, binarize

MAX_CASES_PER_K = 100


@dataclass(frozen=True)
class FaultSpec:
    """One erasure: the component to remove and where its bare patch comes from.

    The patch region is the rectangle of target.bbox's size anchored at
    ``patch_origin``; it must lie fully inside the image and must not overlap
    the target box (a patch sampled from under the component would be a no-op).
    """

    target: Detection
    patch_origin: PixelCoord


class FaultCase(NamedTuple):
    """A generated test image plus the detections that were erased from it."""

    image: RasterImage
    erased: tuple[Detection, ...]


PatchFinder = Callable[[RasterImage, Detection, Sequence[BBox]], FaultSpec]


def _patch_bbox(spec: FaultSpec) -> BBox:
    return BBox(spec.patch_origin.x, spec.patch_origin.y, spec.target.bbox.w, spec.target.bbox.h)


def _boxes_overlap(a: BBox, b: BBox) -> bool:
    return min(a.x2, b.x2) > max(a.x, b.x) and min(a.y2, b.y2) > max(a.y, b.y)


def _validate_spec(img: RasterImage, spec: FaultSpec) -> None:
    target = spec.target.bbox
    patch = _patch_bbox(spec)
    for name, box in (("target", target), ("patch", patch)):
        if box.x < 0 or box.y < 0 or box.x2 > img.width or box.y2 > img.height:
            raise PatchBoundsError(
                f"{name} region {box.to_dict()} does not fit inside the "
                f"{img.width}x{img.height} image"
            )
    if _boxes_overlap(patch, target):
        raise PatchOverlapError(
            f"patch at ({patch.x}, {patch.y}) overlaps target box {target.to_dict()}"
        )


def inject_fault(img: RasterImage, spec: FaultSpec) -> RasterImage:
    """Return a copy of the image with the target box replaced by bare board.

    Pixels outside target.bbox are untouched; the input image is never
    modified.
    """
    _validate_spec(img, spec)
    target = spec.target.bbox
    px, py = spec.patch_origin
    out = np.array(img.pixels)
    out[target.y : target.y2, target.x : target.x2] = img.pixels[
        py : py + target.h, px : px + target.w
    ]
    return RasterImage(out)


def find_bare_patch(
    img: RasterImage,
    target: Detection,
    avoid: Sequence[BBox],
    binarize_threshold: float | None = None,
) -> FaultSpec:
    """Scan for a bare region of target.bbox's size.

    A region qualifies when its binarized content is uniformly 0 and it
    overlaps none of the ``avoid`` boxes (pass every detection box so patches
    never sample from under another component). The first qualifying origin
    in row-major order is chosen, so results are deterministic. Raises
    :class:`PatchNotFoundError` when no such region exists.
    """
    w, h = target.bbox.w, target.bbox.h
    if w > img.width or h > img.height:
        raise PatchNotFoundError(
            f"no bare {w}x{h} region can exist in a {img.width}x{img.height} image "
            f"for {target.component.label} at {target.bbox.to_dict()}"
        )
    forbidden = binarize(img, binarize_threshold).pixels == 255
    for box in list(avoid) + [target.bbox]:
        clipped = box.clip(img.width, img.height)
        if clipped is not None:
            forbidden[clipped.y : clipped.y2, clipped.x : clipped.x2] = True

    # Integral image: window sum == 0 <=> every pixel in the window is free.
    integral = np.zeros((img.height + 1, img.width + 1), dtype=np.int64)
    integral[1:, 1:] = forbidden.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    window = (
        integral[h:, w:]
        - integral[:-h, w:]
        - integral[h:, :-w]
        + integral[:-h, :-w]
    )
    free = np.argwhere(window == 0)
    if free.size == 0:
        raise PatchNotFoundError(
            f"no bare {w}x{h} region found for {target.component.label} "
            f"at {target.bbox.to_dict()}"
        )
    y, x = free[0]
    return FaultSpec(target=target, patch_origin=PixelCoord(int(x), int(y)))


def fixed_patch(origin: PixelCoord) -> PatchFinder:
    """Patch finder that always samples from one user-chosen rectangle.

    The returned finder anchors every patch at ``origin``; bounds and overlap
    are still validated at injection time.
    """

    def finder(img: RasterImage, target: Detection, avoid: Sequence[BBox]) -> FaultSpec:
        return FaultSpec(target=target, patch_origin=origin)

    return finder


def inject_faults(img: RasterImage, specs: Sequence[FaultSpec]) -> RasterImage:
    """Apply several erasures; every patch samples from the original image."""
    for spec in specs:
        _validate_spec(img, spec)
    out = np.array(img.pixels)
    for spec in specs:
        target = spec.target.bbox
        px, py = spec.patch_origin
        out[target.y : target.y2, target.x : target.x2] = img.pixels[
            py : py + target.h, px : px + target.w
        ]
    return RasterImage(out)


def _sample_combos(n: int, k: int, count: int, seed: int | None) -> list[tuple[int, ...]]:
    rng = random.Random(seed)
    seen: set[tuple[int, ...]] = set()
    while len(seen) < count:
        combo = tuple(sorted(rng.sample(range(n), k)))
        seen.add(combo)
    return sorted(seen)


def build_test_set(
    img: RasterImage,
    detections: Sequence[Detection],
    k: int,
    patch_finder: PatchFinder = find_bare_patch,
    *,
    seed: int | None = None,
    max_cases: int = MAX_CASES_PER_K,
) -> list[FaultCase]:
    """Generate test images each missing exactly k distinct components.

    All C(n, k) combinations are generated when there are at most
    ``max_cases`` of them; otherwise ``max_cases`` distinct combinations are
    sampled uniformly with the given seed. Each case carries the erased
    detections (in input order) as ground truth.
    """
    n = len(detections)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of detections ({n})")
    total = comb(n, k)
    if total <= max_cases:
        from itertools import combinations

        combos = list(combinations(range(n), k))
    else:
        combos = _sample_combos(n, k, max_cases, seed)

    avoid = [d.bbox for d in detections]
    cases: list[FaultCase] = []
    for combo in combos:
        specs = [patch_finder(img, detections[i], avoid) for i in combo]
        faulty = inject_faults(img, specs)
        cases.append(FaultCase(image=faulty, erased=tuple(detections[i] for i in combo)))
    return cases
