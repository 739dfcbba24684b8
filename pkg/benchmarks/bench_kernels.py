"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py  [--size N] [--boxes N] [--repeats N]

Times the per-box diff-pixel scan and the greedy NMS suppression loop on a
synthetic workload sized like a real inspection run (megapixel mask, hundreds
of boxes). The active default backend is whatever PCBAOI_BACKEND resolves to;
both implementations are imported directly so one process measures both.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pcbaoi import _kernels
from pcbaoi._kernels import _numpy_box_scan, _numpy_nms_keep


def make_workload(size: int, n_boxes: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    mask = np.ascontiguousarray(rng.random((size, size)) < 0.005)
    xy = rng.integers(0, size - 64, size=(n_boxes, 2))
    wh = rng.integers(8, 64, size=(n_boxes, 2))
    boxes = np.column_stack([xy, xy + wh]).astype(np.int64)
    classes = rng.integers(0, 4, size=n_boxes).astype(np.int64)
    order = np.argsort(rng.random(n_boxes)).astype(np.int64)
    return mask, boxes, classes, order


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=1536, help="mask side length in pixels")
    parser.add_argument("--boxes", type=int, default=400, help="number of boxes")
    parser.add_argument("--repeats", type=int, default=5, help="timed repeats (best-of)")
    args = parser.parse_args()

    mask, boxes, classes, order = make_workload(args.size, args.boxes)
    print(f"workload: {args.size}x{args.size} mask, {args.boxes} boxes, best of {args.repeats}")
    print(f"default backend: {_kernels.backend()}")
    print()

    rows = [("box_scan numpy", lambda: _numpy_box_scan(mask, boxes, 1))]
    if _kernels._NUMBA_AVAILABLE:
        from pcbaoi._kernels import _numba_box_scan, _numba_nms_keep  # type: ignore[attr-defined]

        _numba_box_scan(mask[:8, :8].copy(), boxes[:1], 1)  # compile outside the clock
        _numba_nms_keep(boxes[:1], classes[:1], order[:1], 0.5)
        rows.append(("box_scan numba", lambda: _numba_box_scan(mask, boxes, 1)))
        ref = _numpy_box_scan(mask, boxes, 1)
        assert np.array_equal(ref, _numba_box_scan(mask, boxes, 1)), "backends disagree"
    else:
        print("numba not importable; timing the numpy path only")

    rows.append(("nms_keep numpy", lambda: _numpy_nms_keep(boxes, classes, order, 0.45)))
    if _kernels._NUMBA_AVAILABLE:
        rows.append(("nms_keep numba", lambda: _numba_nms_keep(boxes, classes, order, 0.45)))

    results = {name: best_of(fn, args.repeats) for name, fn in rows}
    width = max(len(name) for name in results)
    for name, elapsed in results.items():
        print(f"{name:<{width}}  {elapsed * 1e3:9.2f} ms")
    for op in ("box_scan", "nms_keep"):
        np_t = results.get(f"{op} numpy")
        nb_t = results.get(f"{op} numba")
        if np_t and nb_t:
            print(f"{op}: numba is {np_t / nb_t:.1f}x the numpy path")


if __name__ == "__main__":
    main()
