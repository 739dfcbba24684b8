"""Detection scoring: per-class TP/FP/FN accounting and accuracy.

Matching is the standard greedy one-to-one protocol, class-strict, at a
configurable IoU threshold (default 0.5). Accuracy per class is
100 * tp / (tp + fp + fn), reported at two decimals with half-away-from-zero
rounding. The aggregate row is sum(tp) / sum(total) over all classes.

``sse`` is the plain sum-of-squared-deviations series statistic, handy for
summarizing per-image diff-pixel counts or any other sample series.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Sequence

from .detect import ComponentClass, Detection, iou
from .errors import UndefinedAccuracyError

DEFAULT_MATCH_IOU = 0.5


@dataclass(frozen=True)
class ClassStats:
    """Confusion counts for one component class."""

    component: ComponentClass
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn

    def __add__(self, other: "ClassStats") -> "ClassStats":
        if not isinstance(other, ClassStats):
            return NotImplemented
        if other.component != self.component:
            raise ValueError(
                f"cannot sum stats for {self.component.label} and {other.component.label}"
            )
        return ClassStats(
            component=self.component,
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class SampleSeries:
    """A sample of real values with its size and mean."""

    values: tuple[float, ...]

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError("series must contain at least one value")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)


def sse(series: SampleSeries | Sequence[float]) -> float:
    """Sum of squared deviations from the mean: sum((x_i - mean)^2)."""
    if not isinstance(series, SampleSeries):
        series = SampleSeries(series)
    m = series.mean
    return sum((v - m) ** 2 for v in series.values)


def match_predictions(
    predicted: Sequence[Detection],
    truth: Sequence[Detection],
    iou_threshold: float = DEFAULT_MATCH_IOU,
) -> list[ClassStats]:
    """Greedy one-to-one matching of predictions against ground truth.

    Per class: predictions, taken in descending confidence (input order on
    ties), each claim the unmatched truth box of the same class with the
    highest IoU >= ``iou_threshold``. Matched pairs are TPs; leftover
    predictions are FPs; leftover truths are FNs. Returns one ClassStats per
    class present in either list, ordered by class id.
    """
    present = sorted(
        {d.component for d in predicted} | {d.component for d in truth},
        key=int,
    )
    out: list[ClassStats] = []
    for component in present:
        preds = [d for d in predicted if d.component == component]
        preds.sort(key=lambda d: -d.confidence)
        truths = [d for d in truth if d.component == component]
        matched = [False] * len(truths)
        tp = 0
        for p in preds:
            best_i = -1
            best_iou = 0.0
            for i, t in enumerate(truths):
                if matched[i]:
                    continue
                overlap = iou(p.bbox, t.bbox)
                if overlap >= iou_threshold and (best_i < 0 or overlap > best_iou):
                    best_i = i
                    best_iou = overlap
            if best_i >= 0:
                matched[best_i] = True
                tp += 1
        out.append(
            ClassStats(
                component=component,
                tp=tp,
                fp=len(preds) - tp,
                fn=matched.count(False),
            )
        )
    return out


def _round2(numerator: int, denominator: int) -> float:
    value = Decimal(numerator) / Decimal(denominator)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def class_accuracy(stats: ClassStats) -> float:
    """100 * tp / (tp + fp + fn), at two decimals (half away from zero)."""
    if stats.total == 0:
        raise UndefinedAccuracyError(
            f"accuracy undefined for {stats.component.label}: tp = fp = fn = 0"
        )
    return _round2(100 * stats.tp, stats.total)


def evaluation_report(stats: Sequence[ClassStats]) -> dict[str, Any]:
    """Confusion-table report: one row per class plus an aggregate row.

    Aggregate accuracy is 100 * sum(tp) / sum(total); None when there is
    nothing to score.
    """
    rows = []
    for s in stats:
        rows.append(
            {
                "class": s.component.label,
                "tp": s.tp,
                "fp": s.fp,
                "fn": s.fn,
                "total": s.total,
                "accuracy": class_accuracy(s) if s.total else None,
            }
        )
    sum_tp = sum(s.tp for s in stats)
    sum_total = sum(s.total for s in stats)
    aggregate = None
    if sum_total:
        aggregate = {
            "tp": sum_tp,
            "fp": sum(s.fp for s in stats),
            "fn": sum(s.fn for s in stats),
            "total": sum_total,
            "accuracy": _round2(100 * sum_tp, sum_total),
        }
    return {"classes": rows, "aggregate": aggregate}
