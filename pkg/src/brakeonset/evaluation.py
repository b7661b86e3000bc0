"""Agreement between estimated and annotated onsets, and R² as a confidence score.

Deviations are ``estimate - annotation`` in seconds: positive means the
model placed the onset later than the annotator.  An event is *actually
positive* when ``|deviation| <= diff_threshold`` and *predicted positive*
when ``R² >= r2_threshold``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateVarianceError, UndefinedRateError
from .kinematics import quantize
from .pipeline import Annotation, AnnotationKind, MissingReason, OnsetResult

DEFAULT_DIFF_THRESHOLD = 0.3
UPPER_DIFF_THRESHOLD = 0.5


class MissingDeviation(str, enum.Enum):
    NO_MODEL_OUTPUT = "no_model_output"
    NO_BRAKING_ANNOTATION = "model_output_but_no_braking_annotation"
    NO_RESPONSE_ANNOTATION = "no_response_annotation"
    INCOMPLETE_SERIES = "incomplete_series"


@dataclass(frozen=True)
class Deviation:
    event_id: str
    value: Optional[float] = None
    missing: Optional[MissingDeviation] = None

    def __post_init__(self):
        if (self.value is None) == (self.missing is None):
            raise ValueError("exactly one of value and missing must be set")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError("deviation must be finite")

    @property
    def is_missing(self) -> bool:
        return self.missing is not None


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def tpr(self) -> float:
        if self.tp + self.fn == 0:
            raise UndefinedRateError("no actual positives")
        return self.tp / (self.tp + self.fn)

    @property
    def fpr(self) -> float:
        if self.fp + self.tn == 0:
            raise UndefinedRateError("no actual negatives")
        return self.fp / (self.fp + self.tn)


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float, float], ...]  # (threshold, fpr, tpr)
    auc: float


def deviation(result: OnsetResult, annotation: Annotation) -> Deviation:
    """Signed onset deviation, or the reason it cannot be computed.

    Values are rounded to nanoseconds so that, for example, 2.1 - 1.8 is
    exactly 0.3 and lands on the correct side of a 0.3 s threshold.
    """
    eid = result.event_id
    if result.is_missing:
        if result.missing is MissingReason.INCOMPLETE_SERIES:
            return Deviation(eid, missing=MissingDeviation.INCOMPLETE_SERIES)
        return Deviation(eid, missing=MissingDeviation.NO_MODEL_OUTPUT)
    if annotation.kind is AnnotationKind.NO_BRAKING:
        return Deviation(eid, missing=MissingDeviation.NO_BRAKING_ANNOTATION)
    if annotation.kind is AnnotationKind.NO_RESPONSE:
        return Deviation(eid, missing=MissingDeviation.NO_RESPONSE_ANNOTATION)
    return Deviation(eid, value=quantize(result.t_B - annotation.t))


def _numeric_pairs(devs: Sequence[Deviation], r2s: Sequence[Optional[float]]):
    if len(devs) != len(r2s):
        raise ValueError("devs and r2s must have equal length")
    pairs = [(abs(d.value), r2) for d, r2 in zip(devs, r2s) if not d.is_missing]
    if any(r2 is None for _, r2 in pairs):
        raise ValueError("numeric deviation without an R² value")
    return pairs


def classify(
    devs: Sequence[Deviation],
    r2s: Sequence[Optional[float]],
    diff_threshold: float = DEFAULT_DIFF_THRESHOLD,
    r2_threshold: float = 0.5,
) -> ConfusionCounts:
    """Confusion counts of the R² classifier; missing deviations are skipped."""
    if not diff_threshold > 0:
        raise ValueError("diff_threshold must be positive")
    tp = fn = fp = tn = 0
    for absdev, r2 in _numeric_pairs(devs, r2s):
        small = absdev <= diff_threshold
        predicted = r2 >= r2_threshold
        if small and predicted:
            tp += 1
        elif small:
            fn += 1
        elif predicted:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fn, fp, tn)


def threshold_sweep(step: float = 0.1, lo: float = 0.0, hi: float = 1.0) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(n)]


def roc_curve(
    devs: Sequence[Deviation],
    r2s: Sequence[Optional[float]],
    diff_threshold: float = DEFAULT_DIFF_THRESHOLD,
    thresholds: Optional[Sequence[float]] = None,
) -> RocCurve:
    """ROC of R² over a threshold sweep, with trapezoidal AUC.

    The AUC integrates the swept points sorted by FPR, padded with (0, 0)
    and (1, 1).  A coarse sweep can therefore underestimate the area when
    classes are only separable between two sweep values.

    Raises
    ------
    UndefinedRateError
        If there are no actual positives or no actual negatives.
    """
    if thresholds is None:
        thresholds = threshold_sweep()
    points = []
    for th in sorted(thresholds):
        c = classify(devs, r2s, diff_threshold, th)
        points.append((float(th), c.fpr, c.tpr))
    return RocCurve(tuple(points), _trapezoid_auc([(f, t) for _, f, t in points]))


def _trapezoid_auc(xy: Iterable[tuple[float, float]]) -> float:
    pts = sorted(set(xy) | {(0.0, 0.0), (1.0, 1.0)})
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("x and y must be 1-D with equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateVarianceError("correlation undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def amin_filter(entries: Iterable[tuple[str, Optional[float]]], threshold: float) -> list[str]:
    """Event ids whose windowed minimum acceleration is ``>= threshold``.

    Such shallow minima usually mean the responder did not brake.  Entries
    without a windowed minimum are never flagged.
    """
    if threshold >= 0:
        warnings.warn(f"a_min threshold {threshold} is not negative", stacklevel=2)
    return [eid for eid, a_min in entries if a_min is not None and a_min >= threshold]


@dataclass(frozen=True)
class Histogram:
    bins: tuple[tuple[float, float, int], ...]
    share_within_03: Optional[float]
    share_within_05: Optional[float]


def share_within(values: Sequence[float], limit: float) -> Optional[float]:
    if len(values) == 0:
        return None
    return sum(1 for v in values if abs(v) <= limit) / len(values)


def deviation_histogram(devs: Sequence[Deviation], bin_width: float = 0.1) -> Histogram:
    """Zero-centred histogram with half-open bins ``[(k - 1/2) w, (k + 1/2) w)``."""
    vals = [d.value for d in devs if not d.is_missing]
    if not vals:
        return Histogram((), None, None)
    ks = [math.floor(v / bin_width + 0.5) for v in vals]
    lo, hi = min(ks), max(ks)
    counts = [0] * (hi - lo + 1)
    for k in ks:
        counts[k - lo] += 1
    bins = tuple(
        (round((k - 0.5) * bin_width, 9), round((k + 0.5) * bin_width, 9), counts[k - lo])
        for k in range(lo, hi + 1)
    )
    return Histogram(bins, share_within(vals, 0.3), share_within(vals, 0.5))


@dataclass(frozen=True)
class EvalConfig:
    diff_threshold: float = DEFAULT_DIFF_THRESHOLD
    r2_threshold: float = 0.5
    roc_step: float = 0.1
    bin_width: float = 0.1
    amin_threshold: Optional[float] = None


@dataclass(frozen=True)
class EvalReport:
    """Aggregate agreement metrics over a batch.

    ``roc`` and ``pearson`` are ``None`` when undefined for the batch (one
    empty class, fewer than two numeric deviations, constant inputs).
    """

    deviations: tuple[Deviation, ...]
    histogram: Histogram
    confusion: ConfusionCounts
    roc: Optional[RocCurve]
    pearson: Optional[float]
    amin_flagged: tuple[str, ...]


def evaluate_batch(results: Sequence[OnsetResult], annotations, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Deviations and confidence metrics for the annotated subset of ``results``.

    ``annotations`` maps event ids to :class:`Annotation`; unannotated
    events get no deviation.  Missing deviations are listed but excluded
    from every aggregate.
    """
    annotated = [r for r in results if annotations.get(r.event_id) is not None]
    devs = [deviation(r, annotations[r.event_id]) for r in annotated]
    r2s = [None if r.fit is None else r.fit.r2 for r in annotated]
    numeric = [(abs(d.value), r2) for d, r2 in zip(devs, r2s) if not d.is_missing]

    try:
        roc = roc_curve(devs, r2s, cfg.diff_threshold, threshold_sweep(cfg.roc_step))
    except UndefinedRateError:
        roc = None
    try:
        pearson = pearson_r([r2 for _, r2 in numeric], [d for d, _ in numeric])
    except (DegenerateVarianceError, ValueError):
        pearson = None
    flagged = ()
    if cfg.amin_threshold is not None:
        flagged = tuple(amin_filter(((r.event_id, r.a_min) for r in results), cfg.amin_threshold))
    return EvalReport(
        deviations=tuple(devs),
        histogram=deviation_histogram(devs, cfg.bin_width),
        confusion=classify(devs, r2s, cfg.diff_threshold, cfg.r2_threshold),
        roc=roc,
        pearson=pearson,
        amin_flagged=flagged,
    )
