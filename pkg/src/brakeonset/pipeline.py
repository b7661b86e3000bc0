"""Per-event brake onset detection and batch execution."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateVarianceError,
    DuplicateEventIdError,
    EmptyGridError,
    EmptyWindowError,
    InvalidWindowError,
)
from .kinematics import (
    TIME_EPS,
    KinematicSeries,
    WindowStats,
    argmin_accel,
    quantize,
    slice_window,
    window_stats,
)
from .plm import GridConfig, PlmFit, build_grid, grid_search


class Outcome(str, enum.Enum):
    CRASH = "crash"
    NEAR_CRASH = "near_crash"


class AgentType(str, enum.Enum):
    PASSENGER_CAR = "passenger_car"
    MOTORCYCLE = "motorcycle"
    BICYCLE = "bicycle"
    MICROMOBILITY = "micromobility"
    PEDESTRIAN = "pedestrian"


class AnnotationKind(str, enum.Enum):
    BRAKE_ONSET = "brake_onset"
    NO_BRAKING = "no_braking"
    NO_RESPONSE = "no_response"


class MissingReason(str, enum.Enum):
    NO_MODEL_OUTPUT = "no_model_output"
    EMPTY_WINDOW = "empty_window"
    DEGENERATE_SIGNAL = "degenerate_signal"
    # assigned by the loader, never by detection
    INCOMPLETE_SERIES = "incomplete_series"


@dataclass(frozen=True)
class Annotation:
    """Manual ground truth: a brake onset time, or a no-braking/no-response label."""

    kind: AnnotationKind
    t: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", AnnotationKind(self.kind))
        if self.kind is AnnotationKind.BRAKE_ONSET:
            if self.t is None or not math.isfinite(self.t):
                raise ValueError("brake_onset annotation needs a finite time")
        elif self.t is not None:
            raise ValueError(f"{self.kind.value} annotation carries no time")

    @classmethod
    def brake_onset(cls, t: float) -> "Annotation":
        return cls(AnnotationKind.BRAKE_ONSET, float(t))

    @classmethod
    def no_braking(cls) -> "Annotation":
        return cls(AnnotationKind.NO_BRAKING)

    @classmethod
    def no_response(cls) -> "Annotation":
        return cls(AnnotationKind.NO_RESPONSE)


@dataclass(frozen=True)
class ConflictEvent:
    """One crash or near-crash with the responder's acceleration series.

    ``t1`` is the externally annotated stimulus onset that anchors the fit
    window.  Any other anchor (minimum TTC, PET, ...) can be passed in its
    place.
    """

    event_id: str
    series: KinematicSeries
    t1: float
    outcome: Outcome = Outcome.NEAR_CRASH
    crash_time: Optional[float] = None
    agent_type: AgentType = AgentType.PASSENGER_CAR
    scenario_type: str = ""
    annotation: Optional[Annotation] = None

    def __post_init__(self):
        object.__setattr__(self, "outcome", Outcome(self.outcome))
        object.__setattr__(self, "agent_type", AgentType(self.agent_type))
        s = self.series
        if not (s.t_first - TIME_EPS <= self.t1 <= s.t_last + TIME_EPS):
            raise ValueError(f"{self.event_id}: t1={self.t1} outside series [{s.t_first}, {s.t_last}]")
        if self.outcome is Outcome.CRASH:
            if self.crash_time is None:
                raise ValueError(f"{self.event_id}: crash event needs crash_time")
            if not self.crash_time > self.t1:
                raise ValueError(f"{self.event_id}: crash_time must be after t1")
        elif self.crash_time is not None:
            raise ValueError(f"{self.event_id}: crash_time given for a near-crash")
        ann = self.annotation
        if ann is not None and ann.kind is AnnotationKind.BRAKE_ONSET:
            if not (s.t_first - TIME_EPS <= ann.t <= s.t_last + TIME_EPS):
                raise ValueError(f"{self.event_id}: annotated onset outside series")


@dataclass(frozen=True)
class WindowConfig:
    pre_offset: float = 1.0
    horizon: float = 4.0
    crash_cutoff: float = 0.2


@dataclass(frozen=True)
class Config:
    window: WindowConfig = field(default_factory=WindowConfig)
    grid: GridConfig = field(default_factory=GridConfig)


@dataclass(frozen=True)
class OnsetResult:
    """Detection outcome for one event.

    Exactly one of ``fit`` and ``missing`` is set.  ``a_min`` is the minimum
    acceleration over the fit window whenever that window could be located,
    including for some missing outcomes.
    """

    event_id: str
    fit: Optional[PlmFit] = None
    window: Optional[tuple[float, float]] = None
    stats: Optional[WindowStats] = None
    missing: Optional[MissingReason] = None
    a_min: Optional[float] = None
    detail: str = ""

    def __post_init__(self):
        if (self.fit is None) == (self.missing is None):
            raise ValueError("exactly one of fit and missing must be set")
        if self.fit is not None:
            t_start, t_end = self.window
            if not (t_start - TIME_EPS <= self.fit.params.t_B <= t_end + TIME_EPS):
                raise ValueError("t_B outside the fit window")

    @property
    def is_missing(self) -> bool:
        return self.missing is not None

    @property
    def t_B(self) -> Optional[float]:
        return None if self.fit is None else self.fit.params.t_B


def _search_interval(event: ConflictEvent, cfg: WindowConfig) -> tuple[float, float]:
    s = event.series
    t_start = quantize(max(event.t1 - cfg.pre_offset, s.t_first))
    if event.outcome is Outcome.CRASH:
        hi = event.crash_time - cfg.crash_cutoff
    else:
        hi = event.t1 + cfg.horizon
    return t_start, quantize(min(hi, s.t_last))


def _search_slice(event, cfg):
    t_start, hi = _search_interval(event, cfg)
    if not hi > t_start:
        raise EmptyWindowError(f"search interval [{t_start}, {hi}] is empty")
    return t_start, hi, slice_window(event.series, t_start, hi)


def fit_window(event: ConflictEvent, cfg: WindowConfig = WindowConfig()) -> tuple[float, float]:
    """Fit window ``(t_start, t_end)`` of an event.

    ``t_start`` is ``t1 - pre_offset``.  ``t_end`` is the earliest time of
    minimum acceleration within ``[t_start, t1 + horizon]`` for near-crashes
    or ``[t_start, crash_time - crash_cutoff]`` for crashes.  Both intervals
    are clipped to the recorded series.

    Raises
    ------
    EmptyWindowError
        If the search interval holds fewer than 2 samples.
    InvalidWindowError
        If the minimum sits at ``t_start``.
    """
    t_start, hi, _ = _search_slice(event, cfg)
    t_end, _ = argmin_accel(event.series, t_start, hi)
    if t_end <= t_start + TIME_EPS:
        raise InvalidWindowError(f"minimum acceleration at window start t={t_end}")
    return t_start, t_end


_REASONS = {
    EmptyWindowError: MissingReason.EMPTY_WINDOW,
    InvalidWindowError: MissingReason.EMPTY_WINDOW,
    EmptyGridError: MissingReason.NO_MODEL_OUTPUT,
    DegenerateVarianceError: MissingReason.DEGENERATE_SIGNAL,
}

Fitter = Callable[[KinematicSeries, object], PlmFit]


def detect_brake_onset(event: ConflictEvent, cfg: Config = Config(), fit: Fitter = grid_search) -> OnsetResult:
    """Estimate the brake onset of one event.

    Data-shaped failures are returned as a missing result rather than
    raised.  ``fit`` selects the searcher (``grid_search`` or
    ``oracle_fit``).
    """
    a_min = None
    try:
        _, _, search = _search_slice(event, cfg.window)
        a_min = float(np.min(search.a))
        if np.all(search.a == search.a[0]):
            raise DegenerateVarianceError("acceleration constant over the search interval")
        t_start, t_end = fit_window(event, cfg.window)
        stats = window_stats(event.series, t_start, t_end)
        grid = build_grid(stats, t_start, t_end, cfg.grid)
        result = fit(slice_window(event.series, t_start, t_end), grid)
    except tuple(_REASONS) as exc:
        return OnsetResult(
            event.event_id, missing=_REASONS[type(exc)], a_min=a_min, detail=str(exc)
        )
    return OnsetResult(
        event.event_id, fit=result, window=(t_start, t_end), stats=stats, a_min=stats.a_min
    )


def run_batch(
    events: Sequence[ConflictEvent],
    cfg: Config = Config(),
    workers: int = 1,
    fit: Fitter = grid_search,
) -> list[OnsetResult]:
    """Detect every event; results come back sorted by ``event_id``.

    With ``workers > 1`` events are fanned out to a process pool.  Each
    event is computed independently, so the output does not depend on the
    worker count.
    """
    seen = set()
    for ev in events:
        if ev.event_id in seen:
            raise DuplicateEventIdError(ev.event_id)
        seen.add(ev.event_id)
    job = partial(detect_brake_onset, cfg=cfg, fit=fit)
    if workers > 1 and len(events) > 1:
        chunk = max(1, len(events) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, events, chunksize=chunk))
    else:
        results = [job(ev) for ev in events]
    return sorted(results, key=lambda r: r.event_id)
