"""Longitudinal acceleration series and the signal primitives used to set up a fit.

Sign convention: deceleration is negative.  No smoothing is applied anywhere;
callers that want filtered data must filter before constructing a series.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import EmptyWindowError, SeriesError

# Times are compared with this slack so that values such as 0.30000000000000004
# read from text still land in the window [0.3, ...].
TIME_EPS = 1e-9
# Derived times (window bounds, grid nodes) are rounded to this many decimals.
TIME_DECIMALS = 9

DEFAULT_STEP_TOLERANCE = 0.2


def quantize(x: float) -> float:
    """Round a derived time or grid value to nanosecond resolution."""
    return round(float(x), TIME_DECIMALS)


@dataclass(frozen=True, eq=False)
class KinematicSeries:
    """Timestamped longitudinal acceleration of one road user.

    Parameters
    ----------
    t : array-like
        Sample times in seconds, strictly increasing.
    a : array-like
        Longitudinal acceleration in m/s².
    step_tolerance : float, optional
        Largest allowed relative deviation of any sampling step from the
        median step.  Non-uniform logs are rejected, never resampled.
    """

    t: np.ndarray
    a: np.ndarray
    step_tolerance: float = DEFAULT_STEP_TOLERANCE
    nominal_dt: float = field(init=False)

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        a = np.array(self.a, dtype=float)
        if t.ndim != 1 or a.ndim != 1 or t.shape != a.shape:
            raise SeriesError("t and a must be 1-D arrays of equal length")
        if t.size < 2:
            raise SeriesError(f"need at least 2 samples, got {t.size}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise SeriesError("series contains non-finite values")
        steps = np.diff(t)
        if np.any(steps <= 0):
            i = int(np.argmax(steps <= 0))
            raise SeriesError(f"timestamps not strictly increasing at index {i + 1}")
        dt = float(np.median(steps))
        worst = float(np.max(np.abs(steps - dt)))
        if worst > self.step_tolerance * dt + TIME_EPS:
            raise SeriesError(
                f"non-uniform sampling: step deviates {worst:.6g} s from nominal {dt:.6g} s"
            )
        t.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "nominal_dt", dt)

    @classmethod
    def from_samples(cls, samples: Iterable[tuple[float, float]], **kwargs) -> "KinematicSeries":
        pairs = list(samples)
        return cls([p[0] for p in pairs], [p[1] for p in pairs], **kwargs)

    def __len__(self):
        return int(self.t.size)

    def __eq__(self, other):
        if not isinstance(other, KinematicSeries):
            return NotImplemented
        return np.array_equal(self.t, other.t) and np.array_equal(self.a, other.a)

    def __hash__(self):
        return hash((self.t.tobytes(), self.a.tobytes()))

    @property
    def t_first(self) -> float:
        return float(self.t[0])

    @property
    def t_last(self) -> float:
        return float(self.t[-1])

    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.a.tolist()))


@dataclass(frozen=True)
class WindowStats:
    """Extrema of a fit window used to centre the search grid."""

    a_max: float
    a_min: float
    t_of_a_min: float
    j_min: float
    sample_count: int


def _mask(series: KinematicSeries, t_lo: float, t_hi: float) -> np.ndarray:
    return (series.t >= t_lo - TIME_EPS) & (series.t <= t_hi + TIME_EPS)


def slice_window(series: KinematicSeries, t_lo: float, t_hi: float) -> KinematicSeries:
    """Return the samples with ``t_lo <= t <= t_hi`` (both ends inclusive)."""
    if not t_lo < t_hi:
        raise ValueError(f"t_lo must be < t_hi, got [{t_lo}, {t_hi}]")
    m = _mask(series, t_lo, t_hi)
    if int(m.sum()) < 2:
        raise EmptyWindowError(f"fewer than 2 samples in [{t_lo}, {t_hi}]")
    if m.all():
        return series
    return KinematicSeries(series.t[m], series.a[m], step_tolerance=series.step_tolerance)


def _window_values(series, t_lo, t_hi):
    m = _mask(series, t_lo, t_hi)
    if not m.any():
        raise EmptyWindowError(f"no samples in [{t_lo}, {t_hi}]")
    return series.t[m], series.a[m]


def argmin_accel(series: KinematicSeries, t_lo: float, t_hi: float) -> tuple[float, float]:
    """Earliest sample attaining the minimum acceleration in ``[t_lo, t_hi]``.

    Returns
    -------
    (t, a) : tuple of float
    """
    t, a = _window_values(series, t_lo, t_hi)
    i = int(np.argmin(a))  # np.argmin returns the first occurrence
    return float(t[i]), float(a[i])


def max_accel(series: KinematicSeries, t_lo: float, t_hi: float) -> float:
    _, a = _window_values(series, t_lo, t_hi)
    return float(np.max(a))


def jerk_series(series: KinematicSeries) -> list[tuple[float, float]]:
    """Forward-difference jerk ``(a[i+1] - a[i]) / (t[i+1] - t[i])`` reported at ``t[i]``."""
    j = np.diff(series.a) / np.diff(series.t)
    return list(zip(series.t[:-1].tolist(), j.tolist()))


def min_jerk(series: KinematicSeries, t_lo: float, t_hi: float) -> float:
    """Minimum jerk computed on the slice ``[t_lo, t_hi]`` alone.

    Only in-window samples enter the differences, so the last in-window
    sample contributes no jerk of its own.
    """
    window = slice_window(series, t_lo, t_hi)
    return float(np.min(np.diff(window.a) / np.diff(window.t)))


def window_stats(series: KinematicSeries, t_lo: float, t_hi: float) -> WindowStats:
    window = slice_window(series, t_lo, t_hi)
    t_min, a_min = argmin_accel(window, t_lo, t_hi)
    return WindowStats(
        a_max=max_accel(window, t_lo, t_hi),
        a_min=a_min,
        t_of_a_min=t_min,
        j_min=min_jerk(window, t_lo, t_hi),
        sample_count=len(window),
    )
