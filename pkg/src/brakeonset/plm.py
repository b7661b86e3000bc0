"""Two-piece piecewise linear acceleration model and its grid search.

The model holds acceleration at ``a0`` until the brake onset ``t_B`` and then
decreases it linearly with jerk ``j_B``::

    a(t) = a0                       for t <  t_B
    a(t) = a0 + j_B * (t - t_B)     for t >= t_B

Fits are ranked by R² evaluated at the sample timestamps.  Two searchers are
provided: :func:`grid_search`, vectorised over the (j_B, a0) plane for each
onset candidate, and :func:`oracle_fit`, a plain triple loop kept as an
independent check.  Both sum squared residuals strictly left to right, so
they agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateVarianceError, EmptyGridError
from .kinematics import TIME_EPS, KinematicSeries, WindowStats, quantize


@dataclass(frozen=True)
class PlmParams:
    """Model triple: initial acceleration (m/s²), onset time (s), jerk (m/s³)."""

    a0: float
    t_B: float
    j_B: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a0, self.t_B, self.j_B)):
            raise ValueError(f"non-finite model parameters: {self}")
        if self.j_B > 0:
            raise ValueError(f"j_B must be <= 0, got {self.j_B}")


@dataclass(frozen=True)
class PlmFit:
    params: PlmParams
    r2: float


@dataclass(frozen=True)
class GridConfig:
    """Widths and steps of the per-event search grid.

    ``a0`` spans ``a_max ± a0_halfwidth``, ``t_B`` spans the fit window and
    ``j_B`` spans ``[j_min - jb_margin, 0]``.
    """

    a0_halfwidth: float = 1.0
    a0_step: float = 0.1
    tb_step: float = 0.1
    jb_margin: float = 5.0
    jb_step: float = 0.2

    def __post_init__(self):
        for name in ("a0_step", "tb_step", "jb_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a0_halfwidth < 0:
            raise ValueError("a0_halfwidth must be non-negative")


@dataclass(frozen=True)
class GridSpec:
    a0_values: tuple[float, ...]
    tB_values: tuple[float, ...]
    jB_values: tuple[float, ...]

    def __post_init__(self):
        for name in ("a0_values", "tB_values", "jB_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise EmptyGridError(f"grid axis {name} is empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"grid axis {name} must be strictly increasing")
            object.__setattr__(self, name, vals)
        if self.jB_values[-1] > 0:
            raise ValueError("jB_values must be <= 0")

    @property
    def size(self) -> int:
        return len(self.a0_values) * len(self.tB_values) * len(self.jB_values)


def plm_predict(params: PlmParams, t):
    """Model acceleration at time(s) ``t``; accepts a scalar or an array."""
    if np.ndim(t) == 0:
        if t < params.t_B:
            return params.a0
        return params.a0 + params.j_B * (t - params.t_B)
    t = np.asarray(t, dtype=float)
    return np.where(t < params.t_B, params.a0, params.a0 + params.j_B * (t - params.t_B))


def _sequential_sum(x: np.ndarray):
    # Left-to-right accumulation (np.sum is pairwise), matching a plain loop.
    return np.cumsum(x, axis=-1)[..., -1]


def _total_sum_of_squares(a: np.ndarray) -> float:
    if a[0] == a[-1] and np.all(a == a[0]):
        raise DegenerateVarianceError("acceleration is constant; R² undefined")
    mean = _sequential_sum(a) / a.size
    d = a - mean
    ss_tot = float(_sequential_sum(d * d))
    if ss_tot == 0:
        raise DegenerateVarianceError("acceleration variance underflows to zero")
    return ss_tot


def r_squared(params: PlmParams, series: KinematicSeries) -> float:
    """Coefficient of determination of the model on ``series``.

    Not clamped: fits worse than the sample mean give negative values.

    Raises
    ------
    DegenerateVarianceError
        If every acceleration sample is equal.
    """
    ss_tot = _total_sum_of_squares(series.a)
    resid = series.a - plm_predict(params, series.t)
    return 1.0 - float(_sequential_sum(resid * resid)) / ss_tot


def _axis(lo: float, hi: float, step: float) -> tuple[float, ...]:
    if hi < lo - TIME_EPS:
        return ()
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(quantize(lo + k * step) for k in range(n))


def build_grid(stats: WindowStats, t_start: float, t_end: float, cfg: GridConfig = GridConfig()) -> GridSpec:
    """Per-event search grid centred on the fit-window kinematics.

    Every axis is anchored at its lower bound (``a_max - halfwidth``,
    ``t_start``, ``j_min - margin``) and stepped upward; nodes are rounded to
    nanosecond/nano-unit resolution.  ``j_B`` nodes above zero are dropped.

    Raises
    ------
    EmptyGridError
        If an axis has no admissible value, e.g. ``j_min - margin > 0``.
    """
    if not t_start < t_end:
        raise ValueError(f"t_start must be < t_end, got [{t_start}, {t_end}]")
    a0 = _axis(stats.a_max - cfg.a0_halfwidth, stats.a_max + cfg.a0_halfwidth, cfg.a0_step)
    tb = _axis(t_start, t_end, cfg.tb_step)
    jb = tuple(v for v in _axis(stats.j_min - cfg.jb_margin, 0.0, cfg.jb_step) if v <= 0.0)
    if not jb:
        raise EmptyGridError(
            f"no j_B value in [{stats.j_min - cfg.jb_margin:.4g}, 0] (j_min={stats.j_min:.4g})"
        )
    return GridSpec(a0, tb, jb)


def grid_search(series: KinematicSeries, grid: GridSpec) -> PlmFit:
    """Exhaustive search of ``grid`` for the triple with the highest R².

    Ties are resolved toward the earliest ``t_B``, then the most negative
    ``j_B``, then the smallest ``a0``.
    """
    t, a = series.t, series.a
    ss_tot = _total_sum_of_squares(a)
    a0 = np.asarray(grid.a0_values)
    jb = np.asarray(grid.jB_values)
    n_a0 = a0.size

    best_r2, best = -math.inf, None
    for tb in grid.tB_values:
        before = t < tb
        ramp = jb[:, None] * (t - tb)[None, :]                      # (jB, n)
        pred = a0[None, :, None] + ramp[:, None, :]                 # (jB, a0, n)
        pred = np.where(before, a0[None, :, None], pred)
        resid = a - pred
        r2 = 1.0 - _sequential_sum(resid * resid) / ss_tot          # (jB, a0)
        k = int(np.argmax(r2))  # first maximum in (jB, a0) row-major order
        if r2.flat[k] > best_r2:
            best_r2 = float(r2.flat[k])
            best = (float(a0[k % n_a0]), tb, float(jb[k // n_a0]))
    return PlmFit(PlmParams(*best), best_r2)


def oracle_fit(series: KinematicSeries, grid: GridSpec) -> PlmFit:
    """Brute-force reference for :func:`grid_search`; no vectorisation or reuse."""
    for axis in (grid.a0_values, grid.tB_values, grid.jB_values):
        if len(axis) == 0:
            raise EmptyGridError("grid axis is empty")
    ts = [float(v) for v in series.t]
    acc = [float(v) for v in series.a]
    if all(v == acc[0] for v in acc):
        raise DegenerateVarianceError("acceleration is constant; R² undefined")
    total = 0.0
    for v in acc:
        total += v
    mean = total / len(acc)
    ss_tot = 0.0
    for v in acc:
        ss_tot += (v - mean) * (v - mean)
    if ss_tot == 0:
        raise DegenerateVarianceError("acceleration variance underflows to zero")

    best_r2, best = -math.inf, None
    for t_B in grid.tB_values:
        for j_B in grid.jB_values:
            for a0 in grid.a0_values:
                ss_res = 0.0
                for t_i, a_i in zip(ts, acc):
                    if t_i < t_B:
                        pred = a0
                    else:
                        pred = a0 + j_B * (t_i - t_B)
                    r = a_i - pred
                    ss_res += r * r
                r2 = 1.0 - ss_res / ss_tot
                if r2 > best_r2:
                    best_r2, best = r2, (a0, t_B, j_B)
    return PlmFit(PlmParams(*best), best_r2)


def grid_values(grid: GridSpec) -> Sequence[PlmParams]:
    """All grid points as parameter triples, in tie-break order."""
    return [
        PlmParams(a0, tb, jb)
        for tb in grid.tB_values
        for jb in grid.jB_values
        for a0 in grid.a0_values
    ]
