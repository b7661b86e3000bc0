"""Synthetic conflict events with known brake onsets.

Braking events follow a constant level, a single linear ramp and then a
plateau.  The ramp samples are produced by :func:`plm_predict` itself, so a
noiseless event whose parameters lie on the search grid is fitted with zero
residual.  Noise is i.i.d. Gaussian from ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kinematics import TIME_EPS, KinematicSeries, quantize
from .pipeline import AgentType, Annotation, ConflictEvent, Outcome
from .plm import PlmParams, plm_predict


@dataclass(frozen=True)
class SynthSpec:
    a0: float = 0.0
    t_B: float = 3.0
    j_B: float = -4.0
    ramp_duration: float = 1.0
    dt: float = 0.1
    total_duration: float = 10.0
    noise_sigma: float = 0.0
    t1: float = 2.0
    outcome: Outcome = Outcome.NEAR_CRASH
    crash_time: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.t_B <= self.total_duration:
            raise ValueError("t_B must lie within [0, total_duration]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.ramp_duration < 0:
            raise ValueError("ramp_duration must be non-negative")
        if self.j_B > 0:
            raise ValueError("j_B must be <= 0")


def _times(dt: float, total: float) -> np.ndarray:
    n = int(math.floor(total / dt + 1e-9)) + 1
    return np.array([quantize(i * dt) for i in range(n)])


def _noise(spec: SynthSpec, n: int) -> np.ndarray:
    if spec.noise_sigma == 0:
        return np.zeros(n)
    return np.random.default_rng(spec.seed).normal(0.0, spec.noise_sigma, n)


def ramp_profile(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free ``(t, a)`` of a single ramp followed by a plateau."""
    t = _times(spec.dt, spec.total_duration)
    a = plm_predict(PlmParams(spec.a0, spec.t_B, spec.j_B), t)
    on_ramp = t <= spec.t_B + spec.ramp_duration + TIME_EPS
    last = int(np.nonzero(on_ramp)[0][-1])
    a[last + 1:] = a[last]  # plateau repeats the final ramp sample exactly
    return t, a


def gen_ramp_event(spec: SynthSpec, event_id: str = "synth-00000", **meta) -> ConflictEvent:
    t, a = ramp_profile(spec)
    noise = _noise(spec, t.size)
    if spec.noise_sigma > 0:
        a = a + noise
    return ConflictEvent(
        event_id=event_id,
        series=KinematicSeries(t, a),
        t1=spec.t1,
        outcome=spec.outcome,
        crash_time=spec.crash_time,
        annotation=Annotation.brake_onset(spec.t_B),
        **meta,
    )


def gen_prelude_event(
    spec: SynthSpec,
    prelude_jerk: float,
    prelude_interval: tuple[float, float],
    event_id: str = "synth-00000",
    **meta,
) -> ConflictEvent:
    """Ramp event preceded by a mild slowdown that is held until the real ramp.

    The prelude lowers the acceleration by ``prelude_jerk`` m/s³ over
    ``prelude_interval`` and keeps the reached offset afterwards.  The
    annotation stays at the evasive onset ``spec.t_B``.
    """
    p0, p1 = prelude_interval
    if not p0 < p1:
        raise ValueError("prelude interval must have positive length")
    if p1 > spec.t_B + TIME_EPS:
        raise ValueError("prelude must end before the brake onset")
    if prelude_jerk > 0:
        raise ValueError("prelude_jerk must be <= 0")
    base = gen_ramp_event(spec, event_id, **meta)
    if prelude_jerk == 0:
        return base
    t = base.series.t
    offset = prelude_jerk * (np.clip(t, p0, p1) - p0)
    return replace(base, series=KinematicSeries(t, base.series.a + offset))


def gen_crash_spike(event: ConflictEvent, spike_accel: float = -100.0, spike_at: Optional[float] = None) -> ConflictEvent:
    """Overwrite every sample from ``spike_at`` on with ``spike_accel``.

    The event becomes a crash at ``spike_at`` (default: its existing crash
    time).  Returned unchanged when ``spike_at`` lies past the last sample.
    """
    if spike_at is None:
        spike_at = event.crash_time
    if spike_at is None:
        raise ValueError("spike_at required for a near-crash event")
    s = event.series
    if spike_at > s.t_last + TIME_EPS:
        return event
    a = s.a.copy()
    a[s.t >= spike_at - TIME_EPS] = spike_accel
    return replace(
        event,
        series=KinematicSeries(s.t, a, step_tolerance=s.step_tolerance),
        outcome=Outcome.CRASH,
        crash_time=spike_at,
    )


@dataclass(frozen=True)
class CorpusConfig:
    """Distributions for :func:`gen_corpus`.

    With ``in_grid`` the onset is placed on the default 0.1 s search grid
    (``t1 - 1 + k * 0.1``), which together with ``noise_sigma = 0`` makes
    every braking event exactly recoverable.
    """

    dt: float = 0.1
    total_duration: float = 10.0
    t1_range: tuple[float, float] = (1.5, 3.0)
    reaction_range: tuple[float, float] = (0.2, 1.5)
    a0_range: tuple[float, float] = (-0.5, 0.5)
    jb_range: tuple[float, float] = (-10.0, -1.0)
    ramp_range: tuple[float, float] = (0.5, 1.5)
    noise_sigma: float = 0.0
    crash_fraction: float = 0.0
    spike_accel: float = -100.0
    no_braking_fraction: float = 0.0
    no_response_fraction: float = 0.0
    null_sigma: float = 0.05
    in_grid: bool = True


def _snap(x: float, step: float) -> float:
    return quantize(round(x / step) * step)


def _null_event(eid, rng, cfg, label, agent):
    t = _times(cfg.dt, cfg.total_duration)
    level = float(rng.uniform(*cfg.a0_range))
    a = level + rng.normal(0.0, cfg.null_sigma, t.size)
    t1 = _snap(rng.uniform(*cfg.t1_range), cfg.dt)
    return ConflictEvent(eid, KinematicSeries(t, a), t1, agent_type=agent, scenario_type="synthetic", annotation=label)


def gen_corpus(n: int, cfg: CorpusConfig = CorpusConfig(), seed: int = 0) -> list[ConflictEvent]:
    """``n`` reproducible events with unique ids ``synth-00000``, ``synth-00001``, ..."""
    rng = np.random.default_rng(seed)
    agents = list(AgentType)
    events = []
    for i in range(n):
        eid = f"synth-{i:05d}"
        agent = agents[int(rng.integers(len(agents)))]
        u = rng.uniform()
        if u < cfg.no_braking_fraction:
            events.append(_null_event(eid, rng, cfg, Annotation.no_braking(), agent))
            continue
        if u < cfg.no_braking_fraction + cfg.no_response_fraction:
            events.append(_null_event(eid, rng, cfg, Annotation.no_response(), agent))
            continue
        t1 = _snap(rng.uniform(*cfg.t1_range), cfg.dt)
        reaction = rng.uniform(*cfg.reaction_range)
        if cfg.in_grid:
            t_B = quantize(t1 + _snap(reaction, 0.1))
            a0 = _snap(rng.uniform(*cfg.a0_range), 0.1)
            j_B = _snap(rng.uniform(*cfg.jb_range), 0.2)
        else:
            t_B = quantize(t1 + reaction)
            a0 = float(rng.uniform(*cfg.a0_range))
            j_B = float(rng.uniform(*cfg.jb_range))
        ramp = _snap(rng.uniform(*cfg.ramp_range), cfg.dt)
        crash = rng.uniform() < cfg.crash_fraction
        crash_time = quantize(t_B + ramp + 0.5) if crash else None
        spec = SynthSpec(
            a0=a0, t_B=t_B, j_B=j_B, ramp_duration=ramp, dt=cfg.dt,
            total_duration=cfg.total_duration, noise_sigma=cfg.noise_sigma, t1=t1,
            outcome=Outcome.CRASH if crash else Outcome.NEAR_CRASH,
            crash_time=crash_time, seed=int(rng.integers(2**31)),
        )
        ev = gen_ramp_event(spec, eid, agent_type=agent, scenario_type="synthetic")
        if crash:
            ev = gen_crash_spike(ev, cfg.spike_accel, crash_time)
        events.append(ev)
    return events
