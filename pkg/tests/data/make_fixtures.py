"""Regenerate the frozen fixtures in this directory.

Every expected value is produced with ``oracle_fit`` (the brute-force
searcher) in place of ``grid_search``, so the frozen numbers never come from
the code path they are later compared against.

    python tests/data/make_fixtures.py
"""
import dataclasses
import json
from pathlib import Path

from brakeonset.evaluation import EvalConfig, evaluate_batch
from brakeonset.formats import build_report, dumps_report
from brakeonset.pipeline import Config, detect_brake_onset, run_batch
from brakeonset.plm import oracle_fit
from brakeonset.synth import CorpusConfig, SynthSpec, gen_corpus, gen_crash_spike, gen_prelude_event

HERE = Path(__file__).parent

NOISY_CORPUS = dict(n=200, seed=2024, noise_sigma=0.2)
GOLDEN_CORPUS = dict(
    n=16, seed=7, noise_sigma=0.15, crash_fraction=0.25, no_braking_fraction=0.15, no_response_fraction=0.1
)
GOLDEN_EVAL = dict(amin_threshold=-0.3)
PRELUDE_SPEC = dict(a0=0.0, t_B=3.0, j_B=-4.0, ramp_duration=1.0, t1=2.5)
PRELUDE = dict(prelude_jerk=-0.5, prelude_interval=(1.5, 2.5))
EARLY_SPIKE = dict(spike_accel=-100.0, spike_at=3.5, crash_time=5.0)


def golden_corpus():
    n, seed = GOLDEN_CORPUS["n"], GOLDEN_CORPUS["seed"]
    cfg = CorpusConfig(**{k: v for k, v in GOLDEN_CORPUS.items() if k not in ("n", "seed")})
    return gen_corpus(n, cfg, seed)


def golden_report_text(fit):
    events = golden_corpus()
    results = run_batch(events, Config(), fit=fit)
    ecfg = EvalConfig(**GOLDEN_EVAL)
    metrics = evaluate_batch(results, {e.event_id: e.annotation for e in events}, ecfg)
    return dumps_report(build_report(results, metrics.deviations, metrics, {"corpus": GOLDEN_CORPUS}))


def main():
    cfg = CorpusConfig(noise_sigma=NOISY_CORPUS["noise_sigma"])
    events = gen_corpus(NOISY_CORPUS["n"], cfg, NOISY_CORPUS["seed"])
    results = run_batch(events, Config(), fit=oracle_fit)
    metrics = evaluate_batch(results, {e.event_id: e.annotation for e in events})
    devs = [d.value for d in metrics.deviations]
    n = len(devs)
    noisy = {
        **NOISY_CORPUS,
        "t_B": [r.t_B for r in results],
        "deviations": devs,
        "within_0_3": sum(abs(d) <= 0.3 for d in devs),
        "within_0_5": sum(abs(d) <= 0.5 for d in devs),
        "n_numeric": n,
    }

    spec = SynthSpec(**PRELUDE_SPEC)
    pre = detect_brake_onset(gen_prelude_event(spec, **PRELUDE), fit=oracle_fit)
    prelude = {"spec": PRELUDE_SPEC, **PRELUDE, "t_B": pre.t_B, "r2": pre.fit.r2}

    base = gen_prelude_event(SynthSpec(**PRELUDE_SPEC, noise_sigma=0.0), 0.0, (0.0, 1.0))
    crash = dataclasses.replace(base, outcome="crash", crash_time=EARLY_SPIKE["crash_time"])
    clean = detect_brake_onset(crash, fit=oracle_fit)
    # spike well before the recorded crash time, so the cutoff cannot remove it
    spiked_event = dataclasses.replace(
        gen_crash_spike(crash, EARLY_SPIKE["spike_accel"], EARLY_SPIKE["spike_at"]),
        crash_time=EARLY_SPIKE["crash_time"],
    )
    spiked = detect_brake_onset(spiked_event, fit=oracle_fit)
    early = {
        **EARLY_SPIKE,
        "clean": [clean.fit.params.t_B, clean.fit.params.j_B],
        "spiked": [spiked.fit.params.t_B, spiked.fit.params.j_B],
    }

    out = {"noisy_corpus": noisy, "prelude": prelude, "early_spike": early}
    (HERE / "oracle_fixtures.json").write_text(json.dumps(out, indent=1) + "\n")
    (HERE / "golden_report.json").write_text(golden_report_text(oracle_fit))


if __name__ == "__main__":
    main()
