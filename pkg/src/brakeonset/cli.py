"""Command-line interface.

Defaults can be overridden by a JSON file named in ``BRAKEONSET_CONFIG``;
command-line flags override both.

Exit codes: 0 success, 1 structural error, 2 success with per-event load
errors (counted in the report).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, fields

from . import formats
from .errors import BrakeOnsetError
from .evaluation import EvalConfig, evaluate_batch, threshold_sweep, roc_curve, deviation
from .pipeline import Config, WindowConfig, detect_brake_onset, run_batch
from .plm import GridConfig
from .synth import CorpusConfig, gen_corpus

log = logging.getLogger("brakeonset")

CONFIG_ENV = "BRAKEONSET_CONFIG"
EXIT_OK, EXIT_STRUCTURAL, EXIT_PARTIAL = 0, 1, 2

_SECTIONS = (WindowConfig, GridConfig, EvalConfig)


def _add_detection_flags(p):
    g = p.add_argument_group("fit window and grid")
    g.add_argument("--pre-offset", type=float, help="window start before t1, s (default 1.0)")
    g.add_argument("--horizon", type=float, help="near-crash search horizon after t1, s (default 4.0)")
    g.add_argument("--crash-cutoff", type=float, help="data dropped this long before a crash, s (default 0.2)")
    g.add_argument("--a0-halfwidth", type=float, help="a0 range around a_max, m/s² (default 1.0)")
    g.add_argument("--a0-step", type=float, help="default 0.1 m/s²")
    g.add_argument("--tb-step", type=float, help="default 0.1 s")
    g.add_argument("--jb-margin", type=float, help="j_B range below j_min, m/s³ (default 5.0)")
    g.add_argument("--jb-step", type=float, help="default 0.2 m/s³")


def _add_eval_flags(p):
    g = p.add_argument_group("evaluation")
    g.add_argument("--diff-threshold", type=float, help="small-difference bound, s (default 0.3)")
    g.add_argument("--r2-threshold", type=float, help="R² for the reported confusion counts (default 0.5)")
    g.add_argument("--roc-step", type=float, help="R² threshold sweep step (default 0.1)")
    g.add_argument("--bin-width", type=float, help="deviation histogram bin width, s (default 0.1)")
    g.add_argument("--amin-threshold", type=float, help="flag events with windowed a_min >= this (off by default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brakeonset", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="estimate brake onsets for every event in a manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="report JSON path")
    p.add_argument("--workers", type=int, default=1)
    _add_detection_flags(p)
    _add_eval_flags(p)

    p = sub.add_parser("evaluate", help="recompute metrics of a report against manifest annotations")
    p.add_argument("report")
    p.add_argument("--manifest", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_eval_flags(p)

    p = sub.add_parser("roc", help="print the R² ROC sweep of a report")
    p.add_argument("report")
    p.add_argument("--manifest", required=True)
    p.add_argument("-o", "--output", help="write the sweep as CSV instead of printing")
    _add_eval_flags(p)

    p = sub.add_parser("plot", help="write plot data for one event")
    p.add_argument("manifest")
    p.add_argument("event_id")
    p.add_argument("-o", "--output", required=True)
    _add_detection_flags(p)

    p = sub.add_parser("synth", help="generate a synthetic event corpus")
    p.add_argument("outdir")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--crash-fraction", type=float, default=0.0)
    p.add_argument("--no-braking-fraction", type=float, default=0.0)
    p.add_argument("--no-response-fraction", type=float, default=0.0)
    return parser


def _file_defaults() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def resolve_config(args) -> tuple[Config, EvalConfig]:
    values = _file_defaults()
    for key, val in vars(args).items():
        if val is not None:
            values[key] = val

    def make(cls):
        return cls(**{f.name: values[f.name] for f in fields(cls) if f.name in values})

    return Config(make(WindowConfig), make(GridConfig)), make(EvalConfig)


def _config_dict(cfg: Config, ecfg: EvalConfig) -> dict:
    return {"window": asdict(cfg.window), "grid": asdict(cfg.grid), "evaluation": asdict(ecfg)}


def _annotations(manifest_path) -> dict:
    doc = formats.read_manifest(manifest_path)
    return {e["event_id"]: formats.annotation_from_json(e.get("annotation")) for e in doc["events"]}


def cmd_detect(args) -> int:
    cfg, ecfg = resolve_config(args)
    events, failures = formats.load_events(args.manifest)
    for f in failures:
        log.warning("event %s not loaded: %s", f.event_id, f.error)
    results = run_batch(events, cfg, workers=args.workers)
    results = sorted(results + [f.as_result() for f in failures], key=lambda r: r.event_id)
    annotations = {e.event_id: e.annotation for e in events}
    annotations.update({f.event_id: f.annotation for f in failures})
    metrics = evaluate_batch(results, annotations, ecfg)
    formats.write_report(
        results, metrics.deviations, metrics, args.output, _config_dict(cfg, ecfg), failures
    )
    n_est = sum(1 for r in results if not r.is_missing)
    log.info("%d events, %d estimates, %d load errors", len(results), n_est, len(failures))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_evaluate(args) -> int:
    _, ecfg = resolve_config(args)
    doc = formats.read_report(args.report)
    results = formats.results_from_report(doc)
    metrics = evaluate_batch(results, _annotations(args.manifest), ecfg)
    config = dict(doc.get("config", {}), evaluation=asdict(ecfg))
    formats.write_report(results, metrics.deviations, metrics, args.output, config)
    return EXIT_PARTIAL if doc.get("load_errors") else EXIT_OK


def cmd_roc(args) -> int:
    _, ecfg = resolve_config(args)
    results = formats.results_from_report(formats.read_report(args.report))
    annotations = _annotations(args.manifest)
    annotated = [r for r in results if annotations.get(r.event_id) is not None]
    devs = [deviation(r, annotations[r.event_id]) for r in annotated]
    r2s = [r.fit.r2 if r.fit else None for r in annotated]
    roc = roc_curve(devs, r2s, ecfg.diff_threshold, threshold_sweep(ecfg.roc_step))
    lines = ["threshold,fpr,tpr"] + [f"{th:.3f},{f:.6f},{t:.6f}" for th, f, t in roc.points]
    text = "\n".join(lines) + f"\n# auc={roc.auc:.6f}\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg, _ = resolve_config(args)
    events, failures = formats.load_events(args.manifest)
    match = [e for e in events if e.event_id == args.event_id]
    if not match:
        why = next((f.error for f in failures if f.event_id == args.event_id), "not in manifest")
        log.error("event %s unavailable: %s", args.event_id, why)
        return EXIT_STRUCTURAL
    event = match[0]
    formats.emit_plot_data(event, detect_brake_onset(event, cfg), args.output)
    return EXIT_OK


def cmd_synth(args) -> int:
    ccfg = CorpusConfig(
        noise_sigma=args.noise_sigma,
        crash_fraction=args.crash_fraction,
        no_braking_fraction=args.no_braking_fraction,
        no_response_fraction=args.no_response_fraction,
    )
    path = formats.write_event_set(gen_corpus(args.n, ccfg, args.seed), args.outdir)
    print(path)
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
    "plot": cmd_plot,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (BrakeOnsetError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
