"""File formats: series CSV, event manifest, detection report and plot data.

Series files are two-column CSV with header ``t,accel`` (seconds, m/s²).
The manifest and the report are JSON documents carrying ``format_version``.
Series values are written with ``repr`` so a write/read cycle is lossless;
report numbers are rounded to 9 decimals so reports are byte-stable.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import jsonschema

from .errors import ManifestParseError, SeriesError
from .evaluation import Deviation, EvalReport
from .kinematics import KinematicSeries
from .pipeline import (
    Annotation,
    AnnotationKind,
    Config,
    ConflictEvent,
    MissingReason,
    OnsetResult,
)
from .plm import PlmFit, PlmParams, plm_predict

FORMAT_VERSION = 1
SERIES_HEADER = ("t", "accel")

_ANNOTATION_SCHEMA = {
    "oneOf": [
        {"type": "null"},
        {
            "type": "object",
            "properties": {"kind": {"const": "brake_onset"}, "t": {"type": "number"}},
            "required": ["kind", "t"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"enum": ["no_braking", "no_response"]}},
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["format_version", "events"],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["event_id", "series_path", "t1", "outcome"],
                "additionalProperties": False,
                "properties": {
                    "event_id": {"type": "string", "minLength": 1},
                    "series_path": {"type": "string"},
                    "t1": {"type": "number"},
                    "outcome": {"enum": ["crash", "near_crash"]},
                    "crash_time": {"type": ["number", "null"]},
                    "agent_type": {
                        "enum": ["passenger_car", "motorcycle", "bicycle", "micromobility", "pedestrian"]
                    },
                    "scenario_type": {"type": "string"},
                    "annotation": _ANNOTATION_SCHEMA,
                },
            },
        },
    },
}


@dataclass(frozen=True)
class LoadFailure:
    """An event whose series could not be loaded; reported, not fatal."""

    event_id: str
    error: str
    annotation: Optional[Annotation] = None

    def as_result(self) -> OnsetResult:
        return OnsetResult(self.event_id, missing=MissingReason.INCOMPLETE_SERIES, detail=self.error)


def read_series(path) -> KinematicSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != SERIES_HEADER:
        raise SeriesError(f"{path}: expected header 't,accel'")
    try:
        t = [float(r[0]) for r in rows[1:] if r]
        a = [float(r[1]) for r in rows[1:] if r]
    except (ValueError, IndexError) as exc:
        raise SeriesError(f"{path}: {exc}") from exc
    return KinematicSeries(t, a)


def write_series(series: KinematicSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for t, a in zip(series.t.tolist(), series.a.tolist()):
            w.writerow((repr(t), repr(a)))


def annotation_to_json(ann: Optional[Annotation]):
    if ann is None:
        return None
    if ann.kind is AnnotationKind.BRAKE_ONSET:
        return {"kind": ann.kind.value, "t": ann.t}
    return {"kind": ann.kind.value}


def annotation_from_json(obj) -> Optional[Annotation]:
    if obj is None:
        return None
    return Annotation(AnnotationKind(obj["kind"]), obj.get("t"))


def read_manifest(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        jsonschema.validate(doc, MANIFEST_SCHEMA)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestParseError(f"{path}: {exc}") from exc
    except jsonschema.ValidationError as exc:
        raise ManifestParseError(f"{path}: {exc.message}") from exc
    ids = [e["event_id"] for e in doc["events"]]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ManifestParseError(f"{path}: duplicate event ids {dupes}")
    return doc


def load_events(manifest_path) -> tuple[list[ConflictEvent], list[LoadFailure]]:
    """Parse a manifest and every series it references.

    A bad series or inconsistent event fields fail only that event; the
    failure is returned alongside the loaded events.

    Raises
    ------
    ManifestParseError
        If the manifest itself is unreadable or violates the schema.
    """
    manifest_path = Path(manifest_path)
    doc = read_manifest(manifest_path)
    events, failures = [], []
    for entry in doc["events"]:
        eid = entry["event_id"]
        annotation = None
        try:
            annotation = annotation_from_json(entry.get("annotation"))
            series = read_series(manifest_path.parent / entry["series_path"])
            events.append(
                ConflictEvent(
                    event_id=eid,
                    series=series,
                    t1=float(entry["t1"]),
                    outcome=entry["outcome"],
                    crash_time=entry.get("crash_time"),
                    agent_type=entry.get("agent_type", "passenger_car"),
                    scenario_type=entry.get("scenario_type", ""),
                    annotation=annotation,
                )
            )
        except (OSError, ValueError) as exc:
            failures.append(LoadFailure(eid, str(exc), annotation))
    return events, failures


def write_event_set(events: Sequence[ConflictEvent], directory, series_dir: str = "series") -> Path:
    """Write series CSVs plus ``manifest.json`` under ``directory``."""
    directory = Path(directory)
    (directory / series_dir).mkdir(parents=True, exist_ok=True)
    entries = []
    for ev in events:
        rel = f"{series_dir}/{ev.event_id}.csv"
        write_series(ev.series, directory / rel)
        entries.append(
            {
                "event_id": ev.event_id,
                "series_path": rel,
                "t1": ev.t1,
                "outcome": ev.outcome.value,
                "crash_time": ev.crash_time,
                "agent_type": ev.agent_type.value,
                "scenario_type": ev.scenario_type,
                "annotation": annotation_to_json(ev.annotation),
            }
        )
    path = directory / "manifest.json"
    path.write_text(json.dumps({"format_version": FORMAT_VERSION, "events": entries}, indent=2) + "\n")
    return path


def _num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return round(float(x), 9) + 0.0


def _event_entry(r: OnsetResult, dev: Optional[Deviation], flagged: bool):
    p = r.fit.params if r.fit else None
    return {
        "event_id": r.event_id,
        "t_B": _num(p.t_B) if p else None,
        "a0": _num(p.a0) if p else None,
        "j_B": _num(p.j_B) if p else None,
        "r2": _num(r.fit.r2) if r.fit else None,
        "t_start": _num(r.window[0]) if r.window else None,
        "t_end": _num(r.window[1]) if r.window else None,
        "a_min": _num(r.a_min),
        "missing_reason": r.missing.value if r.missing else None,
        "deviation": _num(dev.value) if dev is not None else None,
        "deviation_missing_reason": dev.missing.value if dev is not None and dev.missing else None,
        "amin_flagged": flagged,
    }


def build_report(
    results: Sequence[OnsetResult],
    deviations: Sequence[Deviation] = (),
    metrics: Optional[EvalReport] = None,
    config: Optional[dict] = None,
    load_errors: Sequence[LoadFailure] = (),
) -> dict:
    devs = {d.event_id: d for d in deviations}
    flagged = set(metrics.amin_flagged) if metrics else set()
    events = [_event_entry(r, devs.get(r.event_id), r.event_id in flagged) for r in results]
    missing_counts = {}
    for r in results:
        if r.missing:
            missing_counts[r.missing.value] = missing_counts.get(r.missing.value, 0) + 1
    dev_missing = {}
    for d in deviations:
        if d.missing:
            dev_missing[d.missing.value] = dev_missing.get(d.missing.value, 0) + 1

    agg = {
        "n_events": len(results),
        "n_estimates": sum(1 for r in results if not r.is_missing),
        "missing_counts": dict(sorted(missing_counts.items())),
        "deviation_missing_counts": dict(sorted(dev_missing.items())),
        "n_load_errors": len(load_errors),
        "histogram": [],
        "share_within_0_3": None,
        "share_within_0_5": None,
        "confusion": None,
        "roc": {"points": [], "auc": None},
        "pearson_r": None,
        "amin_flagged": [],
    }
    if metrics is not None:
        h = metrics.histogram
        agg["histogram"] = [{"lo": _num(lo), "hi": _num(hi), "count": c} for lo, hi, c in h.bins]
        agg["share_within_0_3"] = _num(h.share_within_03)
        agg["share_within_0_5"] = _num(h.share_within_05)
        agg["confusion"] = asdict(metrics.confusion)
        if metrics.roc is not None:
            agg["roc"] = {
                "points": [{"threshold": _num(th), "fpr": _num(f), "tpr": _num(t)} for th, f, t in metrics.roc.points],
                "auc": _num(metrics.roc.auc),
            }
        agg["pearson_r"] = _num(metrics.pearson)
        agg["amin_flagged"] = list(metrics.amin_flagged)
    return {
        "format_version": FORMAT_VERSION,
        "config": config or {},
        "events": events,
        "load_errors": [{"event_id": f.event_id, "error": f.error} for f in load_errors],
        "aggregate": agg,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def write_report(results, deviations, metrics, path, config=None, load_errors=()) -> None:
    text = dumps_report(build_report(results, deviations, metrics, config, load_errors))
    tmp = Path(f"{path}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def read_report(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ManifestParseError(f"{path}: unsupported report format_version")
    return doc


def results_from_report(doc: dict) -> list[OnsetResult]:
    """Rebuild per-event results from a report (window stats are not kept)."""
    out = []
    for e in doc["events"]:
        if e["missing_reason"] is not None:
            out.append(OnsetResult(e["event_id"], missing=MissingReason(e["missing_reason"]), a_min=e["a_min"]))
        else:
            fit = PlmFit(PlmParams(e["a0"], e["t_B"], e["j_B"]), e["r2"])
            out.append(OnsetResult(e["event_id"], fit=fit, window=(e["t_start"], e["t_end"]), a_min=e["a_min"]))
    return out


def emit_plot_data(event: ConflictEvent, result: OnsetResult, path) -> None:
    """Write observed and fitted acceleration plus marker rows as CSV.

    Columns are ``kind,label,t,a_observed,a_fitted``.  Sample rows have
    ``kind=sample``; ``a_fitted`` is blank outside the fit window or when
    the result is missing.  Marker rows (``kind=marker``) give t1, the
    window bounds, t_B and the crash time, each at most once.
    """
    s = event.series
    fitted = None
    if result.fit is not None:
        lo, hi = result.window
        fitted = plm_predict(result.fit.params, s.t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("kind", "label", "t", "a_observed", "a_fitted"))
        for i, (t, a) in enumerate(zip(s.t.tolist(), s.a.tolist())):
            f = ""
            if fitted is not None and lo - 1e-9 <= t <= hi + 1e-9:
                f = repr(float(fitted[i]))
            w.writerow(("sample", "", repr(t), repr(a), f))
        markers = [("t1", event.t1)]
        if result.fit is not None:
            markers += [("t_start", lo), ("t_end", hi), ("t_B", result.fit.params.t_B)]
        if event.crash_time is not None:
            markers.append(("crash_time", event.crash_time))
        for label, t in markers:
            w.writerow(("marker", label, repr(float(t)), "", ""))
