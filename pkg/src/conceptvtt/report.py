"""CSV outputs (canonical) and SVG renderings derived from them."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .gp import KernelParams, prior_split
from .performance import ConceptModel, ConfusionCounts
from .pool import Question
from .strategies import SessionLog
from .svg import Chart, Series

SESSION_COLUMNS = ["step", "sample_id", "concept_id", "gt", "prob", "a", "outcome",
                   "u_total_after"]
CURVE_COLUMNS = ["a", "mean", "lower", "upper", "count"]
COMPARISON_COLUMNS = ["concept_id", "questions", "asked_neg", "asked_pos", "u_neg", "u_pos",
                      "u_total", "tn", "fp", "fn", "tp"]
AGGREGATE_COLUMNS = ["strategy", "checkpoint", "n_sessions", "mean_u_total", "std_u_total",
                     "mean_u_per_concept", "std_u_per_concept"]


def fmt(x: float) -> str:
    """Shortest round-trip float text, so CSVs are byte-stable and lossless."""
    return repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_session_csv(history: SessionLog, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(SESSION_COLUMNS)
        for rec, u in zip(history.records, history.u_total):
            q = rec.question
            w.writerow([rec.step, q.sample_id, q.concept_id, q.gt, fmt(rec.prob), fmt(rec.a),
                        rec.outcome, fmt(u)])
    return path


def write_session_meta(history: SessionLog, path) -> Path:
    meta = {
        "config": history.config.to_dict(),
        "concepts": history.concepts,
        "questions_asked": len(history),
        "complete": history.complete,
        "stop_reason": history.stop_reason,
        "error": history.error,
    }
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_session_csv(path) -> list[dict]:
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "step": int(row["step"]),
                "sample_id": row["sample_id"],
                "concept_id": row["concept_id"],
                "gt": int(row["gt"]),
                "prob": float(row["prob"]),
                "a": float(row["a"]),
                "outcome": row["outcome"],
                "u_total_after": float(row["u_total_after"]),
            })
    return rows


def replay(rows: Iterable[Mapping], concepts: Optional[Sequence[str]] = None,
           kernel: KernelParams = KernelParams(), frequency_mode: bool = False,
           band_mode: str = "std"):
    """Rebuild the concept models from session rows.

    Returns ``(models, records, u_trace)`` where ``u_trace`` is the total
    uncertainty recomputed after each row.  Concepts never asked about only
    appear if listed in ``concepts``.
    """
    rows = list(rows)
    names = list(concepts) if concepts is not None else []
    for r in rows:
        if r["concept_id"] not in names:
            names.append(r["concept_id"])
    models = {c: ConceptModel(c, kernel, frequency_mode, band_mode) for c in names}
    totals = {c: m.split().total for c, m in models.items()}
    records, trace = [], []
    for r in rows:
        q = Question(r["sample_id"], r["concept_id"], r["gt"])
        records.append(models[q.concept_id].record_answer(q, r["prob"], r["step"]))
        totals[q.concept_id] = models[q.concept_id].split().total
        trace.append(float(sum(totals[c] for c in names)))
    return models, records, trace


def emit_gp_curve(model: ConceptModel, out, svg: bool = False) -> Path:
    curve = model.curve()
    std = curve.std
    out = Path(out)
    with out.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(CURVE_COLUMNS)
        for a, m, s, n in zip(curve.grid, curve.mean, std, model.bin_counts):
            w.writerow([fmt(a), fmt(m), fmt(m - 2 * s), fmt(m + 2 * s), int(n)])
    if svg:
        render_curve_svg(out, out.with_suffix(".svg"), title=model.concept_id)
    return out


def read_curve_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {col: np.array([float(r[col]) for r in rows]) for col in CURVE_COLUMNS}


def render_curve_svg(csv_path, svg_path, title: str = "") -> Path:
    data = read_curve_csv(csv_path)
    occupied = data["count"] > 0
    chart = Chart(title=title, xlabel="a", ylabel="count", xlim=(0.0, 1.0))
    chart.add(Series("mean", data["a"], data["mean"], data["lower"], data["upper"],
                     dashed=True))
    chart.add(Series("observations", data["a"][occupied], data["count"][occupied],
                     line=False, markers=True, color="#222222"))
    chart.save(svg_path)
    return Path(svg_path)


def concept_rows(history: SessionLog) -> list[dict]:
    asked = {c: [0, 0] for c in history.concepts}
    for rec in history.records:
        asked[rec.question.concept_id][rec.question.gt] += 1
    rows = []
    for c in history.concepts:
        model = history.models.get(c)
        if model is None:
            split, conf = prior_split(history.config.kernel, history.config.band_mode), ConfusionCounts()
        else:
            split, conf = model.split(), model.confusion()
        rows.append({
            "concept_id": c, "questions": sum(asked[c]), "asked_neg": asked[c][0],
            "asked_pos": asked[c][1], "u_neg": split.u_neg, "u_pos": split.u_pos,
            "u_total": split.total, "tn": conf.tn, "fp": conf.fp, "fn": conf.fn, "tp": conf.tp,
        })
    return rows


def emit_concept_comparison(history: SessionLog, out, extra: Optional[Mapping] = None,
                            append: bool = False) -> Path:
    """Per concept: questions asked, band split and confusion counts.

    ``extra`` columns (e.g. strategy, repeat) are prepended to every row.
    """
    out = Path(out)
    extra = dict(extra or {})
    header = list(extra) + COMPARISON_COLUMNS
    write_header = not (append and out.exists())
    with out.open("a" if append else "w", newline="") as fh:
        w = _writer(fh)
        if write_header:
            w.writerow(header)
        for row in concept_rows(history):
            vals = [row[k] for k in COMPARISON_COLUMNS]
            w.writerow([*extra.values(),
                        *(fmt(v) if isinstance(v, float) else v for v in vals)])
    return out


def default_checkpoints(final: int, every: int = 10) -> list[int]:
    points = list(range(every, final + 1, every))
    if final > 0 and (not points or points[-1] != final):
        points.append(final)
    return points


def u_at(trace: Sequence[float], t: int, prior_total: float) -> float:
    """Total uncertainty after t questions; a session that stopped early keeps its last value."""
    if t <= 0 or not trace:
        return prior_total
    return trace[min(t, len(trace)) - 1]


def aggregate(traces: Mapping[str, Sequence[Sequence[float]]], n_concepts: int,
              prior_total: float, checkpoints: Optional[Sequence[int]] = None) -> list[dict]:
    """Mean and population std of u_total per strategy and checkpoint."""
    if checkpoints is None:
        final = max((len(t) for ts in traces.values() for t in ts), default=0)
        checkpoints = default_checkpoints(final)
    rows = []
    for strategy, ts in traces.items():
        for cp in checkpoints:
            vals = np.array([u_at(t, cp, prior_total) for t in ts])
            rows.append({
                "strategy": strategy, "checkpoint": cp, "n_sessions": len(vals),
                "mean_u_total": float(vals.mean()), "std_u_total": float(vals.std()),
                "mean_u_per_concept": float(vals.mean() / n_concepts),
                "std_u_per_concept": float(vals.std() / n_concepts),
            })
    return rows


def write_aggregate_csv(rows: Sequence[Mapping], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(AGGREGATE_COLUMNS)
        for r in rows:
            w.writerow([r["strategy"], r["checkpoint"], r["n_sessions"],
                        *(fmt(r[k]) for k in AGGREGATE_COLUMNS[3:])])
    return path


def read_aggregate_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["checkpoint"] = int(r["checkpoint"])
        r["n_sessions"] = int(r["n_sessions"])
        for k in AGGREGATE_COLUMNS[3:]:
            r[k] = float(r[k])
    return rows


def render_aggregate_svg(csv_path, svg_path, title: str = "") -> Path:
    rows = read_aggregate_csv(csv_path)
    chart = Chart(title=title, xlabel="questions asked", ylabel="mean total uncertainty")
    for strategy in dict.fromkeys(r["strategy"] for r in rows):
        sel = [r for r in rows if r["strategy"] == strategy]
        x = [r["checkpoint"] for r in sel]
        m = np.array([r["mean_u_total"] for r in sel])
        s = np.array([r["std_u_total"] for r in sel])
        chart.add(Series(strategy, x, m, m - s, m + s))
    chart.save(svg_path)
    return Path(svg_path)
