"""Trace and summary CSVs: '.' decimals, 12 significant digits, LF endings."""
from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np

from .errors import IngestionError
from .metrics import Summary
from .rrm import TRACE_COLUMNS, IterationRecord, RrmTrace

SUMMARY_KEY = ("dataset", "map", "d", "method", "alpha")
SUMMARY_COLUMNS = SUMMARY_KEY + ("trials", "burn_in", "mean_accuracy", "std_accuracy",
                                 "mean_consistency", "std_consistency")


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".12g")


def _render(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_atomic(path, text: str):
    """Write to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def trace_text(trace: RrmTrace) -> str:
    return _render(TRACE_COLUMNS, ([getattr(r, c) for c in TRACE_COLUMNS] for r in trace.records))


def write_trace(path, trace: RrmTrace):
    write_atomic(path, trace_text(trace))


def read_trace(path, method: str = "", trial: int = 0) -> RrmTrace:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise IngestionError(f"{path}: bad trace header")
    records = []
    for lineno, rec in enumerate(rows[1:], start=2):
        if len(rec) != len(TRACE_COLUMNS):
            raise IngestionError(f"{path}: line {lineno} has {len(rec)} cells")
        try:
            vals = [float(v) for v in rec]
        except ValueError:
            raise IngestionError(f"{path}: line {lineno}: non-numeric cell") from None
        t, n = vals[0], vals[-1]
        if t != int(t) or n != int(n):
            raise IngestionError(f"{path}: line {lineno}: t and n must be integers")
        records.append(IterationRecord(int(t), *vals[1:-1], int(n)))
    if not records:
        raise IngestionError(f"{path}: trace has no rows")
    return RrmTrace(tuple(records), None, method, trial)


def summary_text(rows) -> str:
    """``rows`` are (key tuple, Summary) pairs, written in the given order."""
    out = []
    for key, s in rows:
        out.append(tuple(key) + (s.trials, s.burn_in, s.mean_accuracy, s.std_accuracy,
                                 s.mean_consistency, s.std_consistency))
    return _render(SUMMARY_COLUMNS, out)


def read_summary(path) -> list[tuple[tuple, Summary]]:
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows or tuple(rows[0]) != SUMMARY_COLUMNS:
        raise IngestionError(f"{path}: bad summary header")
    out = []
    for rec in rows[1:]:
        key = (rec[0], rec[1], float(rec[2]), rec[3], float(rec[4]))
        s = Summary(float(rec[7]), float(rec[8]), float(rec[9]), float(rec[10]),
                    int(rec[5]), int(rec[6]))
        out.append((key, s))
    return out
