"""Accuracy, model consistency and post-burn-in trace summaries."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset
from .errors import ArgumentError, UndefinedConsistencyError
from .shift import decision


def accuracy(model, data: Dataset) -> float:
    """Fraction of rows with sign(f) == y, where sign(0) counts as +1."""
    if data.n == 0:
        raise ArgumentError("accuracy of an empty dataset")
    f = decision(model, data)
    pred = np.where(f >= 0, 1.0, -1.0)
    return float(np.mean(pred == data.labels))


def consistency_linear(w1, w2) -> float:
    """Cosine similarity of two stacked (weights, bias) vectors."""
    w1 = np.asarray(w1, dtype=float).ravel()
    w2 = np.asarray(w2, dtype=float).ravel()
    if w1.shape != w2.shape:
        raise ArgumentError(f"width mismatch: {w1.shape} vs {w2.shape}")
    n1, n2 = np.linalg.norm(w1), np.linalg.norm(w2)
    if n1 == 0 or n2 == 0:
        raise UndefinedConsistencyError("cosine undefined for a zero vector")
    return float(np.clip(w1 @ w2 / (n1 * n2), -1.0, 1.0))


@dataclass(frozen=True)
class Summary:
    mean_accuracy: float
    std_accuracy: float
    mean_consistency: float
    std_consistency: float
    trials: int
    burn_in: int


def _column(trace, name):
    return np.array([getattr(r, name) for r in trace.records], dtype=float)


def post_burn_in(values: Sequence[float], t: Sequence[int], burn_in: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[np.asarray(t) > burn_in]


def summarize(traces: Iterable, burn_in: int = 20, T_max: int | None = None) -> Summary:
    """Mean over every (trial, t > burn_in) cell; std over per-trial means.

    The std is the population std of the trial means, i.e. what a
    "mean +/- std over trials" table cell reports. With ``T_max`` given, a
    trace that stopped early at a fixed point is extended to T_max by
    repeating its last row (the deployed model no longer changes).
    """
    traces = list(traces)
    if not traces:
        raise ArgumentError("no traces to summarize")
    acc_cells, con_cells, acc_means, con_means = [], [], [], []
    for tr in traces:
        t, acc, con = (_column(tr, k) for k in ("t", "accuracy", "consistency"))
        if T_max is not None and 0 < t.size and t[-1] < T_max:
            pad = int(T_max - t[-1])
            t = np.concatenate([t, t[-1] + np.arange(1, pad + 1)])
            acc = np.concatenate([acc, np.repeat(acc[-1], pad)])
            con = np.concatenate([con, np.repeat(con[-1], pad)])
        if t.size == 0 or t.max() <= burn_in:
            raise ArgumentError(f"trace of length {t.size} does not extend past burn-in {burn_in}")
        a = post_burn_in(acc, t, burn_in)
        c = post_burn_in(con, t, burn_in)
        acc_cells.append(a)
        con_cells.append(c)
        acc_means.append(a.mean())
        con_means.append(c.mean())
    return Summary(
        mean_accuracy=float(np.concatenate(acc_cells).mean()),
        std_accuracy=float(np.std(acc_means)),
        mean_consistency=float(np.concatenate(con_cells).mean()),
        std_consistency=float(np.std(con_means)),
        trials=len(traces),
        burn_in=burn_in,
    )
