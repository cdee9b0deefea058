"""Datasets: synthetic generators, CSV ingestion, NearMiss-3 and bias augmentation."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArgumentError, IngestionError


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Raw feature matrix, +/-1 labels and the augmentation constant ``tau``.

    Arrays are copied on construction and made read-only.
    """

    features: np.ndarray
    labels: np.ndarray
    tau: float = 1.0
    meta: str = ""

    def __post_init__(self):
        X = _frozen(self.features)
        y = _frozen(self.labels)
        if X.ndim != 2:
            raise ArgumentError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1:
            raise ArgumentError("dataset needs at least one row")
        if y.shape != (X.shape[0],):
            raise ArgumentError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ArgumentError("labels must be exactly -1 or +1")
        if not np.all(np.isfinite(X)):
            raise ArgumentError("features must be finite")
        if not self.tau > 0:
            raise ArgumentError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.tau, self.meta)

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.tau, self.meta)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.tau, self.meta)

    def class_counts(self) -> dict[int, int]:
        return {-1: int(np.sum(self.labels == -1)), 1: int(np.sum(self.labels == 1))}


@dataclass(frozen=True, eq=False)
class PerformativeMask:
    """Boolean flag per raw feature: True where a strategic agent may move it."""

    performative: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        m = _frozen(self.performative, dtype=bool)
        if m.ndim != 1:
            raise ArgumentError("mask must be a 1-D boolean vector")
        object.__setattr__(self, "performative", m)

    @property
    def width(self) -> int:
        return self.performative.shape[0]


def augment(data: Dataset) -> np.ndarray:
    """Append the constant ``tau`` column, giving an n x (p+1) matrix."""
    col = np.full((data.n, 1), data.tau)
    return np.hstack([data.features, col])


def gen_linear_synthetic(n_per_class: int, dim: int, n_informative: int,
                         class_sep: float = 1.0, seed: int = 0, tau: float = 1.0) -> Dataset:
    """Two Gaussian clusters with identity covariance.

    Class centers sit at +/- class_sep / sqrt(n_informative) on each of the
    first ``n_informative`` coordinates; the remaining coordinates are pure
    standard-normal noise. Rows are ordered label -1 first, then +1.
    """
    if n_per_class < 1:
        raise ArgumentError(f"n_per_class must be >= 1, got {n_per_class}")
    if not 0 < n_informative <= dim:
        raise ArgumentError(f"need 0 < n_informative <= dim, got {n_informative}, {dim}")
    rng = np.random.default_rng(seed)
    center = np.zeros(dim)
    center[:n_informative] = class_sep / np.sqrt(n_informative)
    y = np.concatenate([-np.ones(n_per_class), np.ones(n_per_class)])
    X = rng.standard_normal((2 * n_per_class, dim)) + y[:, None] * center
    return Dataset(X, y, tau, meta=f"linear_synthetic(n={n_per_class},dim={dim},inf={n_informative},seed={seed})")


def gen_circles(n_per_class: int, noise_std: float = 0.2, seed: int = 0, tau: float = 1.0) -> Dataset:
    """Concentric circles: outer radius 1 labeled -1, inner radius 0.5 labeled +1.

    Angles are evenly spaced; i.i.d. Gaussian noise is added to both coordinates.
    """
    if n_per_class < 1:
        raise ArgumentError(f"n_per_class must be >= 1, got {n_per_class}")
    if noise_std < 0:
        raise ArgumentError(f"noise_std must be non-negative, got {noise_std}")
    rng = np.random.default_rng(seed)
    angles = np.linspace(0.0, 2.0 * np.pi, n_per_class, endpoint=False)
    ring = np.column_stack([np.cos(angles), np.sin(angles)])
    X = np.vstack([ring, 0.5 * ring])
    if noise_std > 0:
        X = X + rng.normal(0.0, noise_std, size=X.shape)
    y = np.concatenate([-np.ones(n_per_class), np.ones(n_per_class)])
    return Dataset(X, y, tau, meta=f"circles(n={n_per_class},noise={noise_std},seed={seed})")


def standardize(X: np.ndarray) -> np.ndarray:
    """Column z-scores; constant columns are centered only."""
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - mu) / sd


def load_csv(path, label_column: str, positive_label: str,
             feature_columns: Sequence[str] | None = None, *,
             negative_label: str | None = None, standardize_features: bool = True,
             tau: float = 1.0) -> Dataset:
    """Read a headered CSV into a Dataset.

    Rows whose label equals ``positive_label`` become +1, the rest -1. The label
    column may hold at most two distinct values (exactly ``positive_label`` and
    ``negative_label`` when the latter is given). ``feature_columns=None`` takes
    every column except the label.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        if label_column not in header:
            raise IngestionError(f"{path}: missing label column {label_column!r}")
        if feature_columns is None:
            feature_columns = [h for h in header if h != label_column]
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing feature column(s) {missing}")
        li = header.index(label_column)
        fi = [header.index(c) for c in feature_columns]

        rows, labels = [], []
        other = negative_label
        for rownum, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise IngestionError(f"{path}: row {rownum} has {len(rec)} cells, header has {len(header)}")
            lab = rec[li].strip()
            if lab == "":
                raise IngestionError(f"{path}: row {rownum}, column {label_column!r}: blank label")
            if lab == positive_label:
                labels.append(1.0)
            else:
                if other is None:
                    other = lab
                elif lab != other:
                    raise IngestionError(
                        f"{path}: row {rownum}, column {label_column!r}: unknown label value {lab!r}")
                labels.append(-1.0)
            vals = []
            for j, name in zip(fi, feature_columns):
                cell = rec[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"{path}: row {rownum}, column {name!r}: non-numeric cell {cell!r}") from None
                if not np.isfinite(v):
                    raise IngestionError(f"{path}: row {rownum}, column {name!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=float)
    if standardize_features:
        X = standardize(X)
    return Dataset(X, np.asarray(labels), tau, meta=str(path))


def _knn(dist: np.ndarray, k: int) -> np.ndarray:
    # stable sort -> equal distances resolved by lowest column index
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def _pairwise(A, B):
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d2)


def nearmiss3_undersample(data: Dataset, minority_label: int = 1, k: int = 3, seed: int = 0) -> Dataset:
    """Two-stage NearMiss-3 undersampling of the majority class.

    Stage 1 keeps, for every minority point, its ``k`` nearest majority points.
    Stage 2 scores each kept candidate by its mean distance to its ``k`` nearest
    minority points and retains the highest-scoring ones until the majority
    count equals the minority count. If stage 1 yields too few candidates the
    remaining slots go to non-candidates ranked by the same score. Ties go to
    the lowest row index. ``seed`` is accepted for interface symmetry; the
    procedure itself is deterministic.
    """
    del seed
    if minority_label not in (-1, 1):
        raise ArgumentError("minority_label must be -1 or +1")
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}")
    y = data.labels
    mino = np.flatnonzero(y == minority_label)
    majo = np.flatnonzero(y != minority_label)
    if mino.size == 0 or majo.size == 0:
        raise ArgumentError("NearMiss-3 needs both classes present")
    n_keep = mino.size
    if majo.size < n_keep:
        raise ArgumentError(f"majority class ({majo.size}) smaller than minority ({n_keep})")

    Xmin = data.features[mino]
    Xmaj = data.features[majo]
    d = _pairwise(Xmin, Xmaj)  # minority x majority
    cand = np.unique(_knn(d, min(k, majo.size)).ravel())

    dT = d.T  # majority x minority
    nn = _knn(dT, min(k, mino.size))
    score = np.take_along_axis(dT, nn, axis=1).mean(axis=1)

    is_cand = np.zeros(majo.size, dtype=bool)
    is_cand[cand] = True
    # candidates first, then higher score, then lower row index
    order = np.lexsort((np.arange(majo.size), -score, ~is_cand))
    keep = np.sort(np.concatenate([mino, majo[order[:n_keep]]]))
    return data.subset(keep)
