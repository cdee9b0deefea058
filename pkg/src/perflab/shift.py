"""Distribution maps D(theta): how a deployed model reshapes the data it will see next.

Every map reads a base dataset and returns a new one; inputs are never mutated
and the output is a pure function of (inputs, seed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, PerformativeMask
from .errors import ArgumentError, MapError
from .kernel import KernelModel, predict

KINDS = ("feature_linear", "feature_simulated", "label_flip", "bankruptcy")
# "printed": flip w.p. p = e^{d p*} / (1 + e^{d p*});  "complement": flip w.p. 1 - p
FLIP_RULES = ("printed", "complement")
NORMALIZER_FLOOR = 1e-12


@dataclass(frozen=True)
class MapSpec:
    kind: str
    d: float = 0.0
    b: float = 0.0
    n_candidates: int = 100
    mask: PerformativeMask | None = None
    flip_rule: str = "printed"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown map kind {self.kind!r}")
        if not np.isfinite(self.d) or self.d < 0:
            raise ArgumentError(f"d must be finite and >= 0, got {self.d}")
        if not np.isfinite(self.b):
            raise ArgumentError(f"b must be finite, got {self.b}")
        if self.kind == "feature_simulated" and self.n_candidates < 1:
            raise ArgumentError("n_candidates must be >= 1")
        if (self.mask is not None) != (self.kind == "bankruptcy"):
            raise ArgumentError("a performative mask is required for, and only for, the bankruptcy map")
        if self.flip_rule not in FLIP_RULES:
            raise ArgumentError(f"flip_rule must be one of {FLIP_RULES}")


def bankruptcy_intensity(d: float) -> float:
    """Label intensity tied to the feature shift: b = -0.01 d + 15."""
    return -0.01 * d + 15.0


def decision(model, data: Dataset, features=None) -> np.ndarray:
    """Real-valued scores of ``model`` on raw ``features`` (defaults to the data's)."""
    X = data.features if features is None else np.asarray(features, dtype=float)
    if isinstance(model, KernelModel):
        aug = np.hstack([X, np.full((X.shape[0], 1), data.tau)])
        return predict(model, aug)
    return model.decision(X)


def explicit_raw_weights(model):
    """Raw-space weight vector (bias excluded) if the model has one, else None."""
    if isinstance(model, KernelModel):
        if model.spec.kind != "linear":
            return None
        return model.explicit_weights()[:-1]
    return np.asarray(model.weights, dtype=float)


def apply_feature_linear(base: Dataset, weights, d: float) -> Dataset:
    """Every row moves to x0 - d * w."""
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != base.dim:
        raise ArgumentError(f"weights width {w.shape[0]} != feature width {base.dim}")
    if d == 0:
        return base.with_features(base.features)
    return base.with_features(base.features - d * w)


def _ball_offsets(rng, n_rows, n_candidates, dim, d):
    # uniform in the L2 ball: uniform direction times radius d * u^(1/dim)
    direction = rng.standard_normal((n_rows, n_candidates, dim))
    norms = np.linalg.norm(direction, axis=2, keepdims=True)
    norms[norms == 0] = 1.0
    radius = d * rng.random((n_rows, n_candidates, 1)) ** (1.0 / dim)
    return direction / norms * radius


def apply_feature_simulated(base: Dataset, model, d: float, n_candidates: int = 100,
                            seed: int = 0, columns=None) -> Dataset:
    """Each row picks, among itself and ``n_candidates`` uniform draws from the
    closed ball of radius ``d`` around it, the point with the lowest score.

    ``columns`` (boolean mask) restricts the move to a subset of features; the
    ball then lives in that subspace.
    """
    if d < 0:
        raise ArgumentError(f"d must be >= 0, got {d}")
    if d == 0:
        return base.with_features(base.features)
    X0 = base.features
    cols = np.ones(base.dim, dtype=bool) if columns is None else np.asarray(columns, dtype=bool)
    if cols.shape != (base.dim,):
        raise ArgumentError(f"column mask width {cols.shape} != feature width {base.dim}")
    k = int(cols.sum())
    if k == 0:
        return base.with_features(X0)
    rng = np.random.default_rng(seed)
    n = base.n
    offsets = _ball_offsets(rng, n, n_candidates, k, d)
    cand = np.repeat(X0[:, None, :], n_candidates + 1, axis=1)
    cand[:, 1:, cols] += offsets
    # discard any candidate that rounding pushed outside the closed ball
    moved = np.linalg.norm(cand[:, :, cols] - X0[:, None, cols], axis=2)
    flat = cand.reshape(-1, base.dim)
    scores = decision(model, base, flat).reshape(n, n_candidates + 1)
    scores[moved > d] = np.inf
    pick = np.argmin(scores, axis=1)
    return base.with_features(cand[np.arange(n), pick])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def label_flip_probabilities(base: Dataset, scores, d: float, rule: str = "printed"):
    """Per-row flip probability; zero for rows the model gets wrong.

    The relative position p* is f / max(f) for y = +1 and f / min(f) for
    y = -1, with max/min over the whole dataset. A row is correct when
    sign(f) == y with sign(0) = +1.
    """
    y = base.labels
    f = np.asarray(scores, dtype=float)
    pred = np.where(f >= 0, 1.0, -1.0)
    correct = pred == y
    pstar = np.zeros_like(f)
    pos = correct & (y > 0)
    neg = correct & (y < 0)
    if pos.any():
        fmax = f.max()
        if fmax <= NORMALIZER_FLOOR:
            raise MapError(f"degenerate normalizer: max score {fmax:.3g}")
        pstar[pos] = f[pos] / fmax
    if neg.any():
        fmin = f.min()
        if fmin >= -NORMALIZER_FLOOR:
            raise MapError(f"degenerate normalizer: min score {fmin:.3g}")
        pstar[neg] = f[neg] / fmin
    p = _sigmoid(d * pstar)
    if rule == "complement":
        p = 1.0 - p
    return np.where(correct, p, 0.0)


def apply_label_flip(base: Dataset, model, d: float, seed: int = 0,
                     rule: str = "printed") -> Dataset:
    if d < 0:
        raise ArgumentError(f"d must be >= 0, got {d}")
    p = label_flip_probabilities(base, decision(model, base), d, rule)
    rng = np.random.default_rng(seed)
    flip = rng.random(base.n) < p
    return base.with_labels(np.where(flip, -base.labels, base.labels))


def bankruptcy_flip_probabilities(base: Dataset, scores, b: float, rule: str = "printed"):
    """Flip probability for y = +1 rows (y = -1 rows never change)."""
    y = base.labels
    f = np.asarray(scores, dtype=float)
    pos = y > 0
    p = np.zeros_like(f)
    if pos.any():
        fmax = f.max()
        if fmax <= NORMALIZER_FLOOR:
            raise MapError(f"degenerate normalizer: max score {fmax:.3g}")
        p[pos] = _sigmoid(b * f[pos] / fmax)
        if rule == "complement":
            p[pos] = 1.0 - p[pos]
    return p


def apply_bankruptcy(base: Dataset, model, d: float, b: float, mask: PerformativeMask,
                     seed: int = 0, strategy: str = "auto", n_candidates: int = 100,
                     rule: str = "printed") -> Dataset:
    """Shift the performative columns, then flip bankrupt labels.

    ``strategy`` is "linear" (x_P - d * w_P), "simulated" (candidate search
    restricted to the masked columns) or "auto" (linear whenever the model has
    explicit weights). Flip probabilities are computed on the shifted features.
    """
    if mask.width != base.dim:
        raise ArgumentError(f"mask width {mask.width} != feature width {base.dim}")
    cols = mask.performative
    feat_seed, label_seed = np.random.SeedSequence(seed).generate_state(2)
    w = explicit_raw_weights(model)
    if strategy == "auto":
        strategy = "linear" if w is not None else "simulated"
    if strategy == "linear":
        if w is None:
            raise ArgumentError("linear strategy needs a model with explicit weights")
        X = base.features.copy()
        X[:, cols] -= d * w[cols]
        shifted = base.with_features(X)
    elif strategy == "simulated":
        shifted = apply_feature_simulated(base, model, d, n_candidates, int(feat_seed), columns=cols)
    else:
        raise ArgumentError(f"unknown strategy {strategy!r}")
    p = bankruptcy_flip_probabilities(shifted, decision(model, shifted), b, rule)
    rng = np.random.default_rng(int(label_seed))
    flip = rng.random(base.n) < p
    return shifted.with_labels(np.where(flip, -1.0, shifted.labels))


def apply_map(spec: MapSpec, base: Dataset, model, seed: int = 0) -> Dataset:
    """Dispatch on ``spec.kind``.

    ``feature_linear`` uses the exact shift when the model has explicit weights
    and falls back to the candidate simulation otherwise.
    """
    if spec.kind == "feature_linear":
        w = explicit_raw_weights(model)
        if w is not None:
            return apply_feature_linear(base, w, spec.d)
        return apply_feature_simulated(base, model, spec.d, spec.n_candidates, seed)
    if spec.kind == "feature_simulated":
        return apply_feature_simulated(base, model, spec.d, spec.n_candidates, seed)
    if spec.kind == "label_flip":
        return apply_label_flip(base, model, spec.d, seed, spec.flip_rule)
    return apply_bankruptcy(base, model, spec.d, spec.b, spec.mask, seed,
                            n_candidates=spec.n_candidates, rule=spec.flip_rule)
