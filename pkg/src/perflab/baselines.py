"""Logistic-regression baselines: repeated refitting (RRM-LR) and repeated
single gradient steps (RGD-LR) under the same distribution maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ArgumentError, FitError, UndefinedConsistencyError
from .metrics import accuracy, consistency_linear
from .rrm import IterationRecord, RrmSettings, RrmTrace, derived_seeds
from .shift import MapSpec, apply_map


@dataclass(frozen=True, eq=False)
class LinearModel:
    """f(x) = w^T x + b on raw features."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ArgumentError("linear model entries must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def zero(cls, dim: int) -> "LinearModel":
        return cls(np.zeros(dim), 0.0)

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def stacked(self) -> np.ndarray:
        return np.append(self.weights, self.bias)


@dataclass(frozen=True)
class LrSettings:
    l2: float = 1e-3
    lr: float | None = None   # None: 1 / (smoothness bound)
    max_iters: int = 20000
    tol: float = 1e-6
    step_lr: float = 0.1      # RGD step size

    def __post_init__(self):
        if self.l2 < 0:
            raise ArgumentError(f"l2 must be >= 0, got {self.l2}")
        if self.lr is not None and not self.lr > 0:
            raise ArgumentError(f"lr must be positive, got {self.lr}")
        if self.max_iters < 1 or not self.tol > 0 or not self.step_lr > 0:
            raise ArgumentError("max_iters >= 1, tol > 0 and step_lr > 0 required")


def _design(data: Dataset) -> np.ndarray:
    return np.hstack([data.features, np.ones((data.n, 1))])


def log_loss(model: LinearModel, data: Dataset, l2: float) -> float:
    """Mean logistic loss plus (l2/2)||w||^2 (bias unpenalized)."""
    m = data.labels * model.decision(data.features)
    return float(np.mean(np.logaddexp(0.0, -m)) + 0.5 * l2 * model.weights @ model.weights)


def log_loss_gradient(model: LinearModel, data: Dataset, l2: float) -> np.ndarray:
    """Gradient with respect to the stacked (w, b) vector."""
    y = data.labels
    m = y * model.decision(data.features)
    # d/dm log(1 + e^-m) = -sigmoid(-m)
    s = 0.5 * (1.0 - np.tanh(0.5 * m))
    g = _design(data).T @ (-y * s) / data.n
    g[:-1] += l2 * model.weights
    return g


def _from_stacked(v) -> LinearModel:
    return LinearModel(v[:-1], v[-1])


def lr_gradient_step(model: LinearModel, data: Dataset, l2: float = 1e-3,
                     lr: float = 0.1) -> LinearModel:
    return _from_stacked(model.stacked() - lr * log_loss_gradient(model, data, l2))


def lr_fit(data: Dataset, l2: float = 1e-3, lr: float | None = None,
           max_iters: int = 20000, tol: float = 1e-6) -> LinearModel:
    """Full-batch gradient descent from zero until ||grad|| <= tol.

    The default step is 1/L with L = ||[X, 1]||_2^2 / (4n) + l2, which
    guarantees monotone descent.
    """
    if len(np.unique(data.labels)) < 2:
        raise FitError("logistic regression needs both classes")
    if lr is None:
        L = np.linalg.norm(_design(data), 2) ** 2 / (4.0 * data.n) + l2
        lr = 1.0 / L
    model = LinearModel.zero(data.dim)
    for _ in range(max_iters):
        g = log_loss_gradient(model, data, l2)
        if np.linalg.norm(g) <= tol:
            break
        model = _from_stacked(model.stacked() - lr * g)
    return model


def _cos(a: LinearModel, b: LinearModel) -> float:
    try:
        return consistency_linear(a.stacked(), b.stacked())
    except UndefinedConsistencyError:
        return float("nan")


def _run_linear(data0: Dataset, map_spec: MapSpec, settings: RrmSettings, lr_settings: LrSettings,
                trial: int, method: str, update) -> RrmTrace:
    nan = float("nan")
    s = lr_settings
    theta = lr_fit(data0, s.l2, s.lr, s.max_iters, s.tol)
    D_cur = apply_map(map_spec, data0, theta, seed=derived_seeds(settings.seed, trial, 1)[0])
    records = [IterationRecord(1, nan, nan, nan, accuracy(theta, D_cur), nan, nan, nan, D_cur.n)]
    for t in range(2, settings.T_max + 1):
        D_prev, theta_prev = D_cur, theta
        theta = update(theta_prev, D_prev)
        D_cur = apply_map(map_spec, data0, theta, seed=derived_seeds(settings.seed, trial, t)[0])
        gap = float(np.linalg.norm(theta.stacked() - theta_prev.stacked()))
        records.append(IterationRecord(t, nan, nan, nan, accuracy(theta, D_cur),
                                       _cos(theta, theta_prev), gap, nan, D_cur.n))
    return RrmTrace(tuple(records), theta, method, trial, False, ())


def run_rrm_lr(data0: Dataset, map_spec: MapSpec, settings: RrmSettings = RrmSettings(),
               trial: int = 0, lr_settings: LrSettings = LrSettings()) -> RrmTrace:
    """Refit logistic regression from scratch on each induced dataset."""
    s = lr_settings
    return _run_linear(data0, map_spec, settings, s, trial, "rrm_lr",
                       lambda _, D: lr_fit(D, s.l2, s.lr, s.max_iters, s.tol))


def run_rgd_lr(data0: Dataset, map_spec: MapSpec, settings: RrmSettings = RrmSettings(),
               trial: int = 0, lr_settings: LrSettings = LrSettings()) -> RrmTrace:
    """Fit once on the base data, then take one gradient step per deployment."""
    s = lr_settings
    return _run_linear(data0, map_spec, settings, s, trial, "rgd_lr",
                       lambda th, D: lr_gradient_step(th, D, s.l2, s.step_lr))
