"""Dual coordinate descent for the augmented hinge-loss objective.

Minimizes 0.5 ||theta||^2 + (C/n) sum_i max(0, 1 - y_i theta^T phi(x_i)) over
augmented points. With the bias folded into the features the dual is

    max_a  sum_i a_i - 0.5 a^T Q a,   Q_ij = y_i y_j K(x_i, x_j),   0 <= a_i <= C/n

with no equality constraint, so each coordinate has a closed-form update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _core
from .dataset import Dataset, augment
from .errors import ArgumentError, NumericError
from .kernel import KernelModel, KernelSpec, gram, model_dot, predict


@dataclass(frozen=True)
class SolveSettings:
    C: float = 1.0
    tol: float = 1e-6
    max_passes: int = 20000
    shrink: bool = True

    def __post_init__(self):
        if not self.C > 0:
            raise ArgumentError(f"C must be positive, got {self.C}")
        if not self.tol > 0:
            raise ArgumentError(f"tol must be positive, got {self.tol}")
        if self.max_passes < 1:
            raise ArgumentError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass(frozen=True, eq=False)
class SolveReport:
    model: KernelModel
    alpha: np.ndarray
    primal: float
    dual: float
    gap: float
    kkt: float
    passes: int
    n_support: int
    converged: bool


def _objectives(alpha, grad, upper):
    # grad = Q a - 1, so y_i f(x_i) = grad_i + 1
    quad = float(alpha @ (grad + 1.0))
    hinge = float(np.maximum(0.0, -grad).sum())
    primal = 0.5 * quad + upper * hinge
    dual = float(alpha.sum()) - 0.5 * quad
    return primal, dual


def _projected(alpha, grad, upper):
    pg = grad.copy()
    lo = alpha <= 0.0
    hi = alpha >= upper
    pg[lo] = np.minimum(grad[lo], 0.0)
    pg[hi] = np.maximum(grad[hi], 0.0)
    return pg


def solve_gram(Q: np.ndarray, upper: float, *, tol: float = 1e-6, max_passes: int = 20000,
               shrink: bool = True, seed: int = 0, alpha0=None):
    """Run dual coordinate descent on a precomputed Q.

    Returns ``(alpha, grad, passes, kkt, converged)``. Converged means the
    largest projected-gradient magnitude is at most ``tol`` and the duality gap
    is at most ``tol * max(1, |primal|)``, both checked against a freshly
    recomputed gradient.
    """
    n = Q.shape[0]
    Q = np.ascontiguousarray(Q, dtype=float)
    diag = np.diag(Q)
    if np.any(diag <= 0):
        raise NumericError("kernel diagonal must be positive")
    alpha = np.zeros(n) if alpha0 is None else np.clip(np.array(alpha0, dtype=float), 0.0, upper)
    grad = Q @ alpha - 1.0
    rng = np.random.default_rng(seed)
    full = np.arange(n, dtype=np.intp)
    active = full
    hi_prev, lo_prev = np.inf, -np.inf
    kkt = np.inf
    passes = 0
    converged = False
    while passes < max_passes:
        passes += 1
        order = rng.permutation(active).astype(np.intp)
        _core.dcd_pass(Q, alpha, grad, upper, order)
        pg = _projected(alpha[active], grad[active], upper)
        kkt_active = float(np.abs(pg).max()) if active.size else 0.0
        if kkt_active <= tol:
            grad = Q @ alpha - 1.0
            pg_all = _projected(alpha, grad, upper)
            kkt = float(np.abs(pg_all).max())
            primal, dual = _objectives(alpha, grad, upper)
            if kkt <= tol and primal - dual <= tol * max(1.0, abs(primal)):
                converged = True
                break
            active = full
            hi_prev, lo_prev = np.inf, -np.inf
            continue
        if shrink:
            a, g = alpha[active], grad[active]
            drop = ((a <= 0.0) & (g > hi_prev)) | ((a >= upper) & (g < lo_prev))
            hi_prev = max(float(pg.max()), 0.0) or np.inf
            lo_prev = min(float(pg.min()), 0.0) or -np.inf
            if drop.any():
                active = active[~drop]
    if not converged:
        grad = Q @ alpha - 1.0
        kkt = float(np.abs(_projected(alpha, grad, upper)).max())
    return alpha, grad, passes, kkt, converged


def solve(data: Dataset, spec: KernelSpec, settings: SolveSettings = SolveSettings(),
          seed: int = 0, warm_start=None) -> SolveReport:
    """Exact minimizer of the augmented hinge objective on ``data``.

    ``warm_start`` is a previous dual vector for a dataset of the same
    cardinality (row i of the new data corresponds to row i of the old); it is
    clipped into the new box.
    """
    X = augment(data)
    y = data.labels
    n = data.n
    K = gram(spec, X, X)
    if not np.all(np.isfinite(K)):
        raise NumericError("non-finite kernel values")
    Q = K * np.outer(y, y)
    upper = settings.C / n
    if warm_start is not None and len(warm_start) != n:
        warm_start = None
    alpha, grad, passes, kkt, converged = solve_gram(
        Q, upper, tol=settings.tol, max_passes=settings.max_passes,
        shrink=settings.shrink, seed=seed, alpha0=warm_start)
    primal, dual = _objectives(alpha, grad, upper)
    sv = alpha > 0
    model = KernelModel(X[sv], alpha[sv] * y[sv], spec)
    alpha.setflags(write=False)
    return SolveReport(model=model, alpha=alpha, primal=primal, dual=dual, gap=primal - dual,
                       kkt=kkt, passes=passes, n_support=int(sv.sum()), converged=converged)


def dual_objective(data: Dataset, spec: KernelSpec, alpha) -> float:
    X = augment(data)
    y = data.labels
    Q = gram(spec, X, X) * np.outer(y, y)
    alpha = np.asarray(alpha, dtype=float)
    return float(alpha.sum() - 0.5 * alpha @ Q @ alpha)


def primal_objective(data: Dataset, model: KernelModel, C: float) -> float:
    """0.5 ||theta||^2 + (C/n) * total hinge loss, evaluated through the model."""
    f = predict(model, augment(data))
    hinge = np.maximum(0.0, 1.0 - data.labels * f).sum()
    return 0.5 * model_dot(model, model) + C / data.n * float(hinge)


def subgradient_norm(data: Dataset, model: KernelModel, C: float) -> float:
    """Norm of theta - (C/n) sum over y_i f(x_i) < 1 of y_i phi(x_i).

    The vector lives in the span of the model support and the data, so its norm
    comes out of Gram algebra.
    """
    X = augment(data)
    f = predict(model, X)
    viol = data.labels * f < 1.0
    S = np.vstack([model.support, X[viol]])
    b = np.concatenate([model.coeffs, -(C / data.n) * data.labels[viol]])
    g = KernelModel(S, b, model.spec)
    return float(np.sqrt(max(0.0, model_dot(g, g))))
