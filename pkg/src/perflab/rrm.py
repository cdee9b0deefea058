"""Repeated risk minimization with a measured sensitivity and adaptive C.

Each round retrains on the data the previous deployment induced, measures how
much the distribution moved relative to how much the model moved (epsilon),
and sets C = alpha / mean(epsilon) so that epsilon * C stays below one half.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .dataset import Dataset
from .errors import ArgumentError, EstimationError, UndefinedConsistencyError
from .kernel import KernelModel, KernelSpec, model_cosine, model_diff_norm
from .metrics import accuracy
from .shift import MapSpec, apply_map, decision
from .solver import SolveSettings, solve

GAP_REL = 1e-8
FILTERS = ("previous", "current")


@dataclass(frozen=True)
class RrmSettings:
    alpha: float = 0.49
    T_max: int = 100
    trials: int = 10
    burn_in: int = 20
    C_init: float = 1.0
    convergence_consistency: float = 1.0 - 1e-6
    seed: int = 0
    solver: SolveSettings = field(default_factory=SolveSettings)
    # "previous" filters margin violators with theta_{t-1}; "current" with theta_t
    violator_filter: str = "previous"
    stop_at_convergence: bool = True

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ArgumentError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if self.T_max < 1 or self.trials < 1:
            raise ArgumentError("T_max and trials must be >= 1")
        if not 0 <= self.burn_in < self.T_max:
            raise ArgumentError(f"burn_in must be in [0, T_max), got {self.burn_in}")
        if not self.C_init > 0:
            raise ArgumentError(f"C_init must be positive, got {self.C_init}")
        if self.violator_filter not in FILTERS:
            raise ArgumentError(f"violator_filter must be one of {FILTERS}")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    epsilon: float
    epsilon_bar: float
    C: float
    accuracy: float
    consistency: float
    model_gap: float
    dual_gap: float
    n: int
    # std of the per-sample margin term along the unit model difference
    error_std: float = float("nan")


TRACE_COLUMNS = ("t", "epsilon", "epsilon_bar", "C", "accuracy", "consistency",
                 "model_gap", "dual_gap", "n")


@dataclass(frozen=True, eq=False)
class RrmTrace:
    records: tuple
    final_model: object = None
    method: str = "np2m2"
    trial: int = 0
    converged: bool = False
    notes: tuple = ()

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def __len__(self):
        return len(self.records)


class EstimationAborted(EstimationError):
    """Sensitivity estimation failed; ``trace`` holds the iterations completed so far."""

    def __init__(self, message, trace: RrmTrace):
        super().__init__(message)
        self.trace = trace


class ModelsCoincide(Exception):
    """Consecutive models are closer than the gap threshold; epsilon is not measurable."""


def gap_threshold(theta_prev: KernelModel) -> float:
    return GAP_REL * max(1.0, theta_prev.norm)


def estimate_epsilon_initial(D0: Dataset, D1: Dataset, theta1) -> float:
    """|mean y f(x) on D0 - mean y f(x) on D1| / ||theta_1||^2 over all rows."""
    sq = _sq_norm(theta1)
    if not sq > 0:
        raise EstimationError("initial model has zero norm")
    m0 = float(np.mean(D0.labels * decision(theta1, D0)))
    m1 = float(np.mean(D1.labels * decision(theta1, D1)))
    return abs(m0 - m1) / sq


def _violator_terms(D: Dataset, theta_prev, theta_cur, filt_model):
    f_prev = decision(theta_prev, D)
    f_cur = f_prev if theta_cur is theta_prev else decision(theta_cur, D)
    f_filt = f_prev if filt_model is theta_prev else decision(filt_model, D)
    viol = D.labels * f_filt < 1.0
    return D.labels[viol] * (f_prev[viol] - f_cur[viol])


def estimate_epsilon_step(D_prev: Dataset, D_cur: Dataset, theta_prev: KernelModel,
                          theta_cur: KernelModel, violator_filter: str = "previous",
                          return_terms: bool = False):
    """Sensitivity between consecutive rounds.

    Numerator: | (1/n_prev) sum_{viol in D_prev} y (f_prev - f_cur)
               - (1/n_cur)  sum_{viol in D_cur}  y (f_prev - f_cur) |,
    violators being rows with y f < 1 under theta_prev (or theta_cur with
    ``violator_filter="current"``). Denominator: ||theta_prev - theta_cur||^2.
    An empty violator set contributes zero. Raises ModelsCoincide when the
    model gap is below the threshold.
    """
    gap = model_diff_norm(theta_prev, theta_cur)
    if gap <= gap_threshold(theta_prev):
        raise ModelsCoincide(f"model gap {gap:.3g} below threshold")
    filt = theta_prev if violator_filter == "previous" else theta_cur
    a = _violator_terms(D_prev, theta_prev, theta_cur, filt)
    b = _violator_terms(D_cur, theta_prev, theta_cur, filt)
    eps = abs(a.sum() / D_prev.n - b.sum() / D_cur.n) / gap ** 2
    if return_terms:
        return eps, b / gap
    return eps


def _sq_norm(model) -> float:
    if isinstance(model, KernelModel):
        return model.sq_norm
    return float(model.stacked() @ model.stacked())


def derived_seeds(seed: int, trial: int, t: int) -> tuple[int, int]:
    """(map_seed, solver_seed) for round ``t`` of ``trial``."""
    s = np.random.SeedSequence([seed, trial, t]).generate_state(2)
    return int(s[0]), int(s[1])


def run_rrm(data0: Dataset, spec: KernelSpec, map_spec: MapSpec,
            settings: RrmSettings = RrmSettings(), trial: int = 0) -> RrmTrace:
    """One trial of the adaptive-C retraining loop.

    Round 1 trains on ``data0`` with ``C_init``; every later round uses
    C = alpha / epsilon_bar (kept at its previous value while epsilon_bar is 0)
    and trains on the dataset induced by the previous deployment. The map is
    always applied to ``data0``.
    """
    records = []
    notes = []
    base_solver = settings.solver

    def note_solver(t, rep):
        if not rep.converged and rep.gap > 1e3 * base_solver.tol * max(1.0, abs(rep.primal)):
            notes.append(f"t={t}: solver stopped at passes={rep.passes} gap={rep.gap:.3g}")

    def partial(msg, model):
        return EstimationAborted(msg, RrmTrace(tuple(records), model, "np2m2", trial, False, tuple(notes)))

    map_seed, solve_seed = derived_seeds(settings.seed, trial, 1)
    C = settings.C_init
    rep = solve(data0, spec, replace(base_solver, C=C), seed=solve_seed)
    note_solver(1, rep)
    theta = rep.model
    D_cur = apply_map(map_spec, data0, theta, seed=map_seed)
    try:
        eps = estimate_epsilon_initial(data0, D_cur, theta)
    except EstimationError as exc:
        raise partial(str(exc), theta) from exc
    eps_hist = [eps]
    records.append(IterationRecord(1, eps, eps, C, accuracy(theta, D_cur), float("nan"),
                                   float("nan"), rep.gap, D_cur.n))
    alpha_prev = rep.alpha
    converged = False

    for t in range(2, settings.T_max + 1):
        eps_bar = float(np.mean(eps_hist))
        if eps_bar > 0:
            C = settings.alpha / eps_bar
        map_seed, solve_seed = derived_seeds(settings.seed, trial, t)
        D_prev, theta_prev = D_cur, theta
        rep = solve(D_prev, spec, replace(base_solver, C=C), seed=solve_seed, warm_start=alpha_prev)
        note_solver(t, rep)
        theta = rep.model
        alpha_prev = rep.alpha
        D_cur = apply_map(map_spec, data0, theta, seed=map_seed)

        gap = model_diff_norm(theta_prev, theta)
        try:
            cons = model_cosine(theta, theta_prev)
        except UndefinedConsistencyError:
            cons = float("nan")
        err_std = float("nan")
        coincide = False
        try:
            eps, terms = estimate_epsilon_step(D_prev, D_cur, theta_prev, theta,
                                               settings.violator_filter, return_terms=True)
            if terms.size > 1:
                err_std = float(np.std(terms))
        except ModelsCoincide:
            eps, coincide = 0.0, True
        eps_hist.append(eps)
        records.append(IterationRecord(t, eps, float(np.mean(eps_hist)), C,
                                       accuracy(theta, D_cur), cons, gap, rep.gap, D_cur.n,
                                       err_std))
        if coincide and cons >= settings.convergence_consistency:
            converged = True
            if settings.stop_at_convergence:
                break

    return RrmTrace(tuple(records), theta, "np2m2", trial, converged, tuple(notes))


def run_trials(make_data: Callable[[int], Dataset], runner: Callable[..., RrmTrace],
               trials: int, **kwargs) -> list[RrmTrace]:
    """Run ``runner(make_data(k), ..., trial=k)`` for k in range(trials)."""
    return [runner(make_data(k), trial=k, **kwargs) for k in range(trials)]


def contraction_audit(trace: RrmTrace, burn_in: int = 20) -> dict:
    """Successive model-gap ratios gap_{t+1} / gap_t.

    ``max_ratio`` is taken over every t with gap_t above the gap threshold;
    ``satisfied`` asks that the ratio never exceed 1 after burn-in.
    """
    if len(trace.records) < 3:
        raise ArgumentError("contraction audit needs at least 3 iterations")
    t = trace.column("t")
    gaps = trace.column("model_gap")
    ratios, ratio_t = [], []
    for i in range(len(gaps) - 1):
        g0, g1 = gaps[i], gaps[i + 1]
        if np.isfinite(g0) and np.isfinite(g1) and g0 > GAP_REL:
            ratios.append(g1 / g0)
            ratio_t.append(t[i + 1])
    ratios = np.asarray(ratios)
    ratio_t = np.asarray(ratio_t)
    max_ratio = float(ratios.max()) if ratios.size else 0.0
    late = ratios[ratio_t > burn_in]
    post = float(late.max()) if late.size else 0.0
    return {"max_ratio": max_ratio, "post_burn_in_max_ratio": post,
            "satisfied": bool(post <= 1.0), "ratios": ratios}
