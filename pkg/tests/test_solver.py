import numpy as np
import pytest

from perflab.dataset import Dataset, augment, gen_circles
from perflab.errors import ArgumentError
from perflab.kernel import KernelModel, KernelSpec, gram, model_dot, predict
from perflab.solver import (SolveSettings, dual_objective, primal_objective, solve, solve_gram,
                            subgradient_norm)

from conftest import random_dataset
from oracles import box_qp_projected_gradient, rbf_matrix


def two_points():
    return Dataset(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))


def test_two_point_analytic():
    rep = solve(two_points(), KernelSpec.linear(), SolveSettings(C=1.0, tol=1e-10))
    np.testing.assert_allclose(rep.model.explicit_weights(), [1.0, 0.0], atol=1e-8)
    assert rep.primal == pytest.approx(0.5, abs=1e-8)
    assert rep.dual == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("spec", [KernelSpec.linear(), KernelSpec.rbf(0.8, True), KernelSpec.rbf(0.3)])
def test_dual_matches_projected_gradient_oracle(rng, spec):
    for _ in range(5):
        data = random_dataset(rng, 15, 2)
        X = augment(data)
        K = X @ X.T if spec.kind == "linear" else rbf_matrix(X, X, spec.sigma, spec.squared_exponent)
        Q = K * np.outer(data.labels, data.labels)
        C = 5.0
        _, ref = box_qp_projected_gradient(Q, C / data.n)
        rep = solve(data, spec, SolveSettings(C=C, tol=1e-9))
        assert rep.converged
        assert rep.dual == pytest.approx(ref, abs=1e-7)
        assert rep.gap <= 1e-9 * max(1.0, abs(rep.primal))


def test_report_consistent_with_model(rng):
    data = random_dataset(rng, 30, 3)
    spec = KernelSpec.rbf(1.0, True)
    rep = solve(data, spec, SolveSettings(C=10.0, tol=1e-8))
    assert np.all(rep.alpha >= 0) and np.all(rep.alpha <= 10.0 / 30)
    assert primal_objective(data, rep.model, 10.0) == pytest.approx(rep.primal, abs=1e-9)
    assert dual_objective(data, spec, rep.alpha) == pytest.approx(rep.dual, abs=1e-9)
    assert rep.n_support == rep.model.m == int((rep.alpha > 0).sum())


def test_zero_model_primal_equals_C(rng):
    data = random_dataset(rng, 9, 2)
    z = KernelModel.zero(KernelSpec.rbf(0.5), 3)
    assert primal_objective(data, z, 2.5) == pytest.approx(2.5)


def test_subgradient_single_point_zero_model():
    x = np.array([[0.5, -1.0]])
    data = Dataset(x, np.array([1.0]))
    z = KernelModel.zero(KernelSpec.linear(), 3)
    # ||C y phi(x)|| with phi the augmented point (0.5, -1, 1)
    assert subgradient_norm(data, z, 3.0) == pytest.approx(3.0 * np.sqrt(0.25 + 1 + 1))


def test_subgradient_vanishes_without_margin_points():
    # small C puts every point strictly inside the margin, so the optimality
    # condition theta = (C/n) sum y phi(x) holds with all rows active
    data = gen_circles(20, 0.2, seed=1)
    rep = solve(data, KernelSpec.rbf(0.1), SolveSettings(C=0.1, tol=1e-10))
    f = predict(rep.model, augment(data))
    assert np.all(data.labels * f < 1)
    assert subgradient_norm(data, rep.model, 0.1) <= 1e-6


def test_subgradient_two_point_margin_rows_excluded():
    # both points sit exactly on the margin (y f = 1); the strict violator rule
    # leaves them out, so the reported norm is ||theta|| = 1
    rep = solve(two_points(), KernelSpec.linear(), SolveSettings(C=1.0, tol=1e-12))
    f = predict(rep.model, augment(two_points()))
    np.testing.assert_allclose(f * two_points().labels, 1.0, atol=1e-12)
    assert subgradient_norm(two_points(), rep.model, 1.0) == pytest.approx(rep.model.norm, abs=1e-9)


def test_warm_start_same_optimum(rng):
    data = random_dataset(rng, 40, 2)
    spec = KernelSpec.rbf(0.5, True)
    cold = solve(data, spec, SolveSettings(C=20.0, tol=1e-9))
    warm = solve(data, spec, SolveSettings(C=20.0, tol=1e-9), warm_start=cold.alpha * 0.9)
    assert warm.dual == pytest.approx(cold.dual, abs=1e-9)
    assert warm.passes <= cold.passes


def test_shrinking_does_not_change_optimum(rng):
    data = random_dataset(rng, 40, 2)
    spec = KernelSpec.rbf(0.5)
    a = solve(data, spec, SolveSettings(C=50.0, tol=1e-9, shrink=True))
    b = solve(data, spec, SolveSettings(C=50.0, tol=1e-9, shrink=False))
    assert a.dual == pytest.approx(b.dual, abs=1e-9)


def test_solver_deterministic(rng):
    data = random_dataset(rng, 30, 2)
    a = solve(data, KernelSpec.rbf(0.4), SolveSettings(C=5.0), seed=3)
    b = solve(data, KernelSpec.rbf(0.4), SolveSettings(C=5.0), seed=3)
    assert a.alpha.tobytes() == b.alpha.tobytes()


def test_max_passes_reports_not_converged(rng):
    data = random_dataset(rng, 50, 2)
    rep = solve(data, KernelSpec.rbf(0.2), SolveSettings(C=1e4, tol=1e-12, max_passes=1))
    assert not rep.converged and rep.passes == 1


def test_settings_validation():
    with pytest.raises(ArgumentError):
        SolveSettings(C=0.0)
    with pytest.raises(ArgumentError):
        SolveSettings(tol=-1.0)


def test_solve_gram_rejects_bad_diagonal():
    with pytest.raises(Exception):
        solve_gram(np.zeros((2, 2)), 1.0)
