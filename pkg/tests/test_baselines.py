import numpy as np
import pytest

from perflab.baselines import (LinearModel, log_loss, log_loss_gradient, lr_fit, lr_gradient_step,
                               run_rgd_lr, run_rrm_lr)
from perflab.dataset import Dataset, gen_circles
from perflab.errors import FitError
from perflab.metrics import accuracy
from perflab.rrm import RrmSettings
from perflab.shift import MapSpec

from conftest import random_dataset


def test_separable_two_points():
    d = Dataset(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([1.0, -1.0]))
    assert accuracy(lr_fit(d), d) == 1.0


def test_fit_reaches_tolerance(rng):
    d = random_dataset(rng, 50, 3)
    m = lr_fit(d, l2=1e-3, tol=1e-6)
    assert np.linalg.norm(log_loss_gradient(m, d, 1e-3)) <= 1e-6


def test_huge_l2_shrinks_weights(rng):
    d = random_dataset(rng, 50, 3)
    assert np.linalg.norm(lr_fit(d, l2=1e6).weights) <= 1e-3


def test_single_class_rejected():
    with pytest.raises(FitError):
        lr_fit(Dataset(np.zeros((3, 1)), np.ones(3)))


def test_gradient_matches_central_differences(rng):
    for _ in range(10):
        d = random_dataset(rng, 20, 4)
        v = rng.standard_normal(5)
        g = log_loss_gradient(LinearModel(v[:-1], v[-1]), d, 0.05)
        h = 1e-5
        fd = np.empty(5)
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            up, dn = v + e, v - e
            fd[i] = (log_loss(LinearModel(up[:-1], up[-1]), d, 0.05)
                     - log_loss(LinearModel(dn[:-1], dn[-1]), d, 0.05)) / (2 * h)
        np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)


def test_zero_gradient_point_unchanged():
    x = np.array([[0.7, -1.2]])
    d = Dataset(np.vstack([x, x]), np.array([1.0, -1.0]))
    z = LinearModel.zero(2)
    out = lr_gradient_step(z, d, l2=1e-3, lr=0.1)
    np.testing.assert_array_equal(out.stacked(), z.stacked())


def test_symmetric_pair_bias_unmoved():
    d = Dataset(np.array([[1.0, 2.0], [-1.0, -2.0]]), np.array([1.0, -1.0]))
    out = lr_gradient_step(LinearModel.zero(2), d)
    assert out.bias == 0.0
    assert np.all(out.weights > 0)


def test_small_step_decreases_loss(rng):
    d = random_dataset(rng, 40, 3)
    m = LinearModel(rng.standard_normal(3), 0.3)
    assert log_loss(lr_gradient_step(m, d, 1e-3, 1e-3), d, 1e-3) < log_loss(m, d, 1e-3)


def test_vanishing_step_leaves_model(rng):
    d = random_dataset(rng, 40, 3)
    m = LinearModel(rng.standard_normal(3), 0.3)
    out = lr_gradient_step(m, d, 1e-3, 1e-12)
    assert np.max(np.abs(out.stacked() - m.stacked())) <= 1e-10


def test_identity_map_consistency_one():
    data = gen_circles(20, 0.2, seed=0)
    for runner in (run_rrm_lr,):
        tr = runner(data, MapSpec("feature_linear", d=0.0), RrmSettings(T_max=4, burn_in=0))
        np.testing.assert_allclose(tr.column("consistency")[1:], 1.0, atol=1e-12)
        assert np.all(np.isnan(tr.column("C")))


def test_rgd_trace_shape():
    data = gen_circles(20, 0.2, seed=0)
    tr = run_rgd_lr(data, MapSpec("feature_simulated", d=0.3, n_candidates=5), RrmSettings(T_max=5, burn_in=0))
    assert [r.t for r in tr.records] == [1, 2, 3, 4, 5]
    assert tr.method == "rgd_lr"
