import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perflab.errors import ArgumentError, UndefinedConsistencyError
from perflab.kernel import (TAIL_CUTOFF, KernelModel, KernelSpec, gram, kernel_eval, model_cosine,
                            model_diff_norm, model_dot, predict)

from oracles import rbf_matrix


def test_rbf_hand_values():
    x, x2 = np.zeros(2), np.array([0.3, 0.4])
    assert kernel_eval(KernelSpec.rbf(0.1), x, x2) == pytest.approx(np.exp(-25.0), rel=1e-14)
    assert kernel_eval(KernelSpec.rbf(0.1, True), x, x2) == pytest.approx(np.exp(-12.5), rel=1e-14)
    assert kernel_eval(KernelSpec.linear(), np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0


def test_gram_matches_loop(rng):
    A, B = rng.standard_normal((6, 3)), rng.standard_normal((4, 3))
    for sq in (False, True):
        np.testing.assert_allclose(gram(KernelSpec.rbf(0.7, sq), A, B), rbf_matrix(A, B, 0.7, sq),
                                   rtol=1e-13, atol=0)
    np.testing.assert_allclose(gram(KernelSpec.linear(), A, B), A @ B.T)


def test_gram_symmetric_unit_diagonal(rng):
    A = rng.standard_normal((8, 2))
    K = gram(KernelSpec.rbf(0.5), A, A)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_allclose(np.diag(K), 1.0)


def test_gram_width_mismatch():
    with pytest.raises(ArgumentError):
        gram(KernelSpec.linear(), np.zeros((2, 3)), np.zeros((2, 2)))


def test_predict_matches_explicit_sum(rng):
    S, X = rng.standard_normal((5, 3)), rng.standard_normal((7, 3))
    beta = rng.standard_normal(5)
    m = KernelModel(S, beta, KernelSpec.rbf(0.9))
    np.testing.assert_allclose(predict(m, X), rbf_matrix(X, S, 0.9) @ beta, rtol=1e-12, atol=1e-15)
    lin = KernelModel(S, beta, KernelSpec.linear())
    np.testing.assert_allclose(predict(lin, X), X @ (S.T @ beta), rtol=1e-12)


def test_predict_tail_cutoff_error_bound(rng):
    # terms dropped by the cutoff each weigh below exp(-cutoff) * |beta_j|
    S, X = rng.uniform(-2, 2, (40, 2)), rng.uniform(-2, 2, (300, 2))
    beta = rng.standard_normal(40)
    m = KernelModel(S, beta, KernelSpec.rbf(0.1))
    exact = rbf_matrix(X, S, 0.1) @ beta
    bound = np.abs(beta).sum() * np.exp(-TAIL_CUTOFF) + 1e-14
    assert np.max(np.abs(predict(m, X) - exact)) <= bound


def test_zero_model():
    z = KernelModel.zero(KernelSpec.rbf(0.1), 3)
    np.testing.assert_array_equal(predict(z, np.ones((4, 3))), 0.0)
    assert z.norm == 0.0
    with pytest.raises(UndefinedConsistencyError):
        model_cosine(z, z)


def test_model_algebra_rbf_against_dense(rng):
    spec = KernelSpec.rbf(0.6)
    S1, S2 = rng.standard_normal((4, 2)), rng.standard_normal((3, 2))
    b1, b2 = rng.standard_normal(4), rng.standard_normal(3)
    m1, m2 = KernelModel(S1, b1, spec), KernelModel(S2, b2, spec)
    S = np.vstack([S1, S2])
    K = rbf_matrix(S, S, 0.6)
    v1, v2 = np.concatenate([b1, 0 * b2]), np.concatenate([0 * b1, b2])
    assert model_dot(m1, m2) == pytest.approx(v1 @ K @ v2, rel=1e-12)
    assert model_diff_norm(m1, m2) == pytest.approx(np.sqrt((v1 - v2) @ K @ (v1 - v2)), rel=1e-10)


def test_spec_mismatch_rejected(rng):
    S = rng.standard_normal((2, 2))
    with pytest.raises(ArgumentError):
        model_dot(KernelModel(S, [1, 1], KernelSpec.rbf(0.1)), KernelModel(S, [1, 1], KernelSpec.rbf(0.2)))


def test_explicit_weights_only_linear(rng):
    m = KernelModel(rng.standard_normal((2, 2)), [1, 1], KernelSpec.rbf(0.1))
    with pytest.raises(ArgumentError):
        m.explicit_weights()


@settings(max_examples=50, deadline=None)
@given(c=st.floats(0.01, 100.0), seed=st.integers(0, 2 ** 31))
def test_cosine_scale_invariant(c, seed):
    rng = np.random.default_rng(seed)
    spec = KernelSpec.rbf(0.5)
    m1 = KernelModel(rng.standard_normal((4, 2)), rng.standard_normal(4), spec)
    m2 = KernelModel(rng.standard_normal((3, 2)), rng.standard_normal(3), spec)
    assert model_cosine(m1.scaled(c), m2) == pytest.approx(model_cosine(m1, m2), abs=1e-12)
    assert model_cosine(m1, m1.scaled(c)) == pytest.approx(1.0, abs=1e-12)
    assert -1.0 <= model_cosine(m1, m2) <= 1.0
