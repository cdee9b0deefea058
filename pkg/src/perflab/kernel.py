"""Kernels, Gram matrices and algebra over implicit models sum_i beta_i phi(s_i)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _core
from .errors import ArgumentError, UndefinedConsistencyError

# predict skips RBF terms with exponent above this (weight below 4e-18 of the coefficient)
TAIL_CUTOFF = 40.0


@dataclass(frozen=True)
class KernelSpec:
    """``kind`` is "linear" or "rbf".

    The RBF exponent is ||x - x'|| / (2 sigma^2) by default; with
    ``squared_exponent=True`` it is the conventional ||x - x'||^2 / (2 sigma^2).
    """

    kind: str = "rbf"
    sigma: float = 0.1
    squared_exponent: bool = False

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ArgumentError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ArgumentError(f"rbf sigma must be positive, got {self.sigma}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear", 1.0, False)

    @classmethod
    def rbf(cls, sigma: float, squared_exponent: bool = False) -> "KernelSpec":
        return cls("rbf", sigma, squared_exponent)


def _as_points(A) -> np.ndarray:
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2:
        raise ArgumentError(f"point set must be 2-D, got shape {A.shape}")
    return A


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ArgumentError(f"width mismatch: {x.shape} vs {x2.shape}")
    if spec.kind == "linear":
        return float(x @ x2)
    diff = x - x2
    dist = float(diff @ diff)
    if not spec.squared_exponent:
        dist = np.sqrt(dist)
    return float(np.exp(-dist / (2.0 * spec.sigma ** 2)))


def gram(spec: KernelSpec, A, B) -> np.ndarray:
    """|A| x |B| matrix of kernel values."""
    A = _as_points(A)
    B = _as_points(B)
    if A.shape[1] != B.shape[1]:
        raise ArgumentError(f"width mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        return A @ B.T
    return _core.gram_rbf(A, B, spec.sigma, spec.squared_exponent)


@dataclass(frozen=True, eq=False)
class KernelModel:
    """theta = sum_j coeffs[j] * phi(support[j]); an empty support is the zero model."""

    support: np.ndarray
    coeffs: np.ndarray
    spec: KernelSpec

    def __post_init__(self):
        S = np.array(self.support, dtype=float, copy=True)
        b = np.array(self.coeffs, dtype=float, copy=True).ravel()
        if S.ndim != 2 or S.shape[0] != b.shape[0]:
            raise ArgumentError(f"support {S.shape} and coeffs {b.shape} disagree")
        if not np.all(np.isfinite(b)):
            raise ArgumentError("model coefficients must be finite")
        S = np.ascontiguousarray(S)
        S.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "support", S)
        object.__setattr__(self, "coeffs", b)

    @classmethod
    def zero(cls, spec: KernelSpec, width: int) -> "KernelModel":
        return cls(np.zeros((0, width)), np.zeros(0), spec)

    @property
    def width(self) -> int:
        return self.support.shape[1]

    @property
    def m(self) -> int:
        return self.support.shape[0]

    def scaled(self, c: float) -> "KernelModel":
        return KernelModel(self.support, c * self.coeffs, self.spec)

    @cached_property
    def sq_norm(self) -> float:
        return model_dot(self, self)

    @property
    def norm(self) -> float:
        return float(np.sqrt(max(0.0, self.sq_norm)))

    def explicit_weights(self) -> np.ndarray:
        """Weight vector sum_j beta_j s_j; only defined for the linear kernel."""
        if self.spec.kind != "linear":
            raise ArgumentError("explicit weights exist only for the linear kernel")
        return self.support.T @ self.coeffs


def predict(model: KernelModel, X) -> np.ndarray:
    X = _as_points(X)
    if X.shape[1] != model.width:
        raise ArgumentError(f"width mismatch: model {model.width}, points {X.shape[1]}")
    if model.m == 0:
        return np.zeros(X.shape[0])
    if model.spec.kind == "linear":
        return gram(model.spec, X, model.support) @ model.coeffs
    return _core.predict_rbf(model.support, model.coeffs, X,
                             model.spec.sigma, model.spec.squared_exponent, TAIL_CUTOFF)


def _check_pair(m1: KernelModel, m2: KernelModel):
    if m1.spec != m2.spec:
        raise ArgumentError(f"kernel spec mismatch: {m1.spec} vs {m2.spec}")
    if m1.width != m2.width:
        raise ArgumentError(f"width mismatch: {m1.width} vs {m2.width}")


def model_dot(m1: KernelModel, m2: KernelModel) -> float:
    _check_pair(m1, m2)
    if m1.m == 0 or m2.m == 0:
        return 0.0
    return float(m1.coeffs @ gram(m1.spec, m1.support, m2.support) @ m2.coeffs)


def model_diff_norm(m1: KernelModel, m2: KernelModel) -> float:
    """||theta_1 - theta_2|| via the expanded quadratic form, clamped at zero."""
    cross = model_dot(m1, m2)
    return float(np.sqrt(max(0.0, m1.sq_norm + m2.sq_norm - 2.0 * cross)))


def model_cosine(m1: KernelModel, m2: KernelModel) -> float:
    cross = model_dot(m1, m2)
    n1, n2 = m1.norm, m2.norm
    if n1 == 0.0 or n2 == 0.0:
        raise UndefinedConsistencyError("cosine undefined for a zero-norm model")
    return float(np.clip(cross / (n1 * n2), -1.0, 1.0))
