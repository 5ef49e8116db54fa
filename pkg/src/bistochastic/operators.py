"""Diffusion operators built from a scaled kernel.

``BistochasticOperator`` acts as ``f -> D^-1 K D^-1 W^-1 f`` and
``ReferenceOperator`` as ``f -> D^-1 K V^-1 K^T D^-1 W^-1 f``; both are
self-adjoint in the inner product ``<u, v> = sum u_i v_i / w_i`` and fix the
constant vector. ``AveragingOperator`` is the row-stochastic diffusion-maps
normalization kept for comparison.

All ``apply`` methods accept a vector of length ``n`` or an ``n x p`` block
of column vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import GAUSSIAN, KernelMatrix, KernelProfile, PointCloud, build_kernel_matrix
from .measures import WeightVector, degree_vector, weight_from_degree
from .sinkhorn import (
    ScalingResult,
    SinkhornOptions,
    sinkhorn_reference,
    solve,
)

__all__ = [
    "BistochasticOperator",
    "ReferenceOperator",
    "AveragingOperator",
    "bistochastic_operator",
    "reference_operator",
    "averaging_operator",
    "apply_b",
    "apply_c",
    "apply_a",
    "generator_apply",
    "power_apply",
    "power_steps",
]


def _column_scale(f, s):
    f = np.asarray(f, dtype=float)
    return f * s if f.ndim == 1 else f * s[:, None]


def _check_len(f, n):
    f = np.asarray(f, dtype=float)
    if f.ndim not in (1, 2) or f.shape[0] != n:
        raise InputError(f"expected a vector with {n} rows, got shape {f.shape}")
    return f


@dataclass(frozen=True)
class BistochasticOperator:
    K: KernelMatrix
    d: np.ndarray
    w: np.ndarray
    eps: float
    scaling: ScalingResult | None = None

    @property
    def n(self) -> int:
        return self.d.size

    @property
    def profile(self) -> KernelProfile:
        return self.K.profile

    def apply(self, f):
        f = _check_len(f, self.n)
        inner = _column_scale(f, 1.0 / (self.d * self.w))
        return _column_scale(self.K.values @ inner, 1.0 / self.d)

    def matrix(self) -> np.ndarray:
        """Dense ``D^-1 K D^-1 W^-1``."""
        d, w = self.d, self.w
        return self.K.values / d[:, None] / (d * w)[None, :]

    def symmetric_matrix(self) -> np.ndarray:
        """``W^-1/2 D^-1 K D^-1 W^-1/2``, similar to :meth:`matrix`."""
        s = 1.0 / (self.d * np.sqrt(self.w))
        M = self.K.values * s[:, None] * s[None, :]
        return 0.5 * (M + M.T)

    def inner(self, f, g) -> float:
        return float(np.sum(np.asarray(f) * np.asarray(g) / self.w))


@dataclass(frozen=True)
class ReferenceOperator:
    K: KernelMatrix
    d: np.ndarray
    w: np.ndarray
    v: np.ndarray
    eps: float
    scaling: ScalingResult | None = None

    @property
    def n(self) -> int:
        return self.d.size

    @property
    def m(self) -> int:
        return self.v.size

    @property
    def profile(self) -> KernelProfile:
        return self.K.profile

    def apply(self, f):
        # Chained products; the n x n kernel K V^-1 K^T is never formed.
        f = _check_len(f, self.n)
        K = self.K.values
        x = _column_scale(f, 1.0 / (self.d * self.w))
        y = _column_scale(K.T @ x, 1.0 / self.v)
        return _column_scale(K @ y, 1.0 / self.d)

    def factor(self) -> np.ndarray:
        """The ``n x m`` matrix ``W^-1/2 D^-1 K V^-1/2``."""
        return (
            self.K.values
            / (self.d * np.sqrt(self.w))[:, None]
            / np.sqrt(self.v)[None, :]
        )

    def inner(self, f, g) -> float:
        return float(np.sum(np.asarray(f) * np.asarray(g) / self.w))


@dataclass(frozen=True)
class AveragingOperator:
    """Row-stochastic operator ``f -> v^-2 (K / (q q^T)) f``.

    ``q`` is the kernel degree and ``v2`` the row sums of the
    degree-normalized kernel.
    """

    K: KernelMatrix
    q: np.ndarray
    v2: np.ndarray
    eps: float

    @property
    def n(self) -> int:
        return self.q.size

    def matrix(self) -> np.ndarray:
        Kq = self.K.values / np.outer(self.q, self.q)
        return Kq / self.v2[:, None]

    def apply(self, f):
        f = _check_len(f, self.n)
        inner = _column_scale(f, 1.0 / self.q)
        return _column_scale(self.K.values @ inner, 1.0 / (self.q * self.v2))


def _weights_for(K: KernelMatrix, beta: float, weights) -> np.ndarray:
    if weights is not None:
        w = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, float)
        return WeightVector(w).weights
    return weight_from_degree(degree_vector(K), beta).weights


def bistochastic_operator(
    X,
    eps: float,
    beta: float = 1.0,
    weights=None,
    profile: KernelProfile = GAUSSIAN,
    opts: SinkhornOptions | None = None,
) -> BistochasticOperator:
    """Kernel, weights and Sinkhorn scaling for a single data set.

    ``weights`` overrides the degree-power weights ``q ** beta``.
    """
    X = X if isinstance(X, PointCloud) else PointCloud(X)
    K = build_kernel_matrix(X, X, eps, profile)
    w = _weights_for(K, beta, weights)
    scaling = solve(K, w, opts)
    return BistochasticOperator(K=K, d=scaling.d, w=w, eps=float(eps), scaling=scaling)


def reference_operator(
    X,
    R,
    eps: float,
    beta: float = 1.0,
    gamma: float = 1.0,
    weights=None,
    ref_weights=None,
    profile: KernelProfile = GAUSSIAN,
    opts: SinkhornOptions | None = None,
) -> ReferenceOperator:
    """Reference-set operator for data ``X`` and reference points ``R``.

    Data weights default to the data-data degree raised to ``beta``, and
    reference weights to the reference-reference degree raised to ``gamma``.
    """
    X = X if isinstance(X, PointCloud) else PointCloud(X)
    R = R if isinstance(R, PointCloud) else PointCloud(R)
    K = build_kernel_matrix(X, R, eps, profile)
    if weights is None:
        w = weight_from_degree(degree_vector(build_kernel_matrix(X, X, eps, profile)), beta).weights
    else:
        w = _weights_for(K, beta, weights)
    if ref_weights is None:
        v = weight_from_degree(degree_vector(build_kernel_matrix(R, R, eps, profile)), gamma).weights
    else:
        v = WeightVector(np.asarray(ref_weights, float)).weights
    scaling = sinkhorn_reference(K, v, w, opts)
    return ReferenceOperator(K=K, d=scaling.d, w=w, v=v, eps=float(eps), scaling=scaling)


def averaging_operator(X, eps: float, profile: KernelProfile = GAUSSIAN) -> AveragingOperator:
    X = X if isinstance(X, PointCloud) else PointCloud(X)
    K = build_kernel_matrix(X, X, eps, profile)
    q = degree_vector(K)
    v2 = (K.values / q[None, :]).sum(axis=1) / q
    return AveragingOperator(K=K, q=q, v2=v2, eps=float(eps))


def apply_b(op: BistochasticOperator, f):
    return op.apply(f)


def apply_c(op: ReferenceOperator, f):
    return op.apply(f)


def apply_a(op: AveragingOperator, f):
    return op.apply(f)


def generator_apply(op, f):
    """Discrete generator ``(f - op f) / eps``."""
    f = np.asarray(f, dtype=float)
    return (f - op.apply(f)) / op.eps


def power_steps(eps: float, t: float) -> int:
    """Number of applications standing in for the power ``t / eps``."""
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    steps = int(np.floor(t / eps + 0.5))
    if steps < 1:
        raise InputError(f"t / eps = {t / eps:.3g} rounds to zero steps")
    return steps


def power_apply(op, f, t: float):
    """Apply ``op`` ``round(t / eps)`` times.

    Returns
    -------
    result : ndarray
    steps : int
        The number of applications actually performed.
    """
    steps = power_steps(op.eps, t)
    out = np.asarray(f, dtype=float)
    for _ in range(steps):
        out = op.apply(out)
    return out, steps
