"""Nystrom-type gradients of diffusion eigenvectors.

For the single-measure operator ``B`` with eigenpair ``(lambda_k, phi_k)``

    grad phi_k = [B diag(phi_k) X - lambda_k diag(phi_k) Xbar] / (eps lambda_k),
    Xbar = B X,

and for the reference operator with reference matrix ``R``

    grad phi_j = [(F phi_j) R - lambda_j diag(phi_j) (F 1) R] / (eps lambda_j),
    F f = D^-1 K diag(K^T D^-1 W^-1 f) V^-1.

Both follow from differentiating ``phi = lambda^-1 B phi`` through the
kernel, using ``d/dx h(|x - y|^2 / eps) = (y - x) / eps * k`` for
``h(u) = exp(-u/2)``. With the ``exp(-u)`` profile used here the exact
derivative carries an extra factor 2; the fields are returned without it,
so they are parallel to the true gradient and half its length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, InputError, UnsupportedProfileError
from .operators import BistochasticOperator, ReferenceOperator
from .spectral import SpectralDecomposition

__all__ = [
    "GradientField",
    "LAMBDA_FLOOR",
    "barycenters_b",
    "eigen_gradient_b",
    "f_epsilon_apply",
    "eigen_gradient_c",
    "gradient_of_function",
]

LAMBDA_FLOOR = 1e-4


@dataclass(frozen=True)
class GradientField:
    vectors: np.ndarray
    eigen_index: int
    eigenvalue: float


def _matrix(points, n, name):
    arr = np.asarray(getattr(points, "points", points), dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != n:
        raise InputError(f"{name} has {arr.shape[0]} rows, expected {n}")
    return arr


def _require_gaussian(op):
    if not op.profile.is_gaussian:
        raise UnsupportedProfileError(
            f"gradient formulas need the gaussian profile, got {op.profile.name!r}"
        )


def _eigenpair(decomp: SpectralDecomposition, k: int, lambda_floor: float):
    if not 0 <= k < decomp.k:
        raise InputError(f"eigen index {k} outside [0, {decomp.k})")
    lam = float(decomp.eigenvalues[k])
    if lam <= lambda_floor:
        raise ConditioningError(
            f"eigenvalue {lam:.3g} of mode {k} is below the floor {lambda_floor:g}",
            index=k,
        )
    return decomp.phi[:, k], lam


def barycenters_b(op: BistochasticOperator, X) -> np.ndarray:
    """Diffusion barycenters ``Xbar = B X``, one row per data point."""
    return op.apply(_matrix(X, op.n, "X"))


def eigen_gradient_b(op: BistochasticOperator, decomp: SpectralDecomposition, X, k: int,
                     lambda_floor: float = LAMBDA_FLOOR) -> GradientField:
    _require_gaussian(op)
    X = _matrix(X, op.n, "X")
    phi, lam = _eigenpair(decomp, k, lambda_floor)
    xbar = op.apply(X)
    vectors = (op.apply(phi[:, None] * X) - lam * phi[:, None] * xbar) / (op.eps * lam)
    return GradientField(vectors=vectors, eigen_index=k, eigenvalue=lam)


def f_epsilon_apply(op: ReferenceOperator, f) -> np.ndarray:
    """The ``n x m`` matrix ``D^-1 K diag(K^T D^-1 W^-1 f) V^-1``."""
    _require_gaussian(op)
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n,):
        raise InputError(f"f has shape {f.shape}, expected ({op.n},)")
    K = op.K.values
    col = (K.T @ (f / (op.d * op.w))) / op.v
    return K * (1.0 / op.d)[:, None] * col[None, :]


def eigen_gradient_c(op: ReferenceOperator, decomp: SpectralDecomposition, R, k: int,
                     lambda_floor: float = LAMBDA_FLOOR) -> GradientField:
    _require_gaussian(op)
    R = _matrix(R, op.m, "R")
    phi, lam = _eigenpair(decomp, k, lambda_floor)
    rbar = f_epsilon_apply(op, np.ones(op.n)) @ R
    vectors = (f_epsilon_apply(op, phi) @ R - lam * phi[:, None] * rbar) / (lam * op.eps)
    return GradientField(vectors=vectors, eigen_index=k, eigenvalue=lam)


def gradient_of_function(op, decomp: SpectralDecomposition, X, f, truncation: int,
                         lambda_floor: float = LAMBDA_FLOOR) -> np.ndarray:
    """Gradient of ``f`` from its truncated eigen-expansion.

    Sums ``<f, phi_k> grad phi_k`` over ``1 <= k < truncation`` (the
    constant mode has zero gradient). ``X`` is the data matrix for a
    :class:`BistochasticOperator` and the reference matrix for a
    :class:`ReferenceOperator`.
    """
    truncation = int(truncation)
    if not 1 <= truncation <= decomp.k:
        raise InputError(f"truncation must lie in [1, {decomp.k}], got {truncation}")
    if isinstance(op, ReferenceOperator):
        grad = eigen_gradient_c
        dim = _matrix(X, op.m, "R").shape[1]
    else:
        grad = eigen_gradient_b
        dim = _matrix(X, op.n, "X").shape[1]
    coeffs = decomp.coefficients(f)
    out = np.zeros((op.n, dim))
    for k in range(1, truncation):
        out += coeffs[k] * grad(op, decomp, X, k, lambda_floor).vectors
    return out
