"""Diagonal scaling of positive kernels to bi-stochastic form.

Given a symmetric kernel ``K`` and weights ``w`` the solvers look for a
positive vector ``d`` with

    D^-1 K D^-1 W^-1 1 = 1,

and, for the reference construction with an ``n x m`` kernel and reference
weights ``v``,

    D^-1 K V^-1 K^T D^-1 W^-1 1 = 1.

The reference kernel ``K V^-1 K^T`` is only ever applied to vectors, never
formed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, InputError, NumericError
from .geometry import KernelMatrix

__all__ = [
    "SinkhornOptions",
    "ScalingResult",
    "sinkhorn_symmetric",
    "sinkhorn_symmetric_accelerated",
    "sinkhorn_reference",
    "bistochastic_residual",
    "solve",
]

log = logging.getLogger(__name__)

ITERATE_FLOOR = 1e-300
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_WINDOW = 50


@dataclass(frozen=True)
class SinkhornOptions:
    tolerance: float = 1e-10
    max_iterations: int = 1000
    variant: str = "standard"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InputError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_iterations) < 1:
            raise InputError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.variant not in ("standard", "accelerated"):
            raise InputError(f"unknown Sinkhorn variant {self.variant!r}")


@dataclass
class ScalingResult:
    """Output of a Sinkhorn solve.

    Attributes
    ----------
    d : ndarray
        Positive scaling vector.
    residual : float
        Max-norm deviation of the marginals from 1.
    iterations : int
    alpha_estimate : float
        Geometric mean of ``D_{k+1} / d``; the even/odd iterates approach
        ``d / alpha`` and ``alpha d``.
    converged : bool
    oscillation_spread : float
        Standard deviation of the consecutive-iterate ratio ``D_{k+1}/D_k``
        at termination (standard variant only, NaN otherwise).
    history : list of float
        Residual after each iteration.
    """

    d: np.ndarray
    residual: float
    iterations: int
    alpha_estimate: float
    converged: bool
    oscillation_spread: float = float("nan")
    variant: str = "standard"
    history: list = field(default_factory=list, repr=False)


def _weights(w, n, name="w"):
    arr = np.asarray(w, dtype=float)
    if arr.shape != (n,):
        raise InputError(f"{name} has length {arr.size}, expected {n}")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite and strictly positive")
    return arr


def _check_iterate(x, what):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite {what} during Sinkhorn iteration")
    if np.any(x < ITERATE_FLOOR):
        raise NumericError(f"{what} underflowed during Sinkhorn iteration")


def _marginal_residual(apply_kernel, d, w) -> float:
    return float(np.max(np.abs(apply_kernel(1.0 / (d * w)) / d - 1.0)))


def _diverging(history) -> bool:
    window = history[-DIVERGENCE_WINDOW:]
    return len(window) > 1 and window[-1] > DIVERGENCE_FACTOR * min(window)


def _standard(apply_kernel: Callable, w: np.ndarray, opts: SinkhornOptions) -> ScalingResult:
    n = w.size
    D = np.ones(n)
    history = []
    d = D
    D_next = D
    for it in range(1, int(opts.max_iterations) + 1):
        D_next = apply_kernel(1.0 / (D * w))
        _check_iterate(D_next, "iterate")
        d = np.sqrt(D_next * D)
        ratio = D_next / D
        res = _marginal_residual(apply_kernel, d, w)
        history.append(res)
        if res <= opts.tolerance:
            break
        D = D_next
    result = ScalingResult(
        d=d,
        residual=res,
        iterations=it,
        alpha_estimate=float(np.exp(np.mean(np.log(D_next / d)))),
        converged=res <= opts.tolerance,
        oscillation_spread=float(np.std(ratio)),
        variant="standard",
        history=history,
    )
    return result


def _accelerated(apply_kernel: Callable, w: np.ndarray, opts: SinkhornOptions,
                 literal: bool = False) -> ScalingResult:
    n = w.size
    D = np.ones(n)
    Dp = np.ones(n)
    history = []
    for it in range(1, int(opts.max_iterations) + 1):
        # Divide by the row sums on both sides ...
        D_next = apply_kernel(1.0 / (D * np.sqrt(Dp) * w))
        _check_iterate(D_next, "iterate")
        # ... then by the square root of the new row sums on both sides.
        base = D if literal else D_next
        Dp_next = apply_kernel(1.0 / (base * w)) / base
        _check_iterate(Dp_next, "secondary iterate")
        D, Dp = D_next, Dp_next
        s = D * np.sqrt(Dp)
        res = _marginal_residual(apply_kernel, s, w)
        if not np.isfinite(res):
            raise NumericError("non-finite residual during accelerated Sinkhorn")
        history.append(res)
        if res <= opts.tolerance:
            break
        if _diverging(history):
            partial = ScalingResult(s, res, it, 1.0, False, variant="accelerated",
                                    history=history)
            raise ConvergenceError(
                f"accelerated Sinkhorn diverging at iteration {it} (residual {res:.3g})",
                partial,
            )
    return ScalingResult(
        d=s,
        residual=res,
        iterations=it,
        alpha_estimate=1.0,
        converged=res <= opts.tolerance,
        variant="accelerated",
        history=history,
    )


def _finish(result: ScalingResult, opts: SinkhornOptions) -> ScalingResult:
    log.debug("sinkhorn %s: %d iterations, residual %.3g",
              result.variant, result.iterations, result.residual)
    if not result.converged:
        raise ConvergenceError(
            f"Sinkhorn did not reach tolerance {opts.tolerance:g} in "
            f"{result.iterations} iterations (residual {result.residual:.3g})",
            result,
        )
    return result


def _symmetric_kernel(K) -> np.ndarray:
    values = np.asarray(K, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InputError(f"expected a square kernel, got shape {values.shape}")
    if not (isinstance(K, KernelMatrix) and K.symmetric) and not np.allclose(
        values, values.T, rtol=1e-12, atol=0.0
    ):
        raise InputError("kernel matrix is not symmetric")
    if np.any(values <= 0):
        raise InputError("kernel entries must be strictly positive")
    return values


def sinkhorn_symmetric(K, w, opts: SinkhornOptions | None = None) -> ScalingResult:
    """Standard symmetric Sinkhorn iteration.

    Iterates ``D_{k+1} = diag(K D_k^-1 W^-1 1)`` from ``D_0 = I`` and
    returns the geometric mean ``d = sqrt(D_{k+1} D_k)`` of the last pair,
    which removes the even/odd oscillation of the raw iterates.

    Raises
    ------
    ConvergenceError
        If the residual is above ``opts.tolerance`` after
        ``opts.max_iterations`` iterations; ``err.result`` holds the last
        iterate.
    NumericError
        On non-finite or underflowing iterates.
    """
    opts = opts or SinkhornOptions()
    values = _symmetric_kernel(K)
    w = _weights(w, values.shape[0])
    return _finish(_standard(values.__matmul__, w, opts), opts)


def sinkhorn_symmetric_accelerated(K, w, opts: SinkhornOptions | None = None,
                                   literal: bool = False) -> ScalingResult:
    """Accelerated symmetric scaling with a secondary square-root correction.

    Each sweep divides by the row sums on both sides and then by the square
    root of the row sums of the resulting matrix on both sides; the scaling
    is the product ``d = D_k sqrt(D'_k)``. Linearized about the solution the
    error contracts by at most a factor 1/8 per sweep for a positive
    semi-definite kernel, versus ``lambda_1`` for the standard iteration.

    With ``literal=True`` the secondary row sums are taken with the previous
    iterate ``D_k`` instead of ``D_{k+1}``. That recursion is unstable along
    the constant direction (growth factor about 1.618), so it is only useful
    for demonstrating the divergence guard, which raises
    :class:`ConvergenceError` once the residual exceeds ten times its
    minimum over the last 50 sweeps.
    """
    opts = opts or SinkhornOptions(variant="accelerated")
    values = _symmetric_kernel(K)
    w = _weights(w, values.shape[0])
    return _finish(_accelerated(values.__matmul__, w, opts, literal=literal), opts)


def _reference_apply(K: np.ndarray, v: np.ndarray):
    Kt = np.ascontiguousarray(K.T)

    def apply(x):
        return K @ ((Kt @ x) / v)

    return apply


def sinkhorn_reference(K, v, w, opts: SinkhornOptions | None = None) -> ScalingResult:
    """Scaling for the reference construction ``D^-1 K V^-1 K^T D^-1 W^-1``.

    Uses the same iteration as the symmetric solvers with the implied
    ``n x n`` kernel applied as chained products ``K (V^-1 (K^T x))``.
    """
    opts = opts or SinkhornOptions()
    values = np.asarray(K, dtype=float)
    if values.ndim != 2:
        raise InputError("reference kernel must be 2-D")
    if np.any(values <= 0):
        raise InputError("kernel entries must be strictly positive")
    n, m = values.shape
    v = _weights(v, m, "v")
    w = _weights(w, n, "w")
    apply = _reference_apply(values, v)
    if opts.variant == "accelerated":
        return _finish(_accelerated(apply, w, opts), opts)
    return _finish(_standard(apply, w, opts), opts)


def solve(K, w, opts: SinkhornOptions | None = None) -> ScalingResult:
    """Dispatch to the symmetric solver selected by ``opts.variant``."""
    opts = opts or SinkhornOptions()
    if opts.variant == "accelerated":
        return sinkhorn_symmetric_accelerated(K, w, opts)
    return sinkhorn_symmetric(K, w, opts)


def bistochastic_residual(K, d, w, v=None) -> float:
    """Max deviation of the row and column marginals from 1.

    Row marginal ``i`` is ``sum_j K_ij / (d_i d_j w_j)`` and column marginal
    ``j`` is ``sum_i K_ij / (d_i d_j w_i)``; they coincide for a symmetric
    kernel. With ``v`` given the kernel is ``K V^-1 K^T``.
    """
    values = np.asarray(K, dtype=float)
    d = np.asarray(d, dtype=float)
    w = np.asarray(w, dtype=float)
    if v is None:
        if values.shape != (d.size, d.size) or w.size != d.size:
            raise InputError("inconsistent dimensions for residual")
        apply = values.__matmul__
        apply_t = values.T.__matmul__
    else:
        v = np.asarray(v, dtype=float)
        if values.shape != (d.size, v.size) or w.size != d.size:
            raise InputError("inconsistent dimensions for residual")
        apply = _reference_apply(values, v)
        apply_t = apply
    x = 1.0 / (d * w)
    rows = apply(x) / d
    cols = apply_t(x) / d
    return float(max(np.max(np.abs(rows - 1.0)), np.max(np.abs(cols - 1.0))))
