"""Weight vectors for the data and reference measures.

The discrete measures put mass ``1/n`` on each data point (``1/m`` on each
reference point). Those constant factors are left out of the degree and
weight vectors here: they only rescale the Sinkhorn solution ``d`` by a
constant, which leaves the normalized operator and its eigenvectors
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import KernelMatrix

__all__ = ["WeightVector", "degree_vector", "weight_from_degree", "explicit_weights"]


@dataclass(frozen=True)
class WeightVector:
    """Strictly positive weights ``w`` defining ``dmu_hat = dmu / w``.

    ``scheme`` is ``"explicit"`` or ``"degree_power"``; ``beta`` is the
    exponent for the latter.
    """

    weights: np.ndarray
    scheme: str = "explicit"
    beta: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InputError("weights must be a non-empty 1-D vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InputError("weights must be finite and strictly positive")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


def explicit_weights(values) -> WeightVector:
    return WeightVector(np.asarray(values, dtype=float), scheme="explicit")


def degree_vector(K: KernelMatrix) -> np.ndarray:
    """Row sums of the kernel, a density estimate up to a constant."""
    values = np.asarray(K)
    if values.ndim != 2 or values.shape[1] < 1:
        raise InputError("kernel matrix needs at least one column")
    return values.sum(axis=1)


def weight_from_degree(degrees, beta: float) -> WeightVector:
    """``w_i = degrees_i ** beta`` with ``-1 <= beta <= 1``.

    ``beta = 1`` gives ``w = q`` (generator tends to the Laplacian),
    ``beta = -1`` gives ``w = 1 / q``.
    """
    if not -1.0 <= beta <= 1.0:
        raise InputError(f"beta must lie in [-1, 1], got {beta}")
    q = np.asarray(degrees, dtype=float)
    if np.any(q <= 0):
        raise InputError("degrees must be strictly positive")
    if beta == 1:
        w = q.copy()
    elif beta == 0:
        w = np.ones_like(q)
    else:
        w = q**beta
    return WeightVector(w, scheme="degree_power", beta=float(beta))
