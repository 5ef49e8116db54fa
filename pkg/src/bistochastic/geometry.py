"""Point clouds, pairwise distances and kernel matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import InputError, NumericError

__all__ = [
    "PointCloud",
    "KernelProfile",
    "KernelMatrix",
    "GAUSSIAN",
    "pairwise_sq_dists",
    "build_kernel_matrix",
    "kernel_moments",
    "median_bandwidth",
]

# Entries below UNDERFLOW are replaced by the smallest normal double so the
# kernel stays strictly positive.
UNDERFLOW = 1e-300
KERNEL_FLOOR = np.finfo(float).tiny
# Smallest accepted c in h(u) <= h(0) exp(-c u).
MIN_DECAY_RATE = 0.01


class PointCloud:
    """An immutable set of ``n`` points in ``R^d``.

    Parameters
    ----------
    points : array_like, shape (n, d) or (n,)
        Coordinates. A 1-D array is read as ``n`` points in ``R^1``.
    """

    __slots__ = ("_points",)

    def __init__(self, points):
        arr = np.array(points, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise InputError(f"points must be a 2-D array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"point cloud needs n >= 1 and d >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("point coordinates must be finite")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def d(self) -> int:
        return self._points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"PointCloud(n={self.n}, d={self.d})"

    def subset(self, indices) -> "PointCloud":
        return PointCloud(self._points[np.asarray(indices, dtype=int)])

    def diameter(self) -> float:
        """Largest pairwise distance (exact, O(n^2) memory in blocks)."""
        if self.n == 1:
            return 0.0
        return float(np.sqrt(pairwise_sq_dists(self, self).max()))


def _as_cloud(a) -> PointCloud:
    return a if isinstance(a, PointCloud) else PointCloud(a)


@dataclass(frozen=True)
class KernelProfile:
    """Radial kernel shape ``h(u)`` evaluated at ``u = |x - y|^2 / eps``.

    ``func`` must be vectorized over numpy arrays and decay at least
    exponentially. At construction ``h(u) <= h(0) exp(-c u)`` is checked on
    a grid over ``[1, 1000]`` with ``c = MIN_DECAY_RATE``; algebraic tails
    such as ``1 / (1 + u)`` fail this check.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    _moments: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        h0 = float(self.func(np.array([0.0]))[0])
        if not h0 > 0:
            raise InputError(f"profile {self.name!r} must have h(0) > 0")
        u = np.geomspace(1.0, 1000.0, 400)
        hu = np.asarray(self.func(u), dtype=float)
        if np.any(hu < 0) or np.any(hu > h0):
            raise InputError(f"profile {self.name!r} must map into [0, h(0)]")
        with np.errstate(divide="ignore"):
            rates = -np.log(np.maximum(hu, 1e-320) / h0) / u
        if not rates.min() >= MIN_DECAY_RATE:
            raise InputError(f"profile {self.name!r} does not decay exponentially")

    def __call__(self, u):
        return self.func(u)

    @property
    def h0(self) -> float:
        return float(self.func(np.array([0.0]))[0])

    @property
    def is_gaussian(self) -> bool:
        return self.name == "gaussian"


def _gaussian(u):
    return np.exp(-np.asarray(u, dtype=float))


GAUSSIAN = KernelProfile("gaussian", _gaussian)


@dataclass(frozen=True)
class KernelMatrix:
    """Dense evaluations ``h(|a_i - b_j|^2 / eps)``.

    ``symmetric`` is true exactly when the row and column clouds were the
    same object.
    """

    values: np.ndarray
    eps: float
    profile: KernelProfile = GAUSSIAN
    symmetric: bool = False

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def pairwise_sq_dists(a, b) -> np.ndarray:
    """Squared Euclidean distances between the rows of two clouds.

    Uses the explicit difference form rather than the expanded
    ``|a|^2 + |b|^2 - 2 a.b`` identity, so nearby points do not lose
    precision to cancellation.
    """
    a = _as_cloud(a)
    b = _as_cloud(b)
    if a.d != b.d:
        raise InputError(f"dimension mismatch: {a.d} vs {b.d}")
    A, B = a.points, b.points
    out = np.zeros((a.n, b.n))
    for c in range(a.d):
        diff = A[:, c, None] - B[None, :, c]
        out += diff * diff
    if a is b:
        np.fill_diagonal(out, 0.0)
    return out


def build_kernel_matrix(a, b, eps: float, profile: KernelProfile = GAUSSIAN) -> KernelMatrix:
    """Assemble ``K(i, j) = h(|a_i - b_j|^2 / eps)``."""
    if not (np.isfinite(eps) and eps > 0):
        raise InputError(f"eps must be a positive finite number, got {eps}")
    a = _as_cloud(a)
    same = a is b
    b = a if same else _as_cloud(b)
    dist = pairwise_sq_dists(a, b)
    if not np.all(np.isfinite(dist)):
        raise InputError("non-finite squared distance")
    values = np.asarray(profile(dist / eps), dtype=float)
    values[values < UNDERFLOW] = KERNEL_FLOOR
    if same:
        # Exact symmetry regardless of how the profile rounds.
        values = 0.5 * (values + values.T)
    values.setflags(write=False)
    return KernelMatrix(values=values, eps=float(eps), profile=profile, symmetric=same)


def kernel_moments(profile: KernelProfile, dim: int) -> tuple[float, float]:
    """Zeroth and second moments of ``h(|t|^2)`` over ``R^dim``.

    Returns ``(m0, m2)`` with ``m0 = int h(|t|^2) dt`` and
    ``m2 = int t_1^2 h(|t|^2) dt``, reduced to one radial integral each.
    For ``h(u) = exp(-u)`` these are ``pi^(dim/2)`` and ``pi^(dim/2) / 2``.
    """
    dim = int(dim)
    if dim < 1:
        raise InputError(f"dim must be >= 1, got {dim}")
    key = dim
    if key in profile._moments:
        return profile._moments[key]

    sphere = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)

    def radial(power):
        f = lambda r: float(profile(np.array([r * r]))[0]) * r**power
        val, err = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        if not np.isfinite(val) or err > 1e-9 * abs(val):
            raise NumericError(f"moment quadrature did not converge (err={err:.3g})")
        return val

    m0 = sphere * radial(dim - 1)
    # t_1^2 averages to |t|^2 / dim over the sphere.
    m2 = sphere * radial(dim + 1) / dim
    if not (m0 > 0 and m2 > 0):
        raise NumericError("kernel moments must be positive")
    profile._moments[key] = (m0, m2)
    return m0, m2


def median_bandwidth(a, scale: float = 1.0) -> float:
    """``scale`` times the median off-diagonal squared distance."""
    a = _as_cloud(a)
    if a.n < 2:
        raise InputError("median bandwidth needs at least two points")
    if not scale > 0:
        raise InputError(f"scale must be positive, got {scale}")
    dist = pairwise_sq_dists(a, a)
    iu = np.triu_indices(a.n, k=1)
    med = float(np.median(dist[iu]))
    if med <= 0:
        raise InputError("median squared distance is zero (duplicate points)")
    return scale * med
