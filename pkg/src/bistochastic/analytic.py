"""Closed-form Neumann eigenfunctions, samplers and comparison helpers.

Three domains cover the validation experiments: the rectangle
``[0, a] x [0, b]``, the unit disc, and the unit circle embedded in the
plane. Laplacians are positive semi-definite throughout, so an eigenfunction
``f`` with eigenvalue ``mu`` satisfies ``-(f_xx + f_yy) = mu f``.

Random samples use numpy's ``default_rng`` (PCG64) seeded explicitly, so a
given ``(domain, n, seed)`` always produces the same cloud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .geometry import PointCloud

__all__ = [
    "Rectangle",
    "Disc",
    "Circle",
    "AnalyticMode",
    "rectangle_mode",
    "rectangle_modes_sorted",
    "bessel_j0",
    "bessel_j1",
    "bessel_j2",
    "j1prime_root",
    "disc_mode",
    "circle_mode",
    "circle_heat_coefficient",
    "sample_domain",
    "generator_slope_fit",
    "subspace_residual",
    "field_projection_residual",
    "mean_abs_cosine",
    "interior_mask",
]

# ---------------------------------------------------------------------------
# Bessel functions of the first kind, orders 0..2
# ---------------------------------------------------------------------------

SERIES_LIMIT = 12.0
BESSEL_WINDOW = 50.0


def _series(order: int, x: np.ndarray) -> np.ndarray:
    # J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    half = 0.5 * x
    term = half**order / math.factorial(order)
    total = term.copy()
    q = -half * half
    for k in range(1, 80):
        term = term * q / (k * (k + order))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _asymptotic(order: int, x: np.ndarray) -> np.ndarray:
    # Hankel expansion, truncated at its smallest term.
    mu = 4.0 * order * order
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    term = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    last = np.full(x.shape, np.inf)
    for k in range(1, 60):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        done |= mag > last
        live = ~done
        if not live.any():
            break
        if k % 2 == 1:
            Q = np.where(live, Q + (1 if (k // 2) % 2 == 0 else -1) * term, Q)
        else:
            P = np.where(live, P + (-1 if (k // 2) % 2 == 1 else 1) * term, P)
        last = np.where(live, mag, last)
    chi = x - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi))


def _bessel(order: int, x):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(np.abs(x) > BESSEL_WINDOW) or not np.all(np.isfinite(x)):
        raise InputError(f"Bessel argument outside [-{BESSEL_WINDOW:g}, {BESSEL_WINDOW:g}]")
    ax = np.abs(x)
    out = np.empty_like(x)
    small = ax <= SERIES_LIMIT
    if small.any():
        out[small] = _series(order, ax[small])
    if (~small).any():
        out[~small] = _asymptotic(order, ax[~small])
    if order % 2 == 1:
        out = np.where(x < 0, -out, out)
    return float(out[0]) if scalar else out


def bessel_j0(x):
    return _bessel(0, x)


def bessel_j1(x):
    """Bessel function ``J_1`` on ``|x| <= 50``, absolute error below 1e-10."""
    return _bessel(1, x)


def bessel_j2(x):
    return _bessel(2, x)


def _j1_over_x(z):
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, 0.5)
    nz = np.abs(z) > 1e-8
    out[nz] = bessel_j1(z[nz]) / z[nz]
    return out


def _j2_over_x2(z):
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, 0.125)
    nz = np.abs(z) > 1e-4
    out[nz] = bessel_j2(z[nz]) / z[nz] ** 2
    return out


def _j1prime(x: float) -> float:
    return bessel_j0(x) - bessel_j1(x) / x


_ROOT_CACHE: list[float] = []


def j1prime_root() -> float:
    """Smallest positive zero of ``J_1'``, by bisection (about 1.8412)."""
    if _ROOT_CACHE:
        return _ROOT_CACHE[0]
    lo, hi = 1.0, 3.0
    flo = _j1prime(lo)
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        fm = _j1prime(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    _ROOT_CACHE.append(0.5 * (lo + hi))
    return _ROOT_CACHE[0]


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rectangle:
    a: float = 1.5
    b: float = 1.0

    @property
    def diameter(self) -> float:
        return math.hypot(self.a, self.b)

    def boundary_distance(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        return np.minimum.reduce([x, self.a - x, y, self.b - y])

    def sample(self, n, rng) -> np.ndarray:
        return rng.uniform(size=(n, 2)) * np.array([self.a, self.b])


@dataclass(frozen=True)
class Disc:
    @property
    def diameter(self) -> float:
        return 2.0

    def boundary_distance(self, pts) -> np.ndarray:
        return 1.0 - np.linalg.norm(np.asarray(pts, dtype=float), axis=1)

    def sample(self, n, rng) -> np.ndarray:
        r = np.sqrt(rng.uniform(size=n))
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass(frozen=True)
class Circle:
    @property
    def diameter(self) -> float:
        return 2.0

    def boundary_distance(self, pts) -> np.ndarray:
        return np.full(np.asarray(pts).shape[0], np.inf)

    def sample(self, n, rng) -> np.ndarray:
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return np.column_stack([np.cos(theta), np.sin(theta)])


def sample_domain(domain, n: int, seed: int) -> PointCloud:
    """Uniform sample of ``n`` points from ``domain``."""
    if int(n) < 1:
        raise InputError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return PointCloud(domain.sample(int(n), rng))


def interior_mask(domain, pts, fraction: float = 0.1) -> np.ndarray:
    """Points farther than ``fraction * diameter`` from the boundary."""
    return domain.boundary_distance(pts) > fraction * domain.diameter


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticMode:
    """A Neumann eigenfunction with its eigenvalue and derivatives.

    ``value``, ``gradient`` and ``laplacian`` take an ``(n, 2)`` array of
    points. ``laplacian`` returns ``-(f_xx + f_yy)`` built from second
    derivatives of the closed form.
    """

    domain: object
    indices: tuple
    eigenvalue: float
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]


def rectangle_mode(p: int, q: int, a: float = 1.5, b: float = 1.0) -> AnalyticMode:
    """``cos(p pi x / a) cos(q pi y / b)`` on ``[0, a] x [0, b]``."""
    if not (a > 0 and b > 0):
        raise InputError("rectangle sides must be positive")
    if p < 0 or q < 0:
        raise InputError("mode indices must be nonnegative")
    kx, ky = p * math.pi / a, q * math.pi / b

    def value(pts):
        pts = np.asarray(pts, dtype=float)
        return np.cos(kx * pts[:, 0]) * np.cos(ky * pts[:, 1])

    def gradient(pts):
        pts = np.asarray(pts, dtype=float)
        cx, cy = np.cos(kx * pts[:, 0]), np.cos(ky * pts[:, 1])
        sx, sy = np.sin(kx * pts[:, 0]), np.sin(ky * pts[:, 1])
        return np.column_stack([-kx * sx * cy, -ky * cx * sy])

    def laplacian(pts):
        pts = np.asarray(pts, dtype=float)
        cx, cy = np.cos(kx * pts[:, 0]), np.cos(ky * pts[:, 1])
        fxx = -kx * kx * cx * cy
        fyy = -ky * ky * cx * cy
        return -(fxx + fyy)

    return AnalyticMode(Rectangle(a, b), (p, q), kx * kx + ky * ky, value, gradient, laplacian)


def rectangle_modes_sorted(count: int, a: float = 1.5, b: float = 1.0,
                           include_constant: bool = False) -> list[AnalyticMode]:
    """The first ``count`` rectangle modes by eigenvalue (ties by index)."""
    span = count + 2
    modes = [rectangle_mode(p, q, a, b) for p in range(span) for q in range(span)]
    modes.sort(key=lambda m: (round(m.eigenvalue, 12), m.indices))
    if not include_constant:
        modes = modes[1:]
    return modes[:count]


def disc_mode(variant: str = "cos") -> AnalyticMode:
    """``J_1(lam r) cos(theta)`` or ``J_1(lam r) sin(theta)`` on the unit disc.

    ``lam`` is the first zero of ``J_1'``. In Cartesian form the cos mode is
    ``x * lam * s(lam r)`` with ``s(z) = J_1(z)/z``, and ``s'(z) = -J_2(z)/z``
    gives a gradient that is finite at the origin.
    """
    if variant not in ("cos", "sin"):
        raise InputError(f"variant must be 'cos' or 'sin', got {variant!r}")
    lam = j1prime_root()
    axis = 0 if variant == "cos" else 1

    def value(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        return pts[:, axis] * lam * _j1_over_x(lam * r)

    def gradient(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        s = _j1_over_x(lam * r)
        t = _j2_over_x2(lam * r)
        c = pts[:, axis]
        g = -lam**3 * t[:, None] * c[:, None] * pts
        g[:, axis] += lam * s
        return g

    def laplacian(pts):
        # -(f_rr + f_r / r + f_thth / r^2) in polar form, J_1'' from Bessel's equation.
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        z = lam * r
        ang = pts[:, axis] / r
        j1 = bessel_j1(z)
        j1p = bessel_j0(z) - _j1_over_x(z)
        j1pp = -j1p / z - (1.0 - 1.0 / z**2) * j1
        f_rr = lam * lam * j1pp * ang
        f_r = lam * j1p * ang
        f_thth = -j1 * ang
        return -(f_rr + f_r / r + f_thth / r**2)

    return AnalyticMode(Disc(), (1, variant), lam * lam, value, gradient, laplacian)


def circle_mode(k: int, variant: str = "cos") -> AnalyticMode:
    """``cos(k theta)`` or ``sin(k theta)`` on the unit circle, eigenvalue ``k^2``.

    Gradients are tangent vectors in the ambient plane.
    """
    if int(k) < 1:
        raise InputError(f"k must be a positive integer, got {k}")
    if variant not in ("cos", "sin"):
        raise InputError(f"variant must be 'cos' or 'sin', got {variant!r}")
    k = int(k)
    trig, dtrig = (np.cos, lambda u: -np.sin(u)) if variant == "cos" else (np.sin, np.cos)

    def theta(pts):
        pts = np.asarray(pts, dtype=float)
        return np.arctan2(pts[:, 1], pts[:, 0])

    def value(pts):
        return trig(k * theta(pts))

    def gradient(pts):
        th = theta(pts)
        tangent = np.column_stack([-np.sin(th), np.cos(th)])
        return (k * dtrig(k * th))[:, None] * tangent

    def laplacian(pts):
        # -d^2/dtheta^2 of trig(k theta)
        return k * k * trig(k * theta(pts))

    return AnalyticMode(Circle(), (k, variant), float(k * k), value, gradient, laplacian)


def circle_heat_coefficient(k: int, t: float) -> float:
    """Heat semigroup multiplier ``exp(-k^2 t)`` of the ``k``-th circle mode."""
    return math.exp(-(k * k) * t)


# ---------------------------------------------------------------------------
# Fits and comparisons
# ---------------------------------------------------------------------------


def generator_slope_fit(pairs, eps: float) -> float:
    """Least-squares slope through the origin of ``(1 - lambda) / eps`` vs ``mu``.

    ``pairs`` holds ``(mu_analytic, lambda_measured)`` tuples.
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise InputError("need at least two (mu, lambda) pairs")
    mu = arr[:, 0]
    rate = (1.0 - arr[:, 1]) / eps
    return float(mu @ rate / (mu @ mu))


def _orthonormal_basis(basis: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(np.asarray(basis, dtype=float))
    return Q


def subspace_residual(vectors, basis) -> np.ndarray:
    """Relative norm of each column of ``vectors`` outside ``span(basis)``."""
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    Q = _orthonormal_basis(basis)
    resid = V - Q @ (Q.T @ V)
    return np.linalg.norm(resid, axis=0) / np.linalg.norm(V, axis=0)


def field_projection_residual(field, basis_fields, mask=None) -> float:
    """Relative part of a vector field outside the span of other fields.

    Fields are ``(n, d)`` arrays compared as flattened vectors over the
    rows selected by ``mask``; the coefficients are global, not per point.
    """
    field = np.asarray(field, dtype=float)
    mask = np.ones(field.shape[0], dtype=bool) if mask is None else np.asarray(mask)
    target = field[mask].ravel()
    basis = np.column_stack([np.asarray(b, dtype=float)[mask].ravel() for b in basis_fields])
    return float(subspace_residual(target, basis)[0])


def mean_abs_cosine(field, reference, mask=None) -> float:
    """Mean pointwise cosine between two fields, up to one global sign."""
    field = np.asarray(field, dtype=float)
    reference = np.asarray(reference, dtype=float)
    mask = np.ones(field.shape[0], dtype=bool) if mask is None else np.asarray(mask)
    a, b = field[mask], reference[mask]
    num = np.einsum("ij,ij->i", a, b)
    den = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    ok = den > 0
    return float(abs(np.mean(num[ok] / den[ok])))
