"""Eigendecompositions of the bi-stochastic and reference operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericError
from .operators import BistochasticOperator, ReferenceOperator

__all__ = [
    "SpectralDecomposition",
    "eigendecompose_b",
    "svd_reference",
    "verify_eigenpairs",
    "fix_signs",
]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Top eigenpairs of a diffusion operator.

    Attributes
    ----------
    eigenvalues : ndarray, shape (k,)
        Descending, ``eigenvalues[0]`` close to 1.
    phi : ndarray, shape (n, k)
        Eigenvectors ``W^1/2 U``, orthonormal for ``<u, v> = sum u v / w``.
    w : ndarray, shape (n,)
    kind : {"single", "reference"}
    reference_vectors : ndarray or None
        Right singular vectors (``m x k``) for the reference kind; kept
        for diagnostics only.
    """

    eigenvalues: np.ndarray
    phi: np.ndarray
    w: np.ndarray
    kind: str
    reference_vectors: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.eigenvalues.size

    def gram(self) -> np.ndarray:
        """``Phi^T W^-1 Phi``; the identity up to rounding."""
        return self.phi.T @ (self.phi / self.w[:, None])

    def coefficients(self, f) -> np.ndarray:
        """Expansion coefficients ``<f, phi_k>`` in the ``W^-1`` inner product."""
        return self.phi.T @ (np.asarray(f, dtype=float) / self.w)


def fix_signs(U: np.ndarray, *others: np.ndarray):
    """Flip columns so the largest-magnitude entry of each is positive.

    Ties go to the first such entry. The same flips are applied to every
    array in ``others``.
    """
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return (U * signs,) + tuple(o * signs for o in others)


def eigendecompose_b(op: BistochasticOperator, k: int) -> SpectralDecomposition:
    """Top ``k`` eigenpairs of ``D^-1 K D^-1 W^-1``.

    Diagonalizes the similar symmetric matrix ``W^-1/2 D^-1 K D^-1 W^-1/2``
    with a dense LAPACK solver and maps back with ``Phi = W^1/2 U``.
    """
    n = op.n
    k = int(k)
    if not 1 <= k <= n:
        raise InputError(f"k must lie in [1, {n}], got {k}")
    M = op.symmetric_matrix()
    try:
        vals, U = scipy.linalg.eigh(M, subset_by_index=[n - k, n - 1], driver="evr")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    U = U[:, order]
    (U,) = fix_signs(U)
    phi = U * np.sqrt(op.w)[:, None]
    return SpectralDecomposition(eigenvalues=vals, phi=phi, w=op.w.copy(), kind="single")


def svd_reference(op: ReferenceOperator, k: int) -> SpectralDecomposition:
    """Top ``k`` eigenpairs of the reference operator via an SVD.

    The left singular vectors of ``W^-1/2 D^-1 K V^-1/2`` give ``U``; the
    eigenvalues are the squared singular values.
    """
    k = int(k)
    if not 1 <= k <= min(op.n, op.m):
        raise InputError(f"k must lie in [1, {min(op.n, op.m)}], got {k}")
    A = op.factor()
    try:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    U = U[:, :k]
    right = Vt[:k].T
    U, right = fix_signs(U, right)
    phi = U * np.sqrt(op.w)[:, None]
    return SpectralDecomposition(
        eigenvalues=s[:k] ** 2,
        phi=phi,
        w=op.w.copy(),
        kind="reference",
        reference_vectors=right,
    )


def verify_eigenpairs(op, decomp: SpectralDecomposition) -> float:
    """Largest relative residual ``|op phi_k - lambda_k phi_k| / |phi_k|``."""
    if decomp.phi.shape[0] != op.n:
        raise InputError("decomposition does not match operator size")
    applied = op.apply(decomp.phi)
    resid = np.linalg.norm(applied - decomp.phi * decomp.eigenvalues[None, :], axis=0)
    return float(np.max(resid / np.linalg.norm(decomp.phi, axis=0)))
