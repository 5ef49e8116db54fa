"""Reference-set selection by pivoted Gram-Schmidt on kernel columns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, RankDeficiencyError

__all__ = ["SelectionResult", "pivoted_gram_schmidt", "PIVOT_TOLERANCE"]

PIVOT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SelectionResult:
    indices: np.ndarray
    pivot_norms: np.ndarray


def pivoted_gram_schmidt(K, m: int, reorthogonalize: bool = False) -> SelectionResult:
    """Greedily pick ``m`` columns of ``K`` by residual norm.

    At every step the column with the largest Euclidean norm is selected
    (lowest index on ties) and all columns are projected onto the
    orthogonal complement of it. This is classical Gram-Schmidt: the
    projection uses the current, already orthogonalized pivot column.

    Parameters
    ----------
    K : array_like, shape (n, n)
    m : int
        Number of columns to select, ``1 <= m <= n``.
    reorthogonalize : bool
        Repeat each projection once more, which restores orthogonality
        lost to rounding when ``m`` is large.

    Raises
    ------
    RankDeficiencyError
        If the best remaining column has norm below ``PIVOT_TOLERANCE``
        before ``m`` columns were found.
    """
    C = np.array(np.asarray(K, dtype=float), copy=True)
    if C.ndim != 2:
        raise InputError("kernel must be a 2-D matrix")
    n = C.shape[1]
    m = int(m)
    if not 1 <= m <= n:
        raise InputError(f"m must lie in [1, {n}], got {m}")

    norms_sq = np.einsum("ij,ij->j", C, C)
    indices = []
    pivots = []
    for j in range(m):
        i = int(np.argmax(norms_sq))
        norm = float(np.sqrt(max(norms_sq[i], 0.0)))
        if norm < PIVOT_TOLERANCE:
            raise RankDeficiencyError(
                f"only {j} independent columns found before reaching m={m}", selected=j
            )
        indices.append(i)
        pivots.append(norm)
        p = C[:, i].copy()
        passes = 2 if reorthogonalize else 1
        for _ in range(passes):
            C -= np.outer(p, (p @ C) / (p @ p))
        # The selected column is now zero up to rounding; keep it out of the argmax.
        C[:, i] = 0.0
        norms_sq = np.einsum("ij,ij->j", C, C)
    return SelectionResult(indices=np.array(indices, dtype=int), pivot_norms=np.array(pivots))
