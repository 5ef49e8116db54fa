import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bistochastic.errors import InputError, RankDeficiencyError
from bistochastic.geometry import build_kernel_matrix
from bistochastic.refselect import pivoted_gram_schmidt


def literal_oracle(K, m):
    """Column-list transcription: pick the largest column, project all columns."""
    cols = [K[:, i].astype(float).copy() for i in range(K.shape[1])]
    chosen = []
    for _ in range(m):
        norms = [np.sqrt(c @ c) if i not in chosen else -1.0 for i, c in enumerate(cols)]
        best = int(np.argmax(norms))
        chosen.append(best)
        p = cols[best].copy()
        cols = [c - (c @ p) / (p @ p) * p for c in cols]
    return chosen


def test_diagonal_kernel_orders_by_magnitude():
    K = np.diag([0.3, 2.0, 1.1, 0.7])
    sel = pivoted_gram_schmidt(K, 4)
    np.testing.assert_array_equal(sel.indices, [1, 2, 3, 0])
    np.testing.assert_allclose(sel.pivot_norms, [2.0, 1.1, 0.7, 0.3])


def test_ties_go_to_lowest_index():
    np.testing.assert_array_equal(pivoted_gram_schmidt(np.eye(4), 4).indices, [0, 1, 2, 3])


def test_duplicate_point_is_never_selected_twice():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0], [0.5, 2.0]])
    K = build_kernel_matrix(pts, pts, 0.5).values
    sel = pivoted_gram_schmidt(K, 5)
    assert not {0, 4} <= set(sel.indices.tolist())
    with pytest.raises(RankDeficiencyError) as info:
        pivoted_gram_schmidt(K, 6)
    assert info.value.selected == 5


@pytest.mark.parametrize("seed", range(20))
def test_matches_literal_oracle(seed):
    pts = np.random.default_rng(seed).uniform(size=(30, 2))
    K = build_kernel_matrix(pts, pts, 0.1).values
    assert pivoted_gram_schmidt(K, 5).indices.tolist() == literal_oracle(K, 5)


def test_pivots_nonincreasing_and_indices_distinct(rng):
    pts = rng.uniform(size=(60, 2))
    sel = pivoted_gram_schmidt(build_kernel_matrix(pts, pts, 0.05).values, 25)
    assert len(set(sel.indices.tolist())) == 25
    assert np.all(np.diff(sel.pivot_norms) <= 1e-12)


def test_reorthogonalization_keeps_selection_on_easy_data(rng):
    pts = rng.uniform(size=(40, 2))
    K = build_kernel_matrix(pts, pts, 0.05).values
    a = pivoted_gram_schmidt(K, 10).indices
    b = pivoted_gram_schmidt(K, 10, reorthogonalize=True).indices
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("m", [0, 5])
def test_m_range(m):
    with pytest.raises(InputError):
        pivoted_gram_schmidt(np.eye(4), m)


@given(st.integers(0, 2**31))
def test_relabeling_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(25, 2))
    perm = rng.permutation(25)
    K = build_kernel_matrix(pts, pts, 0.1).values
    Kp = build_kernel_matrix(pts[perm], pts[perm], 0.1).values
    chosen = pivoted_gram_schmidt(K, 6).indices
    chosen_p = pivoted_gram_schmidt(Kp, 6).indices
    np.testing.assert_array_equal(perm[chosen_p], chosen)
