import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import cKDTree

from bistochastic.analytic import Rectangle, mean_abs_cosine, rectangle_mode, sample_domain
from bistochastic.errors import ConditioningError, InputError, UnsupportedProfileError
from bistochastic.geometry import KernelProfile
from bistochastic.gradients import (
    GradientField,
    barycenters_b,
    eigen_gradient_b,
    eigen_gradient_c,
    f_epsilon_apply,
    gradient_of_function,
)
from bistochastic.operators import apply_b, bistochastic_operator, reference_operator
from bistochastic.sinkhorn import SinkhornOptions
from bistochastic.spectral import SpectralDecomposition, eigendecompose_b, svd_reference

FAST = SinkhornOptions(variant="accelerated")


@pytest.fixture(scope="module")
def rectangle():
    X = sample_domain(Rectangle(1.5, 1.0), 1000, seed=0)
    op = bistochastic_operator(X, 0.01, beta=1.0, opts=FAST)
    return X.points, op, eigendecompose_b(op, 8)


def rectangle_interior(P, margin=0.15):
    return (P[:, 0] > margin) & (P[:, 0] < 1.5 - margin) & (P[:, 1] > margin) & (P[:, 1] < 1 - margin)


def integral_form_b(X, op, phi, lam):
    """(1/lam) sum_y (y - xbar)/eps b(x, y) phi(y) / w(y), evaluated by loops."""
    K, d, w, eps = op.K.values, op.d, op.w, op.eps
    n, dim = X.shape
    out = np.zeros((n, dim))
    for i in range(n):
        b = [K[i, j] / (d[i] * d[j]) for j in range(n)]
        xbar = sum(X[j] * b[j] / w[j] for j in range(n))
        out[i] = sum((X[j] - xbar) / eps * b[j] * phi[j] / w[j] for j in range(n)) / lam
    return out


def f_epsilon_loops(op, f):
    K, d, w, v = op.K.values, op.d, op.w, op.v
    n, m = K.shape
    F = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            inner = sum(K[l, j] * f[l] / (d[l] * w[l]) for l in range(n))
            F[i, j] = K[i, j] / d[i] * inner / v[j]
    return F


def double_integral_c(R, op, phi, lam):
    """(1/lam) sum_r (r - rbar_x)/eps c-kernel terms, with rbar_x from f = 1."""
    F1 = f_epsilon_loops(op, np.ones(op.n))
    Fp = f_epsilon_loops(op, phi)
    out = np.zeros((op.n, R.shape[1]))
    for i in range(op.n):
        rbar = sum(F1[i, r] * R[r] for r in range(op.m))
        out[i] = sum((R[r] - rbar) / op.eps * Fp[i, r] for r in range(op.m)) / lam
    return out


class TestBarycenters:
    def test_single_point(self):
        op = bistochastic_operator([[0.3, -1.2]], 1.0)
        np.testing.assert_allclose(barycenters_b(op, [[0.3, -1.2]]), [[0.3, -1.2]], rtol=1e-12)

    def test_symmetric_pair(self):
        X = np.array([[-0.8], [0.8]])
        op = bistochastic_operator(X, 1.0, beta=0.0)
        bary = barycenters_b(op, X)[:, 0]
        assert -0.8 < bary[0] < 0 < bary[1] < 0.8
        assert bary[0] == pytest.approx(-bary[1], rel=1e-12)

    def test_matches_per_coordinate_apply(self, rng):
        X = rng.uniform(size=(10, 3))
        op = bistochastic_operator(X, 0.5)
        want = np.column_stack([apply_b(op, X[:, c]) for c in range(3)])
        np.testing.assert_allclose(barycenters_b(op, X), want, rtol=1e-13)


class TestSingle:
    def test_exact_constant_has_zero_gradient(self, small_b, small_cloud):
        op, dec = small_b
        phi = dec.phi.copy()
        phi[:, 0] = 0.7
        lam = dec.eigenvalues.copy()
        lam[0] = 1.0
        exact = SpectralDecomposition(lam, phi, dec.w, dec.kind)
        g = eigen_gradient_b(op, exact, small_cloud, 0)
        scale = 0.7 * np.max(np.abs(small_cloud)) / op.eps
        assert np.max(np.abs(g.vectors)) <= 1e-12 * scale
        assert isinstance(g, GradientField) and g.eigen_index == 0

    def test_computed_constant_mode_vanishes(self, small_b, small_cloud):
        # The computed phi_0 inherits the balancing residual (1e-10).
        op, dec = small_b
        g = eigen_gradient_b(op, dec, small_cloud, 0).vectors
        diam = np.max(np.linalg.norm(small_cloud[:, None] - small_cloud[None], axis=2))
        assert np.max(np.abs(g)) <= 1e-10 * diam / op.eps

    def test_five_point_integral_form(self, rng):
        X = rng.uniform(size=(5, 2))
        op = bistochastic_operator(X, 0.3)
        dec = eigendecompose_b(op, 3)
        for k in (1, 2):
            got = eigen_gradient_b(op, dec, X, k).vectors
            want = integral_form_b(X, op, dec.phi[:, k], dec.eigenvalues[k])
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * np.max(np.abs(want)))

    @given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
    def test_linear_in_phi(self, c):
        X = np.random.default_rng(0).uniform(size=(12, 2))
        op = bistochastic_operator(X, 0.4)
        dec = eigendecompose_b(op, 3)
        scaled = SpectralDecomposition(dec.eigenvalues, dec.phi * c, dec.w, dec.kind)
        np.testing.assert_allclose(
            eigen_gradient_b(op, scaled, X, 1).vectors,
            c * eigen_gradient_b(op, dec, X, 1).vectors,
            rtol=1e-13, atol=1e-13,
        )

    def test_rectangle_first_mode_direction(self, rectangle):
        P, op, dec = rectangle
        g = eigen_gradient_b(op, dec, P, 1).vectors
        ref = rectangle_mode(1, 0).gradient(P)
        assert mean_abs_cosine(g, ref, rectangle_interior(P)) >= 0.90

    def test_agrees_with_local_finite_differences(self, rectangle):
        P, op, dec = rectangle
        phi = dec.phi[:, 1]
        g = eigen_gradient_b(op, dec, P, 1).vectors
        _, nbrs = cKDTree(P).query(P, k=11)
        angles = []
        for i in np.flatnonzero(rectangle_interior(P, 0.1)):
            j = nbrs[i, 1:]
            A = P[j] - P[i]
            slope, *_ = np.linalg.lstsq(A, phi[j] - phi[i], rcond=None)
            cos = slope @ g[i] / (np.linalg.norm(slope) * np.linalg.norm(g[i]))
            angles.append(np.degrees(np.arccos(np.clip(cos, -1, 1))))
        assert np.median(angles) <= 15.0

    def test_non_gaussian_profile_rejected(self, small_cloud):
        prof = KernelProfile("narrow", lambda u: np.exp(-2.0 * np.asarray(u, float)))
        op = bistochastic_operator(small_cloud, 1.0, profile=prof)
        dec = eigendecompose_b(op, 2)
        with pytest.raises(UnsupportedProfileError):
            eigen_gradient_b(op, dec, small_cloud, 1)

    def test_small_eigenvalue_rejected(self, small_b, small_cloud):
        op, dec = small_b
        lam = dec.eigenvalues.copy()
        lam[2] = 5e-5
        tiny = SpectralDecomposition(lam, dec.phi, dec.w, dec.kind)
        with pytest.raises(ConditioningError) as info:
            eigen_gradient_b(op, tiny, small_cloud, 2)
        assert info.value.index == 2

    @pytest.mark.parametrize("k", [-1, 8])
    def test_index_range(self, small_b, small_cloud, k):
        with pytest.raises(InputError):
            eigen_gradient_b(*small_b, small_cloud, k)

    def test_row_mismatch(self, small_b, small_cloud):
        with pytest.raises(InputError):
            eigen_gradient_b(*small_b, small_cloud[:5], 1)


class TestReference:
    def test_f_epsilon_of_one_has_unit_rows(self, small_c):
        op, _ = small_c
        np.testing.assert_allclose(f_epsilon_apply(op, np.ones(op.n)).sum(axis=1), 1.0, atol=1e-10)

    def test_f_epsilon_scalar_case(self):
        op = reference_operator([[0.0]], [[0.5]], 1.0, weights=[2.0], ref_weights=[3.0])
        K = np.exp(-0.25)
        want = (1 / op.d[0]) * K * (K * 1.5 / (op.d[0] * 2.0)) / 3.0
        np.testing.assert_allclose(f_epsilon_apply(op, [1.5]), [[want]], rtol=1e-14)

    def test_f_epsilon_triple_loop(self, rng):
        X = rng.uniform(size=(7, 2))
        op = reference_operator(X, X[:4], 0.4)
        f = rng.normal(size=7)
        np.testing.assert_allclose(f_epsilon_apply(op, f), f_epsilon_loops(op, f), rtol=1e-13, atol=1e-15)

    def test_constant_mode_vanishes(self, small_c, small_cloud):
        op, dec = small_c
        R = small_cloud[::3]
        g = eigen_gradient_c(op, dec, R, 0).vectors
        assert np.max(np.abs(g)) <= 1e-10 * np.max(np.abs(R)) / op.eps

    def test_reference_equal_to_data_double_integral(self, rng):
        X = rng.uniform(size=(6, 2))
        op = reference_operator(X, X, 0.3)
        dec = svd_reference(op, 3)
        for k in (1, 2):
            got = eigen_gradient_c(op, dec, X, k).vectors
            want = double_integral_c(X, op, dec.phi[:, k], dec.eigenvalues[k])
            np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10 * np.max(np.abs(want)))

    def test_reference_row_mismatch(self, small_c, small_cloud):
        with pytest.raises(InputError):
            eigen_gradient_c(*small_c, small_cloud, 1)


class TestFunctionGradient:
    def test_eigenvector_reproduces_its_field(self, small_b, small_cloud):
        op, dec = small_b
        got = gradient_of_function(op, dec, small_cloud, dec.phi[:, 1], truncation=5)
        want = eigen_gradient_b(op, dec, small_cloud, 1).vectors
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10 * np.max(np.abs(want)))

    def test_constant_function(self, small_b, small_cloud):
        op, dec = small_b
        g = gradient_of_function(op, dec, small_cloud, np.full(op.n, 3.0), truncation=6)
        assert np.max(np.abs(g)) <= 1e-9

    def test_reference_dispatch(self, small_c, small_cloud):
        op, dec = small_c
        R = small_cloud[::3]
        got = gradient_of_function(op, dec, R, dec.phi[:, 2], truncation=4)
        want = eigen_gradient_c(op, dec, R, 2).vectors
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10 * np.max(np.abs(want)))

    def test_rectangle_cosine(self, rectangle):
        P, op, dec = rectangle
        f = np.cos(2 * np.pi * P[:, 0] / 3)
        g = gradient_of_function(op, dec, P, f, truncation=8)
        ref = rectangle_mode(1, 0).gradient(P)
        assert mean_abs_cosine(g, ref, rectangle_interior(P)) >= 0.85

    @pytest.mark.parametrize("t", [0, 9])
    def test_truncation_range(self, small_b, small_cloud, t):
        with pytest.raises(InputError):
            gradient_of_function(*small_b, small_cloud, np.ones(20), truncation=t)

    def test_floor_violation_names_mode(self, small_b, small_cloud):
        op, dec = small_b
        lam = dec.eigenvalues.copy()
        lam[4] = 0.0
        bad = SpectralDecomposition(lam, dec.phi, dec.w, dec.kind)
        with pytest.raises(ConditioningError, match="mode 4"):
            gradient_of_function(op, bad, small_cloud, np.ones(20), truncation=6)
