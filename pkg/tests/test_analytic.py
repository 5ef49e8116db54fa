import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from bistochastic.analytic import (
    Circle,
    Disc,
    Rectangle,
    bessel_j0,
    bessel_j1,
    bessel_j2,
    circle_heat_coefficient,
    circle_mode,
    disc_mode,
    field_projection_residual,
    generator_slope_fit,
    interior_mask,
    j1prime_root,
    mean_abs_cosine,
    rectangle_mode,
    rectangle_modes_sorted,
    sample_domain,
    subspace_residual,
)
from bistochastic.errors import InputError

J1_ROOT = 1.8411837813406595  # scipy.special.jnp_zeros(1, 1)


def interior_points(domain, n, seed, margin=0.05):
    pts = sample_domain(domain, 4 * n, seed).points
    keep = domain.boundary_distance(pts) > margin
    if isinstance(domain, Disc):
        keep &= np.linalg.norm(pts, axis=1) > 1e-3
    return pts[keep][:n]


ALL_MODES = [
    pytest.param(rectangle_mode(1, 0), id="rect-10"),
    pytest.param(rectangle_mode(2, 3), id="rect-23"),
    pytest.param(rectangle_mode(1, 1, 2.0, 0.5), id="rect-11-2x0.5"),
    pytest.param(disc_mode("cos"), id="disc-cos"),
    pytest.param(disc_mode("sin"), id="disc-sin"),
]


class TestBessel:
    def test_zero(self):
        assert bessel_j1(0.0) == 0.0
        assert bessel_j0(0.0) == 1.0

    @pytest.mark.parametrize(
        "ours, ref", [(bessel_j0, special.j0), (bessel_j1, special.j1), (bessel_j2, lambda x: special.jv(2, x))]
    )
    def test_against_scipy(self, ours, ref):
        x = np.linspace(-50, 50, 4001)
        np.testing.assert_allclose(ours(x), ref(x), atol=1e-10)

    def test_switchover_is_continuous(self):
        x = np.array([12.0 - 1e-9, 12.0 + 1e-9])
        assert abs(np.diff(bessel_j1(x))[0]) < 1e-8

    @pytest.mark.parametrize("x", [50.5, -60.0])
    def test_window(self, x):
        with pytest.raises(InputError):
            bessel_j1(x)

    def test_root(self):
        assert j1prime_root() == pytest.approx(J1_ROOT, abs=1e-12)
        assert round(j1prime_root(), 2) == 1.84

    def test_value_at_root(self):
        assert bessel_j1(1.8412) == pytest.approx(0.5818652242276431, abs=1e-10)


class TestRectangle:
    def test_constant_mode(self):
        mode = rectangle_mode(0, 0)
        assert mode.eigenvalue == 0.0
        np.testing.assert_array_equal(mode.value(np.random.default_rng(0).uniform(size=(5, 2))), 1.0)

    def test_first_mode(self):
        assert rectangle_mode(1, 0, 1.5, 1.0).eigenvalue == pytest.approx(4.386490844928603, rel=1e-12)

    def test_first_four_sorted(self):
        modes = rectangle_modes_sorted(4)
        assert [m.indices for m in modes] == [(1, 0), (0, 1), (1, 1), (2, 0)]
        np.testing.assert_allclose(
            [m.eigenvalue for m in modes],
            [4.386490844928603, 9.869604401089358, 14.256095246017961, 17.545963379714412],
            rtol=1e-12,
        )

    def test_neumann_on_edges(self):
        mode = rectangle_mode(2, 1)
        s = np.linspace(0, 1, 25)
        left = np.c_[np.zeros(25), s]
        right = np.c_[np.full(25, 1.5), s]
        bottom = np.c_[1.5 * s, np.zeros(25)]
        top = np.c_[1.5 * s, np.ones(25)]
        assert np.max(np.abs(mode.gradient(np.r_[left, right])[:, 0])) <= 1e-8
        assert np.max(np.abs(mode.gradient(np.r_[bottom, top])[:, 1])) <= 1e-8

    def test_bad_sides(self):
        with pytest.raises(InputError):
            rectangle_mode(1, 0, a=0.0)


class TestDisc:
    def test_value_at_origin(self):
        assert disc_mode("cos").value(np.zeros((1, 2)))[0] == 0.0

    def test_gradient_at_origin_is_finite(self):
        g = disc_mode("cos").gradient(np.zeros((1, 2)))
        np.testing.assert_allclose(g, [[J1_ROOT / 2, 0.0]], rtol=1e-12)

    def test_eigenvalue(self):
        assert disc_mode().eigenvalue == pytest.approx(3.389957717, rel=1e-9)

    @pytest.mark.parametrize("variant", ["cos", "sin"])
    def test_neumann_on_circle(self, variant):
        th = 2 * np.pi * np.arange(32) / 32
        pts = np.c_[np.cos(th), np.sin(th)]
        radial = np.einsum("ij,ij->i", disc_mode(variant).gradient(pts), pts)
        assert np.max(np.abs(radial)) <= 1e-8

    def test_bad_variant(self):
        with pytest.raises(InputError):
            disc_mode("tan")


@pytest.mark.parametrize("mode", ALL_MODES)
def test_laplacian_is_eigenvalue_times_value(mode):
    pts = interior_points(mode.domain, 1000, seed=1)
    np.testing.assert_allclose(mode.laplacian(pts), mode.eigenvalue * mode.value(pts), atol=1e-10)


@pytest.mark.parametrize("mode", ALL_MODES)
def test_gradient_matches_central_differences(mode):
    pts = interior_points(mode.domain, 1000, seed=2)
    h = 1e-6
    fd = np.column_stack(
        [(mode.value(pts + h * e) - mode.value(pts - h * e)) / (2 * h) for e in np.eye(2)]
    )
    np.testing.assert_allclose(mode.gradient(pts), fd, atol=1e-4)


class TestCircle:
    @pytest.mark.parametrize("k, variant", [(1, "cos"), (2, "sin"), (3, "cos")])
    def test_mode(self, k, variant):
        mode = circle_mode(k, variant)
        assert mode.eigenvalue == k * k
        th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        pts = np.c_[np.cos(th), np.sin(th)]
        trig = np.cos if variant == "cos" else np.sin
        np.testing.assert_allclose(mode.value(pts), trig(k * th), atol=1e-14)
        np.testing.assert_allclose(mode.laplacian(pts), k * k * trig(k * th), atol=1e-12)
        # Tangent gradient: orthogonal to the radius.
        np.testing.assert_allclose(np.einsum("ij,ij->i", mode.gradient(pts), pts), 0.0, atol=1e-12)

    @pytest.mark.parametrize(
        "k, t, want", [(1, 0.0, 1.0), (1, 0.1, 0.9048374180359595), (3, 0.1, 0.4065696597405991)]
    )
    def test_heat_coefficient(self, k, t, want):
        assert circle_heat_coefficient(k, t) == pytest.approx(want, rel=1e-14)

    def test_k_must_be_positive(self):
        with pytest.raises(InputError):
            circle_mode(0)


class TestSampling:
    def test_rectangle(self):
        P = sample_domain(Rectangle(1.5, 1.0), 1000, seed=0).points
        assert P[:, 0].min() >= 0 and P[:, 0].max() <= 1.5
        assert P[:, 1].min() >= 0 and P[:, 1].max() <= 1.0
        sigma = np.array([1.5, 1.0]) / math.sqrt(12) / math.sqrt(1000)
        assert np.all(np.abs(P.mean(axis=0) - [0.75, 0.5]) <= 3 * sigma)

    def test_disc(self):
        P = sample_domain(Disc(), 1000, seed=0).points
        r2 = np.sum(P**2, axis=1)
        assert r2.max() <= 1.0
        assert abs(r2.mean() - 0.5) <= 3 * math.sqrt(1 / 12) / math.sqrt(1000)

    def test_circle_points_lie_on_circle(self):
        P = sample_domain(Circle(), 100, seed=0).points
        np.testing.assert_allclose(np.linalg.norm(P, axis=1), 1.0, rtol=1e-15)

    @pytest.mark.parametrize("domain", [Rectangle(), Disc(), Circle()], ids=["rect", "disc", "circle"])
    def test_same_seed_is_bitwise_identical(self, domain):
        a = sample_domain(domain, 200, seed=42).points
        b = sample_domain(domain, 200, seed=42).points
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize(
        "domain, uniform_coordinate",
        [
            (Rectangle(1.5, 1.0), lambda P: P[:, 0] / 1.5),
            (Rectangle(1.5, 1.0), lambda P: P[:, 1]),
            (Disc(), lambda P: np.sum(P**2, axis=1)),
            (Disc(), lambda P: (np.arctan2(P[:, 1], P[:, 0]) + np.pi) / (2 * np.pi)),
            (Circle(), lambda P: (np.arctan2(P[:, 1], P[:, 0]) + np.pi) / (2 * np.pi)),
        ],
        ids=["rect-x", "rect-y", "disc-r2", "disc-angle", "circle-angle"],
    )
    def test_chi_squared_uniformity(self, domain, uniform_coordinate):
        u = uniform_coordinate(sample_domain(domain, 4000, seed=7).points)
        counts, _ = np.histogram(u, bins=16, range=(0, 1))
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_n_must_be_positive(self):
        with pytest.raises(InputError):
            sample_domain(Disc(), 0, seed=0)

    def test_interior_mask(self):
        pts = np.array([[0.05, 0.5], [0.75, 0.5], [1.4, 0.9]])
        np.testing.assert_array_equal(interior_mask(Rectangle(), pts), [False, True, False])


class TestSlopeFit:
    @given(st.floats(0.01, 10), st.floats(1e-3, 1e-1))
    def test_exact_pairs(self, c, eps):
        mus = np.array([1.0, 4.0, 9.0])
        pairs = list(zip(mus, 1 - c * eps * mus))
        assert generator_slope_fit(pairs, eps) == pytest.approx(c, rel=1e-12)

    def test_needs_two_pairs(self):
        with pytest.raises(InputError):
            generator_slope_fit([(1.0, 0.99)], 0.01)

    def test_outlier_sensitivity(self):
        eps, c = 0.01, 0.25
        mus = [1.0, 1.0, 4.0, 4.0, 9.0]
        clean = [(m, 1 - c * eps * m) for m in mus]
        dirty = clean + [(9.0, 1 - 1.5 * c * eps * 9.0)]
        kept = generator_slope_fit(dirty, eps)
        dropped = generator_slope_fit(clean, eps)
        assert dropped == pytest.approx(c, rel=1e-12)
        # A 50% outlier on the largest eigenvalue pulls the slope by ~20%.
        assert kept / c - 1 == pytest.approx(0.5 * 81 / (2 + 32 + 162), rel=1e-9)


class TestComparisons:
    def test_subspace_residual(self):
        basis = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        res = subspace_residual(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), basis)
        np.testing.assert_allclose(res, [0.0, 1.0], atol=1e-15)

    def test_field_projection(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(2, 50, 2))
        assert field_projection_residual(2 * a - 3 * b, [a, b]) == pytest.approx(0.0, abs=1e-12)
        assert field_projection_residual(rng.normal(size=(50, 2)), [a, b]) > 0.5

    def test_mean_abs_cosine_ignores_global_sign(self):
        rng = np.random.default_rng(1)
        f = rng.normal(size=(30, 2))
        assert mean_abs_cosine(-3 * f, f) == pytest.approx(1.0)
        rot = f @ np.array([[0.0, -1.0], [1.0, 0.0]])
        assert mean_abs_cosine(rot, f) == pytest.approx(0.0, abs=1e-12)
