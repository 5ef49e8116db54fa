import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def small_cloud():
    """Twenty planar points, spread enough for a well-conditioned kernel."""
    return np.random.default_rng(3).uniform(0.0, 2.0, size=(20, 2))


@pytest.fixture(scope="session")
def circle_setup():
    """Uniform unit-circle sample, n = 2000, eps = 0.01, beta = 1."""
    from bistochastic.analytic import Circle, sample_domain
    from bistochastic.operators import bistochastic_operator
    from bistochastic.sinkhorn import SinkhornOptions
    from bistochastic.spectral import eigendecompose_b

    cloud = sample_domain(Circle(), 2000, seed=3)
    op = bistochastic_operator(cloud, 0.01, beta=1.0, opts=SinkhornOptions(variant="accelerated"))
    theta = np.arctan2(cloud.points[:, 1], cloud.points[:, 0])
    return cloud, op, eigendecompose_b(op, 10), theta


@pytest.fixture(scope="session")
def small_b(small_cloud):
    from bistochastic.operators import bistochastic_operator
    from bistochastic.spectral import eigendecompose_b

    op = bistochastic_operator(small_cloud, 0.5, beta=1.0)
    return op, eigendecompose_b(op, 8)


@pytest.fixture(scope="session")
def small_c(small_cloud):
    from bistochastic.operators import reference_operator
    from bistochastic.spectral import svd_reference

    op = reference_operator(small_cloud, small_cloud[::3], 0.5, beta=1.0, gamma=1.0)
    return op, svd_reference(op, 6)
