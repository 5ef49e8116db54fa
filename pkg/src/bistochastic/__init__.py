"""Bi-stochastic diffusion operators on point clouds.

Kernel construction, Sinkhorn balancing, spectral decompositions and
eigenfunction gradient fields for single-measure and reference-measure
normalizations, together with closed-form validation oracles.
"""

from .errors import (
    BistochasticError,
    ConditioningError,
    ConvergenceError,
    InputError,
    NumericError,
    ParseError,
    RankDeficiencyError,
    UnsupportedDimensionError,
    UnsupportedProfileError,
)
from .geometry import (
    GAUSSIAN,
    KernelMatrix,
    KernelProfile,
    PointCloud,
    build_kernel_matrix,
    kernel_moments,
    median_bandwidth,
    pairwise_sq_dists,
)
from .gradients import (
    GradientField,
    barycenters_b,
    eigen_gradient_b,
    eigen_gradient_c,
    f_epsilon_apply,
    gradient_of_function,
)
from .measures import WeightVector, degree_vector, explicit_weights, weight_from_degree
from .operators import (
    AveragingOperator,
    BistochasticOperator,
    ReferenceOperator,
    apply_a,
    apply_b,
    apply_c,
    averaging_operator,
    bistochastic_operator,
    generator_apply,
    power_apply,
    reference_operator,
)
from .refselect import SelectionResult, pivoted_gram_schmidt
from .sinkhorn import (
    ScalingResult,
    SinkhornOptions,
    bistochastic_residual,
    sinkhorn_reference,
    sinkhorn_symmetric,
    sinkhorn_symmetric_accelerated,
)
from .spectral import SpectralDecomposition, eigendecompose_b, svd_reference, verify_eigenpairs

__version__ = "0.1.0"
