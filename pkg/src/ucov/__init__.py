"""Subset-mean covariance estimation in finite-dimensional lp coordinate spaces.

The package estimates the covariance operator of the mean of m-subsets of
a sample, decomposes the estimator into orthogonal projection components,
measures operator deviations in injective / hilbert / projective
crossnorms, and ships a seeded Monte Carlo harness plus a CLI around all
of it.  All randomness flows through explicit integer seeds; identical
plans produce byte-identical report files for any worker count.
"""

__version__ = "0.1.0"

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    GuardRefusalError,
    IndeterminateDiagnosticError,
    InvalidConfigError,
    SizeLimitError,
    UcovError,
    UnsupportedOperationError,
)
from .spaces import Element, SpaceDescriptor, dual_space, inner, mean, norm, zero
from .tensor import (
    NormResult,
    TensorRep,
    frobenius_inner,
    hilbert_norm,
    injective_norm,
    outer,
    pair_bilinear,
    projective_norm,
    tensor_axpy,
    zero_tensor,
)
from .datagen import (
    DependentGeneratorDescriptor,
    GeneratorDescriptor,
    Sample,
    descriptor_hash,
    draw_dependent,
    draw_iid,
    finite_support,
    gaussian_kl,
    generator_cov,
    generator_mean,
    ma_wrap,
    rademacher,
    student_t,
)
from .estimator import (
    EstimatorConfig,
    estimate,
    population_cm_analytic,
    population_cm_exact,
    population_cm_oracle,
)
from .hoeffding import (
    KernelSpec,
    ProjectionEstimate,
    component_ustat,
    component_ustat_exact,
    degeneracy_order,
    degeneracy_profile,
    directional_lag_variance,
    g_c,
    g_c_exact,
    hajek_variance,
    kernel_eval,
    phi_c,
    phi_c_exact,
    sigma_inf_sq,
)
from .experiments import (
    McPlan,
    clt_check,
    consistency_curve,
    degenerate_check,
    dependent_clt_check,
    norm_report,
    table1,
)
from .reporting import (
    ExperimentReport,
    read_sample_csv,
    read_tensor_csv,
    write_sample_csv,
    write_tensor_csv,
)

__all__ = [
    "__version__",
    # errors
    "UcovError", "DimensionMismatchError", "UnsupportedOperationError",
    "EmptyInputError", "InvalidConfigError", "SizeLimitError",
    "IndeterminateDiagnosticError", "GuardRefusalError",
    # spaces
    "SpaceDescriptor", "Element", "dual_space", "zero", "norm", "inner", "mean",
    # tensor
    "TensorRep", "NormResult", "zero_tensor", "outer", "tensor_axpy",
    "pair_bilinear", "frobenius_inner", "hilbert_norm", "injective_norm",
    "projective_norm",
    # datagen
    "Sample", "GeneratorDescriptor", "DependentGeneratorDescriptor",
    "student_t", "rademacher", "gaussian_kl", "finite_support", "ma_wrap",
    "draw_iid", "draw_dependent", "generator_mean", "generator_cov",
    "descriptor_hash",
    # estimator
    "EstimatorConfig", "estimate", "population_cm_analytic",
    "population_cm_exact", "population_cm_oracle",
    # hoeffding
    "KernelSpec", "kernel_eval", "phi_c", "phi_c_exact", "g_c", "g_c_exact",
    "component_ustat", "component_ustat_exact", "ProjectionEstimate",
    "hajek_variance", "degeneracy_order", "degeneracy_profile", "sigma_inf_sq",
    "directional_lag_variance",
    # experiments
    "McPlan", "consistency_curve", "clt_check", "degenerate_check",
    "dependent_clt_check", "table1", "norm_report",
    # reporting
    "ExperimentReport", "write_sample_csv", "read_sample_csv",
    "write_tensor_csv", "read_tensor_csv",
]
