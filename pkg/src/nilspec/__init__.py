"""Numerical toolkit for spectral multipliers on 2-step stratified groups.

The package splits into five layers:

- groups: structure constants, layer decompositions, and the block
  contract checker for the class of groups the toolkit covers.
- specfun: stable scaled Laguerre / Hermite evaluation and the
  Fourier-Wigner transform diagonal.
- multipliers: compactly supported symbols, dyadic slicing, fractional
  Sobolev norms, and difference-operator utilities.
- kernels: convolution-kernel evaluation through the spectral sum,
  closed-form cross-checks, and the frequency-side Plancherel norm.
- estimates: weighted L2 / L1 estimate experiments at desk scale.

The `nilspec` console script (module `nilspec.cli`) wires these into
reproducible runs with machine-readable outputs.
"""

__version__ = "0.1.0"

from . import estimates, groups, kernels, multipliers, quadrature, specfun
from .estimates import (
    EstimateReport,
    InfeasibleWeightError,
    LatticeSpec,
    TailError,
    WeightSpec,
    default_family,
    interpolated_weight_check,
    l1_chain,
    mixed_norm_factorization,
    product_factorization_check,
    sample_kernel_lattice,
    scaling_experiment,
    weighted_l2,
    weighted_l2_adaptive,
    weighted_plancherel_check,
)
from .groups import (
    AssumptionAReport,
    AssumptionViolated,
    BUILTIN_GROUPS,
    LayerDecomposition,
    SpectralData,
    StratifiedGroup2,
    builtin_group,
    check_assumption_a,
    dimensions,
    group_from_json_dict,
    group_to_json_dict,
    homogeneous_norm,
    load_group,
    spectral_bound_constant,
    spectral_data,
)
from .kernels import (
    AccuracyError,
    KernelGrid,
    ProductKernelGrid,
    QuadratureSpec,
    TensorMultiplier,
    eval_kernel,
    eval_kernel_product,
    heat_kernel_h1_oracle,
    level_multi_indices,
    matrix_coefficient,
    plancherel_spectral_norm,
    psi_closed_form,
)
from .multipliers import (
    JointMultiplier,
    Multiplier,
    gaussian_bump,
    heat,
    mw_norm,
    multiplier_from_json_dict,
    multiplier_to_json_dict,
    oscillate,
    poly_bump,
    sobolev_norm,
    sobolev_norm_report,
    table_multiplier,
    truncate_dyadic,
    vanishing_threshold,
)

__all__ = [
    "__version__",
    "estimates",
    "groups",
    "kernels",
    "multipliers",
    "quadrature",
    "specfun",
    # groups
    "AssumptionAReport",
    "AssumptionViolated",
    "BUILTIN_GROUPS",
    "LayerDecomposition",
    "SpectralData",
    "StratifiedGroup2",
    "builtin_group",
    "check_assumption_a",
    "dimensions",
    "group_from_json_dict",
    "group_to_json_dict",
    "homogeneous_norm",
    "load_group",
    "spectral_bound_constant",
    "spectral_data",
    # kernels
    "AccuracyError",
    "KernelGrid",
    "ProductKernelGrid",
    "QuadratureSpec",
    "TensorMultiplier",
    "eval_kernel",
    "eval_kernel_product",
    "heat_kernel_h1_oracle",
    "level_multi_indices",
    "matrix_coefficient",
    "plancherel_spectral_norm",
    "psi_closed_form",
    # multipliers
    "JointMultiplier",
    "Multiplier",
    "gaussian_bump",
    "heat",
    "mw_norm",
    "multiplier_from_json_dict",
    "multiplier_to_json_dict",
    "oscillate",
    "poly_bump",
    "sobolev_norm",
    "sobolev_norm_report",
    "table_multiplier",
    "truncate_dyadic",
    "vanishing_threshold",
    # estimates
    "EstimateReport",
    "InfeasibleWeightError",
    "LatticeSpec",
    "TailError",
    "WeightSpec",
    "default_family",
    "interpolated_weight_check",
    "l1_chain",
    "mixed_norm_factorization",
    "product_factorization_check",
    "sample_kernel_lattice",
    "scaling_experiment",
    "weighted_l2",
    "weighted_l2_adaptive",
    "weighted_plancherel_check",
]
