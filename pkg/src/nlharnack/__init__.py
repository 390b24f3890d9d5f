"""Numerical laboratory for nonlocal elliptic operators in non-divergence form.

Implements jump kernels comparable to |y|^(-n-2s), the associated extremal
(Pucci-type) operators, monotone finite-difference Dirichlet solvers on
arbitrary open sets, homogeneous cone barriers, and estimators for
boundary-Harnack constants, growth exponents, and Holder exponents of
solution quotients.
"""

__version__ = "0.1.0"

from .kernels import (
    FractionalOrder,
    EllipticityBounds,
    FractionalLaplacian,
    SymmetricMultiplier,
    XDependentMultiplier,
    KernelSpec,
    DriftSpec,
    DriftValidity,
    kernel_density,
    constant_multiplier,
    radial_step_multiplier,
    angular_step_multiplier,
    checkerboard_multiplier,
    kernel_to_config,
    kernel_from_config,
    validate_drift,
)
from .grids import (
    INTERIOR,
    ZERO,
    DATA,
    Grid,
    GridFunction,
    Zero,
    Formula,
    DomainMask,
    HalfSpace,
    LipschitzGraph,
    Cone,
    Slit,
    Annulus,
    Custom,
    InteriorBallError,
    DivergentMassError,
    build_grid,
    build_domain,
    grid_function,
    indicator_interval,
    indicator_ball,
    indicator_shell,
    vee_profile,
    sawtooth_profile,
    cone_aperture_cosine,
    weighted_mass,
    normalize,
    dist_to_complement,
)
from .operators import (
    QuadratureTable,
    build_quadrature,
    second_difference,
    gradient_central,
    eval_linear,
    eval_pucci_plus,
    eval_pucci_minus,
    eval_drift_pucci,
)
from .solve import (
    Linear,
    PucciPlus,
    PucciMinus,
    DriftPucci,
    DirichletProblem,
    SolveReport,
    ComparisonReport,
    solve_linear,
    solve_pucci,
    solve_dirichlet,
    comparison_check,
    solution_to_csv,
)
from .barriers import (
    ConeSpec,
    BarrierParams,
    BumpSpec,
    SubsolutionReport,
    barrier_value,
    cone_contains,
    verify_subsolution,
    find_epsilon,
    default_cone_samples,
    homogeneity_check,
    smooth_bump,
    composite_supersolution,
    touching_level,
)
from .harnack import (
    HarnackReport,
    HolderFit,
    GrowthFit,
    ScalingReport,
    ReplayReport,
    check_half_harnack_sub,
    check_half_harnack_sup,
    check_sup_vs_interior_ball,
    bhp_constant,
    holder_quotient_fit,
    growth_exponent,
    scaling_invariance_check,
    replay_supersolution_argument,
    shape_from_config,
    data_from_config,
    run_bhp_experiment,
)
