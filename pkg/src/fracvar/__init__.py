"""Variable-order fractional operators with Mittag-Leffler kernels.

The package is organized around a KernelSpec (order function, warp,
normalization, kernel exponents) that every operator, solver, and
verification suite consumes.
"""

from . import errors
from .analysis import (
    SUITE_NAMES,
    SuiteConfig,
    SuiteReport,
    default_suite_run,
    standard_corpus,
)
from .fde import (
    BoundCheck,
    FdeProblem,
    LinearBound,
    SolveReport,
    check_comparison,
    comparison_cases,
    sandwich_check,
    solve_fde,
    uniqueness_probe,
)
from .grids import GridFunction, uniform_grid
from .kernel import (
    KernelSpec,
    NormalizationFunction,
    OrderFunction,
    WarpFunction,
    identity_warp,
    kernel_eval,
    kernel_prefactor,
    kernel_values,
    log_warp,
    sin_warp,
    warp_from_expr,
)
from .mlf import MLParams, ml_eval, ml_eval_spectral, spectral_density
from .operators import (
    OperatorResult,
    aux_integral_1,
    aux_integral_2,
    caputo_deriv_classical,
    caputo_deriv_ns,
    make_special_case,
    rl_deriv_classical,
    rl_deriv_ns,
    rl_integral_varorder,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "FdeProblem",
    "GridFunction",
    "KernelSpec",
    "LinearBound",
    "MLParams",
    "NormalizationFunction",
    "OperatorResult",
    "OrderFunction",
    "SUITE_NAMES",
    "SolveReport",
    "SuiteConfig",
    "SuiteReport",
    "WarpFunction",
    "aux_integral_1",
    "aux_integral_2",
    "caputo_deriv_classical",
    "caputo_deriv_ns",
    "check_comparison",
    "comparison_cases",
    "default_suite_run",
    "errors",
    "identity_warp",
    "kernel_eval",
    "kernel_prefactor",
    "kernel_values",
    "log_warp",
    "make_special_case",
    "ml_eval",
    "ml_eval_spectral",
    "rl_deriv_classical",
    "rl_deriv_ns",
    "rl_integral_varorder",
    "sandwich_check",
    "sin_warp",
    "solve_fde",
    "spectral_density",
    "standard_corpus",
    "uniform_grid",
    "uniqueness_probe",
    "warp_from_expr",
]
