"""Time-periodic Stokes fundamental solution.

Kernel evaluation (steady Stokeslet, Helmholtz mode kernels, the remainder
kernel), a spectral solver on a periodic space-time box and a harness that
checks the decay and summability estimates numerically.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, available_backends
from .errors import (CompatibilityError, ConfigError, ConvergenceError, DomainError, FitError,
                     QuadratureError, ShapeError, TPStokesError, TruncationWarning)
from .kernels import (KernelSample, Mode, Params, helmholtz_kernel, helmholtz_kernel_gradient,
                      helmholtz_symbol, laplace_fund, laplace_hessian, mode_stokeslet, projection_symbol,
                      psi_conv_helmholtz_hessian, remainder_kernel, steady_stokeslet_pressure,
                      steady_stokeslet_velocity, tp_fundamental_solution, tp_multiplier)
from .report import Criterion, VerificationReport
from .specfun import check_hankel_bounds, hankel1, hankel1_derivative, sqrt_upper
from .spectral import (GridField, GridSpec, apply_tp_stokes_operator, convolve_remainder, make_grid,
                       read_field, solve_by_representation, solve_tp_stokes, write_field)

__all__ = [
    "BACKEND", "available_backends",
    "CompatibilityError", "ConfigError", "ConvergenceError", "DomainError", "FitError",
    "QuadratureError", "ShapeError", "TPStokesError", "TruncationWarning",
    "KernelSample", "Mode", "Params", "helmholtz_kernel", "helmholtz_kernel_gradient", "helmholtz_symbol",
    "laplace_fund", "laplace_hessian", "mode_stokeslet", "projection_symbol", "psi_conv_helmholtz_hessian",
    "remainder_kernel", "steady_stokeslet_pressure", "steady_stokeslet_velocity", "tp_fundamental_solution",
    "tp_multiplier", "Criterion", "VerificationReport", "check_hankel_bounds", "hankel1",
    "hankel1_derivative", "sqrt_upper", "GridField", "GridSpec", "apply_tp_stokes_operator",
    "convolve_remainder", "make_grid", "read_field", "solve_by_representation", "solve_tp_stokes",
    "write_field",
]
