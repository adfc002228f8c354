"""Time-varying penalized regression with closed-form coordinate updates.

Coefficients ``beta(s)`` are estimated per time point by zeroing the
first-order conditions of a Lagrangian that couples the residual sum of
squares with the drift and diffusion of an error SDE.
"""

__version__ = "0.1.0"

from .core import (BasisKind, CoefPath, Family, Panel, PenaltySpec, TimeGrid,  # noqa: E402
                   validate_panel)
from .errors import *  # noqa: E402,F401,F403
from .foc import (FocContext, GFunction, branch_update, closed_update, f_eval,  # noqa: E402
                  foc_residual, foc_residuals, g_eval, group_update)
from .oracle import minimize_f_scalar, ols_normal_equations, validate_family  # noqa: E402
from .penalty import apply_basis, diffusion, diffusion_grad, drift, drift_grad  # noqa: E402
from .propagator import WaveGrid, schrodinger_residual, transition_step  # noqa: E402
from .sde import (DesignSpec, ErrorPaths, euler_maruyama, generate_panel,  # noqa: E402
                  objective_eval, simulate_errors)
from .solver import FitReport, SolveOptions, fit_path, fit_timepoint  # noqa: E402

__all__ = [
    "BasisKind", "CoefPath", "Family", "Panel", "PenaltySpec", "TimeGrid", "validate_panel",
    "FocContext", "GFunction", "branch_update", "closed_update", "f_eval", "foc_residual",
    "foc_residuals", "g_eval", "group_update", "minimize_f_scalar", "ols_normal_equations",
    "validate_family", "apply_basis", "diffusion", "diffusion_grad", "drift", "drift_grad",
    "WaveGrid", "schrodinger_residual", "transition_step", "DesignSpec", "ErrorPaths",
    "euler_maruyama", "generate_panel", "objective_eval", "simulate_errors", "FitReport",
    "SolveOptions", "fit_path", "fit_timepoint",
]
