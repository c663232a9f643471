"""Seasonally forced SIRS/SEIRS epidemic toolkit.

Simulation, parameter fitting against monthly case counts, reproduction-
number sensitivity indices, optimal treatment scheduling, and
cost-effectiveness reporting, with a CLI front end (``periseir``).
"""

__version__ = "0.1.0"

from .model import (ModelParams, CostWeights, StateVec, CostateVec,
                    ParamsFileError, beta_at, lambda_at, sirs_rhs, seirs_rhs,
                    controlled_seirs_rhs, adjoint_rhs, hamiltonian,
                    load_params, save_params, PARAM_KEYS)
from .rk4 import (TimeGrid, Trajectory, rk4_forward, rk4_backward, sample,
                  sample_at, trajectory_to_csv, trajectory_from_csv,
                  NonFiniteState, OutOfRange, GridMismatch)
from .equilibrium import (r0_sirs, r0_seirs, r0_seirs_variant,
                          endemic_equilibrium_seirs, endemic_equilibrium_sirs,
                          NoEndemicEquilibrium)
from .sensitivity import (SensitivityIndex, sensitivity_analytic_standard,
                          sensitivity_analytic_variant, sensitivity_numeric,
                          perturbation_pair, UnknownParameter, DegenerateValue)
from .fitting import (CaseSeries, FitSpec, FitResult, fit, load_case_series,
                      save_case_series, predict_cases, synthetic_case_series,
                      relative_error, equilibrium_for, LengthMismatch,
                      ZeroNorm, InvalidSpec, ParseError, GapError,
                      NegativeCount, DEFAULT_BOUNDS)
from .control import (ControlSignal, SweepSolution, forward_backward_sweep,
                      solve_states, solve_costates, solve_bvp_oracle,
                      extremal_control, objective, adjoint_gradient_check,
                      NewtonDivergence)
from .cost import (EffectivenessReport, efficacy, cases_averted,
                   effectiveness, total_cost, acer, build_report,
                   ZeroInitial, ZeroAverted)

__all__ = [
    "__version__",
    # model
    "ModelParams", "CostWeights", "StateVec", "CostateVec", "ParamsFileError",
    "beta_at", "lambda_at", "sirs_rhs", "seirs_rhs", "controlled_seirs_rhs",
    "adjoint_rhs", "hamiltonian", "load_params", "save_params", "PARAM_KEYS",
    # integrator
    "TimeGrid", "Trajectory", "rk4_forward", "rk4_backward", "sample",
    "sample_at", "trajectory_to_csv", "trajectory_from_csv", "NonFiniteState",
    "OutOfRange", "GridMismatch",
    # equilibrium
    "r0_sirs", "r0_seirs", "r0_seirs_variant", "endemic_equilibrium_seirs",
    "endemic_equilibrium_sirs", "NoEndemicEquilibrium",
    # sensitivity
    "SensitivityIndex", "sensitivity_analytic_standard",
    "sensitivity_analytic_variant", "sensitivity_numeric", "perturbation_pair",
    "UnknownParameter", "DegenerateValue",
    # fitting
    "CaseSeries", "FitSpec", "FitResult", "fit", "load_case_series",
    "save_case_series", "predict_cases", "synthetic_case_series",
    "relative_error", "equilibrium_for", "LengthMismatch", "ZeroNorm",
    "InvalidSpec", "ParseError", "GapError", "NegativeCount", "DEFAULT_BOUNDS",
    # control
    "ControlSignal", "SweepSolution", "forward_backward_sweep", "solve_states",
    "solve_costates", "solve_bvp_oracle", "extremal_control", "objective",
    "adjoint_gradient_check", "NewtonDivergence",
    # cost-effectiveness
    "EffectivenessReport", "efficacy", "cases_averted", "effectiveness",
    "total_cost", "acer", "build_report", "ZeroInitial", "ZeroAverted",
]
