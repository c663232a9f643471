"""Treatment optimal control: forward-backward sweep plus boundary-value checks.

The sweep alternates a forward state solve, a backward costate solve from
zero terminal data, and a relaxed projection update of the control until
states, costates and control all stop moving.  An independent route
(single shooting on short horizons, collocation on long ones) solves the
same first-order conditions as a two-point boundary value problem so the
two methods can cross-validate each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_bvp, trapezoid

from .model import (CostWeights, ModelParams, adjoint_rhs, as_state_array,
                    beta_at, controlled_seirs_rhs, lambda_at, seirs_rhs)
from .rk4 import (GridMismatch, NonFiniteState, TimeGrid, Trajectory,
                  rk4_backward, rk4_forward, same_grid)


class NewtonDivergence(RuntimeError):
    """The boundary-value solve failed; the oracle is inconclusive."""


@dataclass(frozen=True)
class ControlSignal:
    """Treatment intensity sampled at the grid nodes."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.n_steps + 1,):
            raise ValueError("control needs one value per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("control values must be finite")
        if self.values.min() < 0.0:
            raise ValueError("control values must be nonnegative")


@dataclass(frozen=True)
class SweepSolution:
    states: Trajectory
    costates: Trajectory
    control: ControlSignal
    objective: float
    iterations: int
    converged: bool
    final_change: float
    method: str = "sweep"


def extremal_control(p3, p4, i, kappa2: float, control_max: float):
    """Pointwise minimizer of the Hamiltonian: clamp((p3-p4)*I/(2*kappa2))."""
    if not kappa2 > 0.0:
        raise ValueError("kappa2 must be positive")
    return np.clip((p3 - p4) * i / (2.0 * kappa2), 0.0, control_max)


def objective(states: Trajectory, control: ControlSignal, weights: CostWeights) -> float:
    """Trapezoid quadrature of kappa1*I + kappa2*T^2 over the grid."""
    if not same_grid(states.grid, control.grid):
        raise GridMismatch("states and control use different grids")
    integrand = (weights.kappa1 * states.values[:, 2]
                 + weights.kappa2 * control.values ** 2)
    return float(trapezoid(integrand, dx=states.grid.h))


def _lerp_scalar(grid: TimeGrid, values: np.ndarray, t: float) -> float:
    pos = (t - grid.t0) / grid.h
    k = int(pos)
    if k >= grid.n_steps:
        return float(values[grid.n_steps])
    if k < 0:
        return float(values[0])
    w = pos - k
    return float(values[k] + w * (values[k + 1] - values[k]))


def _lerp_row(grid: TimeGrid, values: np.ndarray, t: float) -> np.ndarray:
    pos = (t - grid.t0) / grid.h
    k = int(pos)
    if k >= grid.n_steps:
        return values[grid.n_steps]
    if k < 0:
        return values[0]
    w = pos - k
    return values[k] + w * (values[k + 1] - values[k])


def solve_states(params: ModelParams, grid: TimeGrid, y0,
                 control: ControlSignal | None = None) -> Trajectory:
    """Forward state solve; the control is linearly interpolated at stage times."""
    y0 = as_state_array(y0)
    if control is None:
        return rk4_forward(lambda t, y: seirs_rhs(params, t, y), grid, y0)
    if not same_grid(grid, control.grid):
        raise GridMismatch("control grid differs from integration grid")
    cv = control.values

    def rhs(t, y):
        return controlled_seirs_rhs(params, t, y, _lerp_scalar(grid, cv, t))

    return rk4_forward(rhs, grid, y0)


def solve_costates(params: ModelParams, weights: CostWeights, grid: TimeGrid,
                   states: Trajectory, control: ControlSignal) -> Trajectory:
    """Backward costate solve from the zero terminal condition."""
    if not same_grid(grid, states.grid) or not same_grid(grid, control.grid):
        raise GridMismatch("states/control grids differ from integration grid")
    sv, cv = states.values, control.values

    def rhs(t, p):
        y = _lerp_row(grid, sv, t)
        return adjoint_rhs(params, weights, t, y, p, _lerp_scalar(grid, cv, t))

    return rk4_backward(rhs, grid, np.zeros(4))


def _relative_change(old, new) -> float:
    if old is None:
        return math.inf
    scale = max(float(np.abs(new).max()), 1e-12)
    return float(np.abs(new - old).max()) / scale


def forward_backward_sweep(params: ModelParams, weights: CostWeights, y0,
                           grid: TimeGrid, relaxation: float = 0.5,
                           tol: float = 1e-4, max_iter: int = 500) -> SweepSolution:
    """Iterate state solve / costate solve / relaxed control update.

    The control starts at zero, each update is
    ``(1 - relaxation) * old + relaxation * projection`` with the
    projection from `extremal_control`, and the iteration stops when the
    largest relative change across states, costates and control drops
    below ``tol``.  A run that exhausts ``max_iter`` is returned with
    ``converged=False`` rather than raised, so callers can inspect it.
    """
    if not 0.0 < relaxation <= 1.0:
        raise ValueError("relaxation must lie in (0, 1]")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if not math.isclose(grid.tf - grid.t0, weights.t_f, rel_tol=1e-9):
        raise GridMismatch("weights.t_f does not match the grid span")
    y0 = as_state_array(y0)

    control = ControlSignal(grid, np.zeros(grid.n_steps + 1))
    states = solve_states(params, grid, y0, control)
    costates = None
    change = math.inf
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        new_costates = solve_costates(params, weights, grid, states, control)
        projection = extremal_control(new_costates.values[:, 2],
                                      new_costates.values[:, 3],
                                      states.values[:, 2],
                                      weights.kappa2, weights.control_max)
        new_values = (1.0 - relaxation) * control.values + relaxation * projection
        new_control = ControlSignal(grid, new_values)
        new_states = solve_states(params, grid, y0, new_control)

        change = max(_relative_change(states.values, new_states.values),
                     _relative_change(None if costates is None else costates.values,
                                      new_costates.values),
                     _relative_change(control.values, new_control.values))
        states, costates, control = new_states, new_costates, new_control
        if change < tol:
            converged = True
            break

    return SweepSolution(states=states, costates=costates, control=control,
                         objective=objective(states, control, weights),
                         iterations=iterations, converged=converged,
                         final_change=change, method="sweep")


def adjoint_gradient_check(params: ModelParams, weights: CostWeights, y0,
                           grid: TimeGrid, control: ControlSignal, node: int,
                           fd_step: float = 1e-5) -> tuple[float, float]:
    """Objective gradient w.r.t. one control node, two independent ways.

    Returns ``(adjoint, finite_difference)`` where the adjoint value is
    the quadrature weight times ``2*kappa2*T_k - (p3 - p4)*I`` at the node
    and the finite difference re-runs the forward solve at ``T_k +- fd_step``.
    The perturbed control must stay admissible.
    """
    if not 0 <= node <= grid.n_steps:
        raise ValueError("node outside the grid")
    y0 = as_state_array(y0)
    states = solve_states(params, grid, y0, control)
    costates = solve_costates(params, weights, grid, states, control)
    weight = grid.h if 0 < node < grid.n_steps else 0.5 * grid.h
    adjoint = weight * (2.0 * weights.kappa2 * control.values[node]
                        - (costates.values[node, 2] - costates.values[node, 3])
                        * states.values[node, 2])

    def j_at(values):
        c = ControlSignal(grid, values)
        return objective(solve_states(params, grid, y0, c), c, weights)

    up = control.values.copy()
    up[node] += fd_step
    down = control.values.copy()
    down[node] -= fd_step
    fd = (j_at(up) - j_at(down)) / (2.0 * fd_step)
    return float(adjoint), float(fd)


# ---------------------------------------------------------------------------
# boundary-value route


def _augmented_rhs(params, weights):
    """8-dim state+costate field with the control eliminated pointwise."""
    mu, nu, gamma, eps = params.mu, params.nu, params.gamma, params.epsilon
    k1w, k2w, cap = weights.kappa1, weights.kappa2, weights.control_max

    def rhs(t, z):
        S, E, I, R, p1, p2, p3, p4 = z
        b = beta_at(params, t)
        T = min(max((p3 - p4) * I / (2.0 * k2w), 0.0), cap)
        infection = b * S * I
        return np.array((
            lambda_at(params, t) - mu * S - infection + gamma * R,
            infection - (mu + eps) * E,
            eps * E - (mu + nu) * I - T * I,
            nu * I - (mu + gamma) * R + T * I,
            p1 * (mu + b * I) - b * I * p2,
            p2 * (mu + eps) - eps * p3,
            -k1w + b * S * (p1 - p2) + p3 * (mu + nu + T) - p4 * (nu + T),
            -gamma * p1 + p4 * (mu + gamma),
        ))

    return rhs


def _solution_from_z(params, weights, grid, z_values, iterations, residual,
                     method) -> SweepSolution:
    states = Trajectory(grid, z_values[:, :4].copy())
    costates = Trajectory(grid, z_values[:, 4:].copy())
    control = ControlSignal(grid, np.asarray(extremal_control(
        costates.values[:, 2], costates.values[:, 3], states.values[:, 2],
        weights.kappa2, weights.control_max)))
    return SweepSolution(states=states, costates=costates, control=control,
                         objective=objective(states, control, weights),
                         iterations=iterations, converged=True,
                         final_change=float(residual), method=method)


def _shoot(params, weights, grid, y0, tol, max_newton=50):
    rhs = _augmented_rhs(params, weights)

    def terminal_residual(p0):
        traj = rk4_forward(rhs, grid, np.concatenate((y0, p0)))
        return traj.values[-1, 4:], traj

    p0 = np.zeros(4)
    try:
        residual, traj = terminal_residual(p0)
    except NonFiniteState as exc:
        raise NewtonDivergence(f"initial shot blew up: {exc}") from exc
    for iteration in range(1, max_newton + 1):
        norm = float(np.abs(residual).max())
        if norm < tol:
            return _solution_from_z(params, weights, grid, traj.values,
                                    iteration, norm, "shooting")
        jac = np.empty((4, 4))
        for j in range(4):
            delta = 1e-7 * max(abs(p0[j]), 1e-4)
            probe = p0.copy()
            probe[j] += delta
            try:
                shifted, _ = terminal_residual(probe)
            except NonFiniteState as exc:
                raise NewtonDivergence(f"Jacobian probe blew up: {exc}") from exc
            jac[:, j] = (shifted - residual) / delta
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence("singular shooting Jacobian") from exc
        # backtracking line search; give up if no damping helps
        damping = 1.0
        while True:
            try:
                trial_res, trial_traj = terminal_residual(p0 + damping * step)
            except NonFiniteState:
                trial_res = None
            if trial_res is not None and np.all(np.isfinite(trial_res)) \
                    and np.abs(trial_res).max() < norm:
                break
            damping *= 0.5
            if damping < 1e-10:
                raise NewtonDivergence(
                    f"line search stalled at residual {norm:.3g}")
        p0 = p0 + damping * step
        residual, traj = trial_res, trial_traj
    raise NewtonDivergence(
        f"no convergence in {max_newton} Newton iterations "
        f"(residual {float(np.abs(residual).max()):.3g})")


def _collocate(params, weights, grid, y0, tol):
    rhs_point = _augmented_rhs(params, weights)

    def fun(ts, zs):
        return np.stack([rhs_point(float(t), zs[:, j])
                         for j, t in enumerate(ts)], axis=1)

    def bc(za, zb):
        return np.concatenate((za[:4] - y0, zb[4:]))

    # initial mesh: coarsened uncontrolled forward solve, zero costates
    stride = max(1, grid.n_steps // 600)
    base = solve_states(params, grid, y0)
    xs = grid.nodes()[::stride]
    guess = np.zeros((8, xs.size))
    guess[:4] = base.values[::stride].T
    if xs[-1] != grid.tf:
        xs = np.append(xs, grid.tf)
        guess = np.hstack([guess, np.concatenate((base.values[-1],
                                                  np.zeros(4)))[:, None]])
    result = solve_bvp(fun, bc, xs, guess, tol=tol,
                       max_nodes=max(20000, 10 * grid.n_steps))
    if result.status != 0:
        raise NewtonDivergence(f"collocation failed: {result.message}")
    dense = result.sol(grid.nodes()).T
    return _solution_from_z(params, weights, grid, dense,
                            int(getattr(result, "niter", 0)),
                            float(result.rms_residuals.max()), "collocation")


def solve_bvp_oracle(params: ModelParams, weights: CostWeights, y0,
                     grid: TimeGrid, tol: float = 1e-8,
                     method: str = "auto") -> SweepSolution:
    """Solve the first-order conditions as a boundary value problem.

    Single shooting (Newton on the four terminal costate residuals) is
    used when the horizon is short enough for the costate modes to stay
    within floating-point range; the fastest mode grows like
    exp((mu + max(epsilon, nu)) * span), so beyond that the problem is
    handed to a collocation solver on the same admissibility-projected
    8-dim system.  ``method`` may force "shooting" or "collocation".
    Raises NewtonDivergence when the chosen route fails.
    """
    y0 = as_state_array(y0)
    if not math.isclose(grid.tf - grid.t0, weights.t_f, rel_tol=1e-9):
        raise GridMismatch("weights.t_f does not match the grid span")
    if method == "auto":
        growth = (params.mu + max(params.epsilon, params.nu)) * (grid.tf - grid.t0)
        method = "shooting" if growth <= 8.0 else "collocation"
    if method == "shooting":
        return _shoot(params, weights, grid, y0, tol)
    if method == "collocation":
        return _collocate(params, weights, grid, y0, tol)
    raise ValueError(f"unknown method {method!r}")
