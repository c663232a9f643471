"""Fixed-step classical Runge-Kutta integration on uniform time grids.

Forward integration fills a trajectory from its initial node; backward
integration starts from terminal data and fills the same ascending grid,
which is the shape the costate solves need.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import StateVec, CostateVec


class NonFiniteState(RuntimeError):
    """A component became NaN or infinite during integration."""


class OutOfRange(ValueError):
    """Requested sample time lies outside the trajectory's grid."""


class GridMismatch(ValueError):
    """Two objects that must share a time grid do not."""


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    tf: float
    n_steps: int

    def __post_init__(self):
        if not self.tf > self.t0:
            raise ValueError("tf must exceed t0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def h(self) -> float:
        return (self.tf - self.t0) / self.n_steps

    def nodes(self) -> np.ndarray:
        return np.linspace(self.t0, self.tf, self.n_steps + 1)


@dataclass(frozen=True)
class Trajectory:
    """Per-node vectors on a TimeGrid (values row k belongs to node k)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.grid.n_steps + 1:
            raise ValueError("values must be (n_steps + 1, dim)")


def same_grid(a: TimeGrid, b: TimeGrid) -> bool:
    return a.t0 == b.t0 and a.tf == b.tf and a.n_steps == b.n_steps


def _coerce_initial(y):
    if isinstance(y, (StateVec, CostateVec)):
        y = y.as_array()
    return np.atleast_1d(np.array(y, dtype=float))


def rk4_forward(rhs, grid: TimeGrid, y0) -> Trajectory:
    """Integrate dy/dt = rhs(t, y) from grid.t0 up to grid.tf.

    Classical four-stage scheme; `rhs` is evaluated at the step endpoints
    and midpoint.  Raises NonFiniteState as soon as the state blows up.
    """
    h = grid.h
    y = _coerce_initial(y0)
    out = np.empty((grid.n_steps + 1, y.size))
    out[0] = y
    for k in range(grid.n_steps):
        t = grid.t0 + k * h
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1))
        k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2))
        k4 = np.asarray(rhs(t + h, y + h * k3))
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at t = {t + h:.6g}")
        out[k + 1] = y
    return Trajectory(grid, out)


def rk4_backward(rhs, grid: TimeGrid, y_tf) -> Trajectory:
    """Integrate from grid.tf down to grid.t0 (negative step).

    The result is stored on the same ascending grid, with the supplied
    terminal data in the last row.
    """
    h = grid.h
    y = _coerce_initial(y_tf)
    out = np.empty((grid.n_steps + 1, y.size))
    out[grid.n_steps] = y
    for k in range(grid.n_steps, 0, -1):
        t = grid.t0 + k * h
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t - 0.5 * h, y - 0.5 * h * k1))
        k3 = np.asarray(rhs(t - 0.5 * h, y - 0.5 * h * k2))
        k4 = np.asarray(rhs(t - h, y - h * k3))
        y = y - (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at t = {t - h:.6g}")
        out[k - 1] = y
    return Trajectory(grid, out)


def sample_at(traj: Trajectory, t: float) -> np.ndarray:
    """One linearly interpolated vector; exact when t hits a grid node."""
    g = traj.grid
    if t < g.t0 - 1e-12 or t > g.tf + 1e-12:
        raise OutOfRange(f"t = {t!r} outside [{g.t0!r}, {g.tf!r}]")
    pos = (min(max(t, g.t0), g.tf) - g.t0) / g.h
    nearest = round(pos)
    if abs(pos - nearest) < 1e-9:
        return traj.values[int(nearest)].copy()
    k = int(pos)
    w = pos - k
    return (1.0 - w) * traj.values[k] + w * traj.values[k + 1]


def sample(traj: Trajectory, times) -> np.ndarray:
    """Linear interpolation at each requested time, one row per time."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return np.vstack([sample_at(traj, float(t)) for t in times])


def trajectory_to_csv(traj: Trajectory, path, labels=("S", "E", "I", "R")) -> None:
    """Write `t,<labels...>` rows with full double precision."""
    if len(labels) != traj.values.shape[1]:
        raise ValueError("one label per component required")
    lines = ["t," + ",".join(labels)]
    for t, row in zip(traj.grid.nodes(), traj.values):
        lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def trajectory_from_csv(path):
    """Read a trajectory CSV back; returns (labels, Trajectory)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("t,"):
        raise ValueError(f"{path}: not a trajectory CSV")
    labels = tuple(lines[0].split(",")[1:])
    rows = [[float(cell) for cell in line.split(",")] for line in lines[1:] if line]
    data = np.array(rows)
    ts, values = data[:, 0], data[:, 1:]
    if len(ts) < 2:
        raise ValueError(f"{path}: need at least two rows")
    steps = np.diff(ts)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ValueError(f"{path}: grid is not uniform")
    grid = TimeGrid(float(ts[0]), float(ts[-1]), len(ts) - 1)
    return labels, Trajectory(grid, values)
