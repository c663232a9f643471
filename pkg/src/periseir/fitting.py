"""Monthly case-count ingestion and derivative-free parameter estimation.

The fit minimizes the relative l2 error between reported monthly counts
and the scaled infectious fraction sampled at month starts.  Free
parameters are searched by Nelder-Mead inside their boxes (via a sine
transform), started from the user guess plus low-discrepancy restarts;
the case scale is solved in closed form inside every evaluation, so the
simplex never sees that direction.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .equilibrium import (NoEndemicEquilibrium, endemic_equilibrium_seirs,
                          endemic_equilibrium_sirs)
from .model import PARAM_KEYS, TWO_PI, ModelParams, seirs_rhs, sirs_rhs
from .rk4 import TimeGrid, rk4_forward, sample

MODEL_KINDS = ("sirs", "seirs")

DEFAULT_BOUNDS = {
    "b0": (10.0, 300.0),
    "b1": (0.0, 0.9),
    "c1": (0.0, 0.9),
    "phi": (0.0, TWO_PI),
    "s": (1e3, 1e6),
}

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


class ParseError(ValueError):
    """Malformed case-series file."""


class GapError(ValueError):
    """Months in the series are not strictly consecutive."""


class NegativeCount(ValueError):
    """A reported count is negative."""


class LengthMismatch(ValueError):
    """Prediction and data lengths differ."""


class ZeroNorm(ValueError):
    """Relative error undefined: the data has zero norm."""


class InvalidSpec(ValueError):
    """The fit specification is inconsistent."""


def _month_number(label: str, where: str) -> int:
    m = _MONTH_RE.match(label)
    if not m:
        raise ParseError(f"{where}: month must be YYYY-MM, got {label!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ParseError(f"{where}: month out of range in {label!r}")
    return year * 12 + (month - 1)


def _month_label(number: int) -> str:
    return f"{number // 12:04d}-{number % 12 + 1:02d}"


@dataclass(frozen=True)
class CaseSeries:
    """Reported cases per month, starting at the `start` label (YYYY-MM)."""

    start: str
    counts: np.ndarray

    @property
    def n_months(self) -> int:
        return len(self.counts)

    def month_labels(self) -> list[str]:
        first = _month_number(self.start, "CaseSeries.start")
        return [_month_label(first + k) for k in range(self.n_months)]


def load_case_series(path) -> CaseSeries:
    """Read a `month,cases` CSV with strictly consecutive YYYY-MM rows."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [cell.strip() for cell in rows[0]]
    if header != ["month", "cases"]:
        raise ParseError(f"{path}: header must be 'month,cases'")
    if len(rows) < 3:
        raise ParseError(f"{path}: need at least two data rows")
    numbers, counts = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        where = f"{path}:{lineno}"
        if len(row) != 2:
            raise ParseError(f"{where}: expected 2 columns")
        numbers.append(_month_number(row[0].strip(), where))
        try:
            value = float(row[1])
        except ValueError:
            raise ParseError(f"{where}: bad count {row[1]!r}") from None
        if not math.isfinite(value):
            raise ParseError(f"{where}: count must be finite")
        if value < 0.0:
            raise NegativeCount(f"{where}: negative count {value!r}")
        counts.append(value)
    for prev, cur in zip(numbers, numbers[1:]):
        if cur != prev + 1:
            raise GapError(f"{path}: {_month_label(prev)} is followed by "
                           f"{_month_label(cur)}")
    return CaseSeries(_month_label(numbers[0]), np.array(counts))


def save_case_series(series: CaseSeries, path) -> None:
    lines = ["month,cases"]
    for label, count in zip(series.month_labels(), series.counts):
        lines.append(f"{label},{float(count)!r}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def _rhs_for(kind: str, params: ModelParams):
    if kind == "sirs":
        return lambda t, y: sirs_rhs(params, t, y)
    return lambda t, y: seirs_rhs(params, t, y)


def equilibrium_for(kind: str, params: ModelParams):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    if kind == "sirs":
        return endemic_equilibrium_sirs(params)
    return endemic_equilibrium_seirs(params)


def predict_cases(params: ModelParams, kind: str, n_months: int, y0,
                  steps_per_month: int = 24,
                  burn_in_years: int = 0) -> np.ndarray:
    """Scaled infectious fractions sampled at month starts t_k = k/12.

    With a burn-in, the model first runs that many whole years (whole so
    the forcing phase is preserved) and restarts from the resulting state.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    if n_months < 1:
        raise ValueError("n_months must be at least 1")
    rhs = _rhs_for(kind, params)
    if burn_in_years:
        warm = rk4_forward(rhs, TimeGrid(0.0, float(burn_in_years),
                                         12 * steps_per_month * int(burn_in_years)), y0)
        y0 = warm.values[-1]
    grid = TimeGrid(0.0, n_months / 12.0, n_months * steps_per_month)
    traj = rk4_forward(rhs, grid, y0)
    months = np.arange(n_months) / 12.0
    return params.s * sample(traj, months)[:, 2]


def relative_error(pred, empiric) -> float:
    """l2 norm of (pred - data) over the l2 norm of the data."""
    data = empiric.counts if isinstance(empiric, CaseSeries) else empiric
    pred = np.asarray(pred, dtype=float)
    data = np.asarray(data, dtype=float)
    if pred.shape != data.shape:
        raise LengthMismatch(f"{pred.shape} vs {data.shape}")
    denom = float(np.linalg.norm(data))
    if denom == 0.0:
        raise ZeroNorm("data norm is zero")
    return float(np.linalg.norm(pred - data)) / denom


def synthetic_case_series(params: ModelParams, kind: str = "seirs",
                          n_months: int = 35, start: str = "2011-09",
                          noise: float = 0.0, seed: int = 0,
                          steps_per_month: int = 24) -> CaseSeries:
    """Model-generated monthly series, optionally with multiplicative noise."""
    y0 = equilibrium_for(kind, params)
    counts = predict_cases(params, kind, n_months, y0, steps_per_month)
    if noise:
        rng = np.random.default_rng(seed)
        counts = counts * (1.0 + noise * rng.standard_normal(n_months))
        counts = np.maximum(counts, 0.0)
    return CaseSeries(start, counts)


@dataclass(frozen=True)
class FitSpec:
    """What to fit and how.

    `free` names the searched parameters, `fixed` pins the rest; together
    they must cover every model parameter exactly once.  Bounds default
    to DEFAULT_BOUNDS and must be supplied for any free parameter not
    listed there.
    """

    kind: str = "seirs"
    free: tuple = ("b0", "b1", "c1", "phi", "s")
    fixed: dict = field(default_factory=dict)
    guess: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    steps_per_month: int = 24
    max_iter: int = 400
    restarts: int = 8
    seed: int = 0
    burn_in_years: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidSpec(f"unknown model kind {self.kind!r}")
        free = tuple(self.free)
        overlap = set(free) & set(self.fixed)
        if overlap:
            raise InvalidSpec(f"parameters both free and fixed: {sorted(overlap)}")
        covered = set(free) | set(self.fixed)
        if covered != set(PARAM_KEYS):
            missing = sorted(set(PARAM_KEYS) - covered)
            extra = sorted(covered - set(PARAM_KEYS))
            raise InvalidSpec(f"coverage error (missing {missing}, unknown {extra})")
        if self.restarts < 1:
            raise InvalidSpec("restarts must be at least 1")
        if self.steps_per_month < 1:
            raise InvalidSpec("steps_per_month must be at least 1")
        for name in free:
            if name not in self.effective_bounds():
                raise InvalidSpec(f"no bounds for free parameter {name!r}")
            lo, hi = self.effective_bounds()[name]
            if not lo < hi:
                raise InvalidSpec(f"empty bounds for {name!r}")
            x = self.guess.get(name)
            if x is None:
                raise InvalidSpec(f"no guess for free parameter {name!r}")
            if not lo <= x <= hi:
                raise InvalidSpec(f"guess for {name!r} outside [{lo}, {hi}]")

    def effective_bounds(self) -> dict:
        merged = dict(DEFAULT_BOUNDS)
        merged.update(self.bounds)
        return merged


@dataclass(frozen=True)
class FitResult:
    """Best parameters found plus optimizer diagnostics.

    `history` is the running best objective, one entry per evaluation
    (non-increasing by construction).  `phi_offset` is the angle to add
    to `params.phi` (mod 2*pi) to express the phase in the convention
    where zero aligns the forcing maximum with the first data maximum.
    """

    params: ModelParams
    error: float
    iterations: int
    converged: bool
    history: tuple
    phi_offset: float
    start_errors: tuple


def _to_box(z, lo, hi):
    return lo + (hi - lo) * np.sin(z) ** 2


def _from_box(x, lo, hi):
    frac = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return np.arcsin(np.sqrt(frac))


def fit(data: CaseSeries, spec: FitSpec) -> FitResult:
    """Minimize the relative error over the spec's free parameters.

    Each candidate starts the model at its own averaged-system endemic
    equilibrium; candidates without one (reproduction number <= 1) are
    penalized rather than rejected so the simplex can walk out.  Returns
    the best point over all restarts with `converged=False` when no
    restart's simplex terminated properly (never raises for that).
    """
    counts = np.asarray(data.counts, dtype=float)
    data_norm = float(np.linalg.norm(counts))
    if data_norm == 0.0:
        raise ZeroNorm("data norm is zero")
    bounds = spec.effective_bounds()

    profile_s = "s" in spec.free
    simplex_names = [name for name in spec.free if name != "s"]
    if not simplex_names and not profile_s:
        raise InvalidSpec("nothing to fit")
    lo = np.array([bounds[name][0] for name in simplex_names])
    hi = np.array([bounds[name][1] for name in simplex_names])
    s_lo, s_hi = bounds["s"] if profile_s else (None, None)

    def assemble(x):
        values = dict(spec.fixed)
        for name, value in zip(simplex_names, x):
            values[name] = float(value)
        if profile_s:
            values["s"] = 1.0  # replaced after profiling
        return values

    def evaluate(x):
        """Relative error at box point x, profiling s when it is free."""
        values = assemble(x)
        try:
            # predict with unit scale so `base` is the raw infectious
            # fraction; the actual scale multiplies it below
            params = ModelParams(**{**values, "s": 1.0})
            y0 = equilibrium_for(spec.kind, params)
        except (ValueError, NoEndemicEquilibrium):
            # no endemic state to start from; penalize with a slope back
            # toward the R0 > 1 region so the simplex can escape
            if spec.kind == "sirs":
                r0 = values["b0"] / (values["nu"] + values["mu"])
            else:
                r0 = (values["b0"] * values["epsilon"]
                      / ((values["mu"] + values["nu"])
                         * (values["epsilon"] + values["mu"])))
            return 10.0 + max(0.0, 1.0 - r0), None
        base = predict_cases(params, spec.kind, data.n_months, y0,
                             spec.steps_per_month, spec.burn_in_years)
        if profile_s:
            denom = float(base @ base)
            s_star = s_lo if denom == 0.0 else float(
                min(max((base @ counts) / denom, s_lo), s_hi))
        else:
            s_star = values["s"]
        err = float(np.linalg.norm(s_star * base - counts)) / data_norm
        return err, s_star

    history = []
    best_running = [math.inf]

    def objective_z(z):
        err, _ = evaluate(_to_box(z, lo, hi))
        best_running[0] = min(best_running[0], err)
        history.append(best_running[0])
        return err

    if not simplex_names:
        # only the scale is free; its inner least-squares solve is exact
        err, s_star = evaluate(np.empty(0))
        values = assemble(np.empty(0))
        values["s"] = s_star
        return FitResult(params=ModelParams(**values), error=err,
                         iterations=0, converged=True, history=(err,),
                         phi_offset=(TWO_PI * int(np.argmax(counts)) / 12.0)
                         % TWO_PI,
                         start_errors=(err,))

    # start points: the user guess plus scrambled low-discrepancy fills
    starts = [_from_box([spec.guess[name] for name in simplex_names], lo, hi)]
    if spec.restarts > 1:
        sampler = qmc.Halton(d=len(simplex_names), scramble=True, seed=spec.seed)
        for u in sampler.random(spec.restarts - 1):
            starts.append(np.arcsin(np.sqrt(u)))

    # explore loosely from every start, then polish only the winner tightly
    explore = {"maxiter": spec.max_iter, "xatol": 1e-4, "fatol": 1e-9,
               "adaptive": True}
    refine = {"maxiter": spec.max_iter, "xatol": 1e-8, "fatol": 1e-12,
              "adaptive": True}
    results = []
    for z0 in starts:
        results.append(minimize(objective_z, z0, method="Nelder-Mead",
                                options=explore))
    best_index = min(range(len(results)), key=lambda i: results[i].fun)
    best = results[best_index]
    polish = minimize(objective_z, best.x, method="Nelder-Mead", options=refine)
    if polish.fun < best.fun:
        best = polish

    x_best = _to_box(best.x, lo, hi)
    err, s_star = evaluate(x_best)
    values = assemble(x_best)
    if profile_s:
        values["s"] = s_star
    if "phi" in spec.free:
        values["phi"] = values["phi"] % TWO_PI
    fitted = ModelParams(**values)

    first_max = int(np.argmax(counts))
    phi_offset = (TWO_PI * first_max / 12.0) % TWO_PI
    iterations = sum(r.nit for r in results) + polish.nit
    converged = bool(best.success)
    return FitResult(params=fitted, error=err, iterations=int(iterations),
                     converged=converged, history=tuple(history),
                     phi_offset=phi_offset,
                     start_errors=tuple(float(r.fun) for r in results))
