"""Normalized sensitivity (elasticity) indices of the reproduction number.

Two closed-form modes are provided because the two R0 variants in
`equilibrium` differ in their latency denominator; the numeric mode
differentiates any user-supplied R0 function by central differences and
serves as the oracle for both.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .model import ModelParams
from .rk4 import TimeGrid, Trajectory, rk4_forward
from . import model

MODES = ("standard", "variant", "numeric")

#: parameters the index is defined for ("beta" scales with b0)
INDEX_PARAMETERS = ("beta", "epsilon", "nu", "mu")

_PERTURBABLE = ("mu", "nu", "gamma", "epsilon", "b0", "b1", "c1")


class UnknownParameter(ValueError):
    """Sensitivity requested for a parameter the formula does not cover."""


class DegenerateValue(ValueError):
    """Normalization impossible (the reproduction number vanished)."""


@dataclass(frozen=True)
class SensitivityIndex:
    parameter: str
    value: float
    mode: str


def _field_for(name: str) -> str:
    if name not in INDEX_PARAMETERS:
        raise UnknownParameter(f"no sensitivity index for {name!r}")
    return "b0" if name == "beta" else name


def sensitivity_analytic_standard(params: ModelParams, name: str) -> SensitivityIndex:
    """Closed-form elasticity of b0*eps/((mu+nu)(eps+mu)) w.r.t. one rate."""
    mu, nu, eps = params.mu, params.nu, params.epsilon
    _field_for(name)
    if name == "beta":
        value = 1.0
    elif name == "epsilon":
        value = mu / (eps + mu)
    elif name == "nu":
        value = -nu / (mu + nu)
    else:  # mu
        value = -mu / (mu + nu) - mu / (eps + mu)
    return SensitivityIndex(name, value, "standard")


def sensitivity_analytic_variant(params: ModelParams, name: str) -> SensitivityIndex:
    """Closed-form elasticity of the variant number b0*eps/((mu+nu)(eps+nu))."""
    mu, nu, eps = params.mu, params.nu, params.epsilon
    _field_for(name)
    if name == "beta":
        value = 1.0
    elif name == "epsilon":
        value = nu / (eps + nu)
    elif name == "nu":
        value = -nu / (mu + nu) - nu / (eps + nu)
    else:  # mu
        value = -mu / (mu + nu)
    return SensitivityIndex(name, value, "variant")


def sensitivity_numeric(r0_fn, params: ModelParams, name: str,
                        rel_step: float = 1e-5) -> SensitivityIndex:
    """Central-difference elasticity (dR0/dp)*(p/R0) of any R0 function."""
    field = _field_for(name)
    if not 0.0 < rel_step <= 0.1:
        raise ValueError("rel_step must lie in (0, 0.1]")
    x = getattr(params, field)
    r0 = r0_fn(params)
    if r0 == 0.0:
        raise DegenerateValue("cannot normalize: R0 = 0")
    dx = rel_step * x
    hi = r0_fn(replace(params, **{field: x + dx}))
    lo = r0_fn(replace(params, **{field: x - dx}))
    value = (hi - lo) / (2.0 * dx) * x / r0
    return SensitivityIndex(name, value, "numeric")


def perturbation_pair(params: ModelParams, name: str, factor: float,
                      grid: TimeGrid, y0) -> tuple[Trajectory, Trajectory]:
    """Baseline and single-parameter-scaled SEIRS trajectories, same grid.

    `factor` multiplies one rate (e.g. 1.10 for a +10% bump); "beta"
    addresses b0.  Useful to visualize which rates move the infectious
    curve and which leave it unchanged.
    """
    field = "b0" if name == "beta" else name
    if field not in _PERTURBABLE:
        raise UnknownParameter(f"cannot perturb {name!r}")
    perturbed = replace(params, **{field: getattr(params, field) * factor})
    base = rk4_forward(lambda t, y: model.seirs_rhs(params, t, y), grid, y0)
    bumped = rk4_forward(lambda t, y: model.seirs_rhs(perturbed, t, y), grid, y0)
    return base, bumped
