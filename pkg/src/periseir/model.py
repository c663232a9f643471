"""Seasonally forced SIRS/SEIRS building blocks.

State vectors are numpy arrays ordered ``(S, E, I, R)``; costate vectors
are ordered ``(p1, p2, p3, p4)``.  Time is measured in years, all rates
are annual, and the transmission and recruitment coefficients share a
single cosine forcing term with a one-year period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi

#: keys of the flat parameter file, in canonical order
PARAM_KEYS = ("mu", "nu", "gamma", "epsilon", "b0", "b1", "c1", "phi", "s")


class ParamsFileError(ValueError):
    """Raised when a parameter file cannot be parsed into ModelParams."""


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological and forcing constants.

    Parameters
    ----------
    mu : float
        Birth rate, set equal to the mortality rate (per year).
    nu : float
        Rate of loss of infectiousness (per year).
    gamma : float
        Rate of loss of immunity (per year).
    epsilon : float
        Latency exit rate (per year); ignored by the SIRS system.
    b0 : float
        Mean transmission rate (per year).
    b1 : float
        Relative seasonal amplitude of transmission, in [0, 1].
    c1 : float
        Relative seasonal amplitude of recruitment, in [0, 1].
    phi : float
        Phase angle of the cosine forcing (radians).
    s : float
        Scale mapping the infectious fraction to reported monthly cases.
    """

    mu: float
    nu: float
    gamma: float
    epsilon: float
    b0: float
    b1: float
    c1: float
    phi: float
    s: float

    def __post_init__(self):
        for name in PARAM_KEYS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("mu", "nu", "gamma", "epsilon", "b0", "s"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("b1", "c1"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_KEYS}


@dataclass(frozen=True)
class StateVec:
    """Compartment fractions at one instant (E stays 0 for SIRS)."""

    S: float
    E: float
    I: float
    R: float

    def as_array(self) -> np.ndarray:
        return np.array((self.S, self.E, self.I, self.R))

    @classmethod
    def from_array(cls, a) -> "StateVec":
        S, E, I, R = np.asarray(a, dtype=float)
        return cls(float(S), float(E), float(I), float(R))


@dataclass(frozen=True)
class CostateVec:
    """Adjoint values at one instant; all must vanish at the terminal time."""

    p1: float
    p2: float
    p3: float
    p4: float

    def as_array(self) -> np.ndarray:
        return np.array((self.p1, self.p2, self.p3, self.p4))

    @classmethod
    def from_array(cls, a) -> "CostateVec":
        p1, p2, p3, p4 = np.asarray(a, dtype=float)
        return cls(float(p1), float(p2), float(p3), float(p4))


@dataclass(frozen=True)
class CostWeights:
    """Objective weights and control-problem constants.

    ``kappa1`` weighs the infectious burden, ``kappa2`` the quadratic
    control effort; ``unit_cost`` is the per-person cost of detecting and
    treating one case, ``t_f`` the horizon in years, and ``control_max``
    the admissible cap on the treatment rate.
    """

    kappa1: float
    kappa2: float
    unit_cost: float = 1.0
    t_f: float = 5.0
    control_max: float = 1.0

    def __post_init__(self):
        # kappa1 = 0 is allowed (pure effort minimization: no treatment).
        if self.kappa1 < 0.0:
            raise ValueError("kappa1 must be >= 0")
        if not self.kappa2 > 0.0:
            raise ValueError("kappa2 must be positive")
        if self.unit_cost < 0.0:
            raise ValueError("unit_cost must be >= 0")
        if not self.t_f > 0.0:
            raise ValueError("t_f must be positive")
        if not self.control_max > 0.0:
            raise ValueError("control_max must be positive")


def as_state_array(y) -> np.ndarray:
    """Coerce a StateVec or 4-sequence into a float array (S, E, I, R)."""
    if isinstance(y, StateVec):
        return y.as_array()
    a = np.asarray(y, dtype=float)
    if a.shape != (4,):
        raise ValueError("state must have exactly 4 components")
    return a


def beta_at(params: ModelParams, t: float) -> float:
    """Transmission rate b0*(1 + b1*cos(2*pi*t + phi)), 1-periodic in t."""
    return params.b0 * (1.0 + params.b1 * math.cos(TWO_PI * t + params.phi))


def lambda_at(params: ModelParams, t: float) -> float:
    """Recruitment rate mu*(1 + c1*cos(2*pi*t + phi)), 1-periodic in t."""
    return params.mu * (1.0 + params.c1 * math.cos(TWO_PI * t + params.phi))


def sirs_rhs(params: ModelParams, t: float, y) -> np.ndarray:
    """Time derivative of the SIRS system; the E slot is pinned to zero.

    Recruitment is the constant mu (no seasonal amplitude on births), so
    with S + I + R = 1 the component sum is conserved.
    """
    S, _, I, R = y
    infection = beta_at(params, t) * S * I
    dS = params.mu - params.mu * S - infection + params.gamma * R
    dI = infection - (params.nu + params.mu) * I
    dR = params.nu * I - (params.mu + params.gamma) * R
    return np.array((dS, 0.0, dI, dR))


def controlled_seirs_rhs(params: ModelParams, t: float, y, treatment: float) -> np.ndarray:
    """SEIRS derivative with a treatment flow T*I moved from I to R."""
    S, E, I, R = y
    infection = beta_at(params, t) * S * I
    dS = lambda_at(params, t) - params.mu * S - infection + params.gamma * R
    dE = infection - (params.mu + params.epsilon) * E
    dI = params.epsilon * E - (params.mu + params.nu) * I - treatment * I
    dR = params.nu * I - (params.mu + params.gamma) * R + treatment * I
    return np.array((dS, dE, dI, dR))


def seirs_rhs(params: ModelParams, t: float, y) -> np.ndarray:
    """Time derivative of the uncontrolled SEIRS system."""
    return controlled_seirs_rhs(params, t, y, 0.0)


def adjoint_rhs(params: ModelParams, weights: CostWeights, t: float, y, p,
                treatment: float) -> np.ndarray:
    """Costate derivative for the treatment problem (to be solved backward).

    Equals minus the state gradient of the Hamiltonian; `hamiltonian`
    exists so tests can verify that by finite differences.
    """
    S, _, I, _ = y
    p1, p2, p3, p4 = p
    b = beta_at(params, t)
    dp1 = p1 * (params.mu + b * I) - b * I * p2
    dp2 = p2 * (params.mu + params.epsilon) - params.epsilon * p3
    dp3 = (-weights.kappa1 + b * S * (p1 - p2)
           + p3 * (params.mu + params.nu + treatment)
           - p4 * (params.nu + treatment))
    dp4 = -params.gamma * p1 + p4 * (params.mu + params.gamma)
    return np.array((dp1, dp2, dp3, dp4))


def hamiltonian(params: ModelParams, weights: CostWeights, t: float, y, p,
                treatment: float) -> float:
    """Running cost plus costate-weighted dynamics; testing helper only."""
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    running = weights.kappa1 * y[2] + weights.kappa2 * treatment ** 2
    return float(running + p @ controlled_seirs_rhs(params, t, y, treatment))


def load_params(path) -> ModelParams:
    """Read a flat `key = value` parameter file (# starts a comment)."""
    path = Path(path)
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if not sep or not key or not text:
            raise ParamsFileError(f"{path}:{lineno}: expected 'key = value'")
        if key not in PARAM_KEYS:
            raise ParamsFileError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ParamsFileError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = float(text)
        except ValueError:
            raise ParamsFileError(f"{path}:{lineno}: bad number {text!r}") from None
    missing = [k for k in PARAM_KEYS if k not in values]
    if missing:
        raise ParamsFileError(f"{path}: missing keys: {', '.join(missing)}")
    try:
        return ModelParams(**values)
    except ValueError as exc:
        raise ParamsFileError(f"{path}: {exc}") from exc


def save_params(params: ModelParams, path) -> None:
    """Write the flat parameter file; floats keep full precision."""
    lines = [f"{key} = {getattr(params, key)!r}" for key in PARAM_KEYS]
    Path(path).write_text("\n".join(lines) + "\n")
