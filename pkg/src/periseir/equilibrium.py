"""Reproduction numbers and endemic equilibria of the averaged systems.

The periodic systems have no fixed point, so "the equilibrium" always
refers to the constant-coefficient average (beta = b0, recruitment = mu,
total population 1).  That stationary point is what the control problem
and the fitting routines use as their starting state.
"""
from __future__ import annotations

from .model import ModelParams, StateVec


class NoEndemicEquilibrium(ValueError):
    """The averaged system has no positive stationary point (R0 <= 1)."""


def r0_sirs(params: ModelParams) -> float:
    """Reproduction number of the averaged SIRS system, b0/(nu + mu)."""
    return params.b0 / (params.nu + params.mu)


def r0_seirs(params: ModelParams) -> float:
    """Averaged SEIRS reproduction number with latency survival eps/(eps + mu)."""
    return (params.b0 * params.epsilon
            / ((params.mu + params.nu) * (params.epsilon + params.mu)))


def r0_seirs_variant(params: ModelParams) -> float:
    """Variant SEIRS number whose latency factor divides by (eps + nu) instead."""
    return (params.b0 * params.epsilon
            / ((params.mu + params.nu) * (params.epsilon + params.nu)))


def endemic_equilibrium_seirs(params: ModelParams) -> StateVec:
    """Positive stationary point of the averaged SEIRS system.

    Closed form: S* = 1/R0, and the remaining mass 1 - S* splits across
    E, I, R according to the flow balance; components sum to 1.
    """
    r0 = r0_seirs(params)
    if r0 <= 1.0:
        raise NoEndemicEquilibrium(f"R0 = {r0:.6g} <= 1: infection dies out")
    S = 1.0 / r0
    I = (1.0 - S) / (1.0
                     + (params.mu + params.nu) / params.epsilon
                     + params.nu / (params.mu + params.gamma))
    E = (params.mu + params.nu) * I / params.epsilon
    R = params.nu * I / (params.mu + params.gamma)
    return StateVec(S, E, I, R)


def endemic_equilibrium_sirs(params: ModelParams) -> StateVec:
    """Positive stationary point of the averaged SIRS system (E = 0)."""
    r0 = r0_sirs(params)
    if r0 <= 1.0:
        raise NoEndemicEquilibrium(f"R0 = {r0:.6g} <= 1: infection dies out")
    S = 1.0 / r0
    I = (1.0 - S) / (1.0 + params.nu / (params.mu + params.gamma))
    R = params.nu * I / (params.mu + params.gamma)
    return StateVec(S, 0.0, I, R)
