import numpy as np
import pytest

from periseir import (CostWeights, ModelParams, TimeGrid,
                      endemic_equilibrium_seirs, forward_backward_sweep,
                      solve_states)

# Benchmark parameter sets used across the suite.  The SEIRS set carries
# the seasonal amplitudes on both transmission and recruitment; the SIRS
# set has no latency so epsilon/c1 are inert placeholders there.
SEIRS_KW = dict(mu=0.0113, nu=36.0, gamma=1.8, epsilon=91.0,
                b0=88.25, b1=0.17, c1=0.17, phi=7 * np.pi / 5, s=35000.0)
SIRS_KW = dict(mu=0.0113, nu=36.0, gamma=1.8, epsilon=91.0,
               b0=74.2, b1=0.14, c1=0.0, phi=7 * np.pi / 5, s=35000.0)


@pytest.fixture(scope="session")
def seirs_params():
    return ModelParams(**SEIRS_KW)


@pytest.fixture(scope="session")
def sirs_params():
    return ModelParams(**SIRS_KW)


@pytest.fixture(scope="session")
def control_params():
    # same rates, phase pinned to pi/2 for the treatment scenario
    return ModelParams(**{**SEIRS_KW, "phi": np.pi / 2})


@pytest.fixture(scope="session")
def control_weights():
    return CostWeights(kappa1=1.0, kappa2=0.001, unit_cost=1.0,
                       t_f=5.0, control_max=1.0)


@pytest.fixture(scope="session")
def control_grid():
    return TimeGrid(0.0, 5.0, 5000)


@pytest.fixture(scope="session")
def control_y0(control_params):
    return endemic_equilibrium_seirs(control_params).as_array()


@pytest.fixture(scope="session")
def swept(control_params, control_weights, control_y0, control_grid):
    """Converged sweep on the benchmark treatment scenario (shared: ~4 s)."""
    solution = forward_backward_sweep(control_params, control_weights,
                                      control_y0, control_grid)
    assert solution.converged
    return solution


@pytest.fixture(scope="session")
def untreated(control_params, control_y0, control_grid):
    return solve_states(control_params, control_grid, control_y0)
