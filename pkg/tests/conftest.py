import numpy as np
import pytest

from risktraj.scenario import compare_cases, default_config
from risktraj.trajectory import TimeGrid, Trajectory


def make_exponential(r0=2.0, lam=0.5, baseline=0.0, dt=0.01, t_start=0.0, n=2001):
    """Analytic r(t) = baseline + r0*exp(-lam*(t - t_start)) on a uniform grid."""
    grid = TimeGrid(t_start=t_start, dt=dt, n_samples=n)
    t = grid.times() - t_start
    return Trajectory(grid, baseline + r0 * np.exp(-lam * t))


@pytest.fixture(scope="session")
def default_comparison():
    """One shared three-case run of the shipped defaults."""
    return compare_cases(default_config())
