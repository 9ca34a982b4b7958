"""Shared fixtures.

The expensive simulation objects (reference subcritical run, the dense-window
run behind the Phi scans, the W_star profile) are session-scoped so the whole
suite pays for each of them once.
"""

import math

import numpy as np
import pytest

from pkslab import asymptotics, evolution, fields, profiles
from pkslab.grids import radial_grid
from pkslab.semigroup import gaussian_values


def gaussian_radial(dim, mass, nodes, t0=1.0):
    """mass * Gamma_{t0} sampled radially (the workhorse initial datum)."""
    values = mass * (4.0 * math.pi * t0) ** (-dim / 2.0) * np.exp(
        -(nodes**2) / (4.0 * t0)
    )
    return fields.RadialField(dim=dim, nodes=nodes, values=values)


@pytest.fixture(scope="session")
def default_nodes():
    return radial_grid()


@pytest.fixture(scope="session")
def wstar_default():
    return asymptotics.w_star()


@pytest.fixture(scope="session")
def reference_run_2d():
    """Subcritical M = 4 pi radial run with records dense enough for the
    mild-solution quadrature (>= 64 records)."""
    nodes = radial_grid(1536, 80.0)
    u0 = gaussian_radial(2, 4.0 * math.pi, nodes)
    cfg = evolution.SolverConfig(
        t_init=1.0, t_end=8.0, advection_scheme="muscl", records_per_decade=80
    )
    return evolution.evolve(u0, cfg)


@pytest.fixture(scope="session")
def pure_heat_run_2d():
    nodes = radial_grid(1536, 80.0)
    u0 = gaussian_radial(2, 4.0 * math.pi, nodes)
    cfg = evolution.SolverConfig(
        t_init=1.0, t_end=8.0, nonlinearity=False, records_per_decade=80
    )
    return evolution.evolve(u0, cfg)


@pytest.fixture(scope="session")
def phi_run_2d():
    """Dense uniform record window around s1 = 2 for interpolation-free
    Phi scans."""
    nodes = radial_grid(1536, 40.0)
    u0 = gaussian_radial(2, 4.0 * math.pi, nodes, t0=0.99)
    times = tuple(np.round(np.arange(0.99, 2.0001, 0.0025), 6))
    cfg = evolution.SolverConfig(
        t_init=0.99, t_end=2.0, advection_scheme="muscl", record_times=times
    )
    return evolution.evolve(u0, cfg)


@pytest.fixture(scope="session")
def gm_4pi():
    grid = radial_grid(1536, 30.0)
    return profiles.self_similar_profile_2d(4.0 * math.pi, grid=grid)


@pytest.fixture(scope="session")
def gaussian_2d_4pi():
    return fields.gaussian_cartesian(4.0 * math.pi, extent=20.0, size=256, t0=1.0)
