import math

import numpy as np
import pytest

from rles.grid import GridConfig, PeriodicBox, build_grid


@pytest.fixture(scope="session")
def small_config():
    return GridConfig(Lx=2 * math.pi, Lz=math.pi, Nx=16, Ny=17, Nz=16)


@pytest.fixture(scope="session")
def small_grid(small_config):
    return build_grid(small_config)


@pytest.fixture(scope="session")
def box():
    return PeriodicBox(16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def wall_zero_field(grid, rng):
    """Random physical array that vanishes at both walls."""
    a = rng.standard_normal(grid.shape)
    a[..., 0] = 0.0
    a[..., -1] = 0.0
    return a
