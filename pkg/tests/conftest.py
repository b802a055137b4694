"""Shared fixtures: the reference parameter set and the costly grids."""

import time

import pytest

from surveillance_game import GameParams, build_partition
from surveillance_game.oracle import dp_solve

# canonical demo parameters used throughout: evader twice as fast,
# detection radius seven body radii
REF = GameParams(v_r_max=1.0, v_a_max=2.0, b=1.0, r_d=7.0)


@pytest.fixture(scope="session")
def ref_params():
    return REF


@pytest.fixture(scope="session")
def ref_partition():
    return build_partition(REF, resolution=400)


@pytest.fixture(scope="session")
def dp_small():
    # coarse, fast grid for invariant and policy checks
    return dp_solve(REF, n=101, k=32, dt=0.02)


@pytest.fixture(scope="session")
def dp_fine():
    # the resolution the accuracy gate runs at; wall time is part of the gate
    t0 = time.perf_counter()
    grid = dp_solve(REF, n=201, k=64, dt=0.01)
    return grid, time.perf_counter() - t0
