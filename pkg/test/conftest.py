# Import libraries
import numpy as np
import pytest

from common.config import override_settings
from common.utils.in_memory_cache import StageCache
from services.barriers import barrier_table
from services.potential import build_potential, find_critical_points

THREE_WELL = {"mode": "abstract-extrema", "name": "three-well", "extrema": [7, 1, 5, 0, 10, 2, 11]}
# Widths scale with the square root of the drop across them (near-equal |U''| at every extremum);
# all positions sit on grids of 500, 1000 and 2000 nodes.
THREE_WELL_INTERPOLATED = dict(
    THREE_WELL,
    name="three-well-interpolated",
    interpolate=True,
    positions=[0.0, 0.156, 0.284, 0.428, 0.63, 0.81, 1.0],
)
SINGLE_WELL = {
    "mode": "smooth",
    "name": "single-well",
    "cos": [[1, 1.0], [0.5, -1.0]],
    "offset": 1.125,
    "tilt": -2.0,
}
DOUBLE_WELL = {
    "mode": "smooth",
    "name": "double-well",
    "cos": [[2, 1.0], [1, 0.3]],
    "sin": [[1, 0.2]],
    "tilt": 0.0,
}


@pytest.fixture(autouse=True)
def fresh_state():
    StageCache().clear()
    override_settings(None)
    yield
    StageCache().clear()
    override_settings(None)


@pytest.fixture
def three_well_spec():
    return dict(THREE_WELL)


@pytest.fixture
def three_well_interpolated_spec():
    return dict(THREE_WELL_INTERPOLATED)


@pytest.fixture
def single_well_spec():
    return dict(SINGLE_WELL)


@pytest.fixture
def double_well_spec():
    return dict(DOUBLE_WELL)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def three_well():
    return build_potential(THREE_WELL)


@pytest.fixture
def three_well_interpolated():
    return build_potential(THREE_WELL_INTERPOLATED)


@pytest.fixture
def single_well():
    return build_potential(SINGLE_WELL)


@pytest.fixture
def double_well():
    return build_potential(DOUBLE_WELL)


@pytest.fixture
def three_well_setup(three_well):
    cps = find_critical_points(three_well)
    return three_well, cps, barrier_table(cps)


@pytest.fixture
def single_well_setup(single_well):
    cps = find_critical_points(single_well)
    return single_well, cps, barrier_table(cps)
