# Import libraries
import numpy as np
import pytest

from common.errors import AbstractModeError
from common.types import CriticalKind, TrajectoryType
from services.dynamics import (
    aubry_set,
    calibrated_curve,
    check_domination,
    path_action,
    self_barrier,
    verify_calibration,
)
from services.landscape import boundary_values_fw, build_landscape
from services.potential import evaluate


def _near(a, b, tol):
    return abs((a - b + 0.5) % 1.0 - 0.5) <= tol


@pytest.fixture
def single_well_landscape(single_well_setup):
    p, cps, bt = single_well_setup
    return p, cps, build_landscape(p, cps, boundary_values_fw(bt), bt)


def test_aubry_set(three_well_setup, single_well_setup):
    _, cps3, _ = three_well_setup
    _, cps1, _ = single_well_setup
    assert len(aubry_set(cps3).points) == 6
    single = aubry_set(cps1)
    assert len(single.points) == 2
    assert all(v == 0.0 for _, v in single.mather)


def test_self_barrier(single_well_setup):
    p, cps, _ = single_well_setup
    assert self_barrier(p, cps, cps.minima[0].position) == 0.0
    assert self_barrier(p, cps, 0.0) == 0.0
    u = evaluate(p, 0.3)
    value = self_barrier(p, cps, 0.3)
    assert 0.0 < value <= min(u, 9 / 8 - u) + 1e-12


def test_calibration_on_random_points(single_well_landscape, rng):
    p, cps, land = single_well_landscape
    for x in rng.uniform(0.0, 1.0, size=50):
        for trajectory in calibrated_curve(p, cps, land, float(x)):
            report = verify_calibration(p, trajectory, land)
            assert report.passed, (x, report.max_error)


def test_uphill_and_downhill_types(single_well_landscape):
    p, cps, land = single_well_landscape
    (below,) = calibrated_curve(p, cps, land, 0.55)
    (above,) = calibrated_curve(p, cps, land, 0.8)
    assert below.type == TrajectoryType.UPHILL
    assert below.terminal_kind == CriticalKind.MINIMUM
    assert above.type == TrajectoryType.DOWNHILL
    assert above.terminal_kind == CriticalKind.MAXIMUM
    assert verify_calibration(p, above, land).action == pytest.approx(0.0, abs=1e-10)


def test_two_trajectories_leave_the_kink(single_well_landscape):
    p, cps, land = single_well_landscape
    kink = land.kinks[0].position
    trajectories = calibrated_curve(p, cps, land, kink)
    assert [t.type for t in trajectories] == [TrajectoryType.UPHILL, TrajectoryType.DOWNHILL]
    assert all(t.anchor_kink == pytest.approx(kink) for t in trajectories)
    uphill, downhill = trajectories
    assert _near(uphill.terminal, cps.minima[0].position, 1e-5)
    assert _near(downhill.terminal, 0.0, 1e-5)
    assert all(verify_calibration(p, t, land).passed for t in trajectories)


@pytest.mark.parametrize("x", [0.60, 0.62, 0.63, 0.64, 0.65, 0.66])
def test_steep_uphill_curves_match_the_landscape(single_well_landscape, x):
    p, cps, land = single_well_landscape
    (trajectory,) = calibrated_curve(p, cps, land, x)
    assert trajectory.type == TrajectoryType.UPHILL
    assert abs(trajectory.positions[-1] - trajectory.terminal) <= 1e-6 + 1e-12
    report = verify_calibration(p, trajectory, land)
    assert report.max_error <= 1e-8
    assert report.action == pytest.approx(report.landscape_difference, abs=1e-8)


def test_kink_action_is_the_barrier_height(single_well_landscape):
    p, cps, land = single_well_landscape
    uphill, downhill = calibrated_curve(p, cps, land, land.kinks[0].position)
    assert verify_calibration(p, uphill, land).action == pytest.approx(9 / 8, abs=1e-5)
    assert verify_calibration(p, downhill, land).action == 0.0


def test_critical_start_is_trivial(single_well_landscape):
    p, cps, land = single_well_landscape
    (t,) = calibrated_curve(p, cps, land, cps.minima[0].position)
    assert t.times == [0.0]
    assert verify_calibration(p, t, land).passed


def test_calibration_needs_derivatives(three_well_setup):
    p, cps, bt = three_well_setup
    land = build_landscape(p, cps, boundary_values_fw(bt), bt)
    with pytest.raises(AbstractModeError):
        calibrated_curve(p, cps, land, 0.3)
    with pytest.raises(AbstractModeError):
        check_domination(p, land, np.random.default_rng(0), 1)


def test_path_action(single_well_setup):
    p, cps, _ = single_well_setup
    x0 = cps.minima[0].position
    assert path_action(p, np.array([0.0, 1.0]), np.array([x0, x0])) == pytest.approx(0.0, abs=1e-20)
    du = float(evaluate(p, 0.3, 1))
    assert path_action(p, np.array([0.0, 2.0]), np.array([0.3, 0.3])) == pytest.approx(2.0 * du * du / 4)


def test_domination(single_well_landscape, rng):
    p, _, land = single_well_landscape
    report = check_domination(p, land, rng, n_paths=50)
    assert report.paths == 50
    assert report.passed
