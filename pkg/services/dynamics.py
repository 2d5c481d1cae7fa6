# Import libraries
import logging

import numpy as np
from scipy import integrate

from common.errors import AbstractModeError
from common.types import (
    AubrySet,
    CalibrationReport,
    CriticalKind,
    CriticalPointSet,
    Direction,
    DominationReport,
    Landscape,
    Potential,
    SegmentKind,
    Trajectory,
    TrajectoryType,
)
from services.barriers import positive_variation
from services.curves import critical_at, locate, next_chain_point, sample_curve
from services.potential import evaluate, lagrangian

logger = logging.getLogger(__name__)

RTOL = 1e-12
ATOL = 1e-14
ARRIVAL_TOL = 1e-6
TAU_MAX = 1e3
KINK_TOL = 1e-9


def aubry_set(cps: CriticalPointSet) -> AubrySet:
    """Projected Aubry set: every minimum and maximum; Mather set with zero velocity."""
    points = cps.points()
    return AubrySet(points=points, mather=[(pt.position, 0.0) for pt in points])


def self_barrier(p: Potential, cps: CriticalPointSet, x: float) -> float:
    """
    h(x; x): cheapest loop from x back to x.

    Zero on critical points. Elsewhere it is the cheaper of a round trip to
    either neighbouring critical point and a full turn in either direction.
    """
    if critical_at(cps, x) is not None:
        return 0.0
    u = float(evaluate(p, x))
    c_right, _, u_right = next_chain_point(cps, x, tol=0.0)
    u_left = cps.chain_point(c_right - 1)[1]
    loops = [
        abs(u_right - u),
        abs(u_left - u),
        positive_variation(p, cps, x, x + 1.0, Direction.RIGHT),
        positive_variation(p, cps, x, x - 1.0, Direction.LEFT),
    ]
    return float(min(loops))


def _backward_target(cps: CriticalPointSet, x: float, kind: TrajectoryType) -> tuple[int, float]:
    """End of the monotone stretch through x that the backward flow runs into."""
    c_right, right, _ = next_chain_point(cps, x, tol=0.0)
    wanted = CriticalKind.MINIMUM if kind == TrajectoryType.UPHILL else CriticalKind.MAXIMUM
    if cps.chain_kind(c_right) == wanted:
        return c_right, right
    return c_right - 1, cps.chain_point(c_right - 1)[0]


def _integrate_backward(
    p: Potential,
    cps: CriticalPointSet,
    x: float,
    kind: TrajectoryType,
    anchor_kink: float | None,
) -> Trajectory:
    """
    Backward characteristic dγ/dτ = -U' (uphill type) or +U' (downhill type), τ = -t.

    The action of the forward curve on [-τ, 0] is integrated alongside γ, so
    actions[i] is the cost of the tail that starts at positions[i].
    """
    sign = -1.0 if kind == TrajectoryType.UPHILL else 1.0
    c, target = _backward_target(cps, x, kind)

    def rhs(_: float, y: np.ndarray) -> list[float]:
        du = float(evaluate(p, y[0], 1))
        return [sign * du, float(lagrangian(p, y[0], -sign * du))]

    def arrival(_: float, y: np.ndarray) -> float:
        return abs(y[0] - target) - ARRIVAL_TOL

    arrival.terminal = True
    arrival.direction = -1

    if abs(x - target) <= ARRIVAL_TOL:
        times, positions, actions = [0.0], [x], [0.0]
    else:
        sol = integrate.solve_ivp(
            rhs, (0.0, TAU_MAX), [x, 0.0], method="DOP853", rtol=RTOL, atol=ATOL, events=arrival
        )
        if sol.status != 1:
            logger.warning(f"Backward integration from x={x:.6f} stopped before reaching {target:.6f}: {sol.message}")
        times = [-float(t) for t in sol.t]
        positions = [float(g) for g in sol.y[0]]
        actions = [float(a) for a in sol.y[1]]

    return Trajectory(
        type=kind,
        start=x,
        times=times,
        positions=positions,
        actions=actions,
        terminal=target,
        terminal_kind=cps.chain_kind(c),
        anchor_kink=anchor_kink,
    )


def calibrated_curve(
    p: Potential,
    cps: CriticalPointSet,
    landscape: Landscape,
    x: float,
) -> list[Trajectory]:
    """
    Backward characteristics of the landscape through x.

    A point on a ShiftedPotential piece of W gives an uphill-type curve that
    came up from a minimum; a point on a Constant piece gives a downhill-type
    curve that came down from a maximum. A corner of W gives both.

    Args:
        p (Potential): Potential with derivatives.
        cps (CriticalPointSet): Its critical points.
        landscape (Landscape): Glued landscape.
        x (float): Starting point.

    Returns:
        list[Trajectory]: One trajectory, or two at a corner of W.
    """
    if not p.has_derivatives:
        raise AbstractModeError("calibrated_curve")
    hit = critical_at(cps, x)
    if hit is not None:
        return [
            Trajectory(
                type=TrajectoryType.UPHILL if cps.chain_kind(hit[0]) == CriticalKind.MINIMUM else TrajectoryType.DOWNHILL,
                start=x,
                times=[0.0],
                actions=[0.0],
                positions=[x],
                terminal=x,
                terminal_kind=cps.chain_kind(hit[0]),
            )
        ]

    kink = next((k.position for k in landscape.kinks if abs((k.position - x + 0.5) % 1.0 - 0.5) <= KINK_TOL), None)
    if kink is not None:
        return [
            _integrate_backward(p, cps, x, TrajectoryType.UPHILL, kink),
            _integrate_backward(p, cps, x, TrajectoryType.DOWNHILL, kink),
        ]
    seg, _ = locate(landscape.W, x, p.tilt)
    kind = TrajectoryType.UPHILL if seg.kind == SegmentKind.SHIFTED_POTENTIAL else TrajectoryType.DOWNHILL
    return [_integrate_backward(p, cps, x, kind, None)]


def verify_calibration(p: Potential, t: Trajectory, landscape: Landscape) -> CalibrationReport:
    """
    Compare the action along a calibrated curve with the landscape increase.

    Every tail [t_i, 0] of the trajectory is checked against W(x) - W(γ(t_i)),
    so all sampled subintervals ending at the start point are covered.

    Returns:
        CalibrationReport: Total action, W difference and worst mismatch.
    """
    actions = np.asarray(t.actions)
    w = sample_curve(landscape.W, p, np.asarray(t.positions))
    differences = w[0] - w
    max_error = float(np.max(np.abs(actions - differences)))
    action = float(actions[-1])
    passed = max_error <= 1e-6 and (t.type == TrajectoryType.UPHILL or action <= 1e-10)
    return CalibrationReport(
        type=t.type,
        start=t.start,
        terminal=t.terminal,
        action=action,
        landscape_difference=float(differences[-1]),
        max_error=max_error,
        passed=passed,
    )


def path_action(p: Potential, times: np.ndarray, positions: np.ndarray, pieces: int = 32) -> float:
    """
    Action of the piecewise-linear path through (times, positions).

    Args:
        p (Potential): Potential with derivatives.
        times (np.ndarray): Increasing knot times.
        positions (np.ndarray): Knot positions (lifted, not reduced mod 1).
        pieces (int): Even number of Simpson subintervals per linear piece.

    Returns:
        float: Sum over pieces of the integral of L(γ', γ).
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    total = 0.0
    s = np.linspace(0.0, 1.0, pieces + 1)
    for t0, t1, y0, y1 in zip(times, times[1:], positions, positions[1:]):
        duration = t1 - t0
        velocity = (y1 - y0) / duration
        gamma = y0 + (y1 - y0) * s
        total += float(integrate.simpson(lagrangian(p, gamma, velocity), x=t0 + duration * s))
    return total


def check_domination(
    p: Potential,
    landscape: Landscape,
    rng: np.random.Generator,
    n_paths: int = 100,
) -> DominationReport:
    """
    W(η(b)) - W(η(a)) <= ∫ L along random piecewise-linear paths η.

    Returns:
        DominationReport: Largest violation over the sampled paths.
    """
    if not p.has_derivatives:
        raise AbstractModeError("check_domination")
    worst = -np.inf
    for _ in range(n_paths):
        knots = int(rng.integers(2, 8))
        times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 1.0, size=knots))])
        positions = rng.uniform(0.0, 1.0) + np.concatenate([[0.0], np.cumsum(rng.normal(0.0, 0.3, size=knots))])
        gain = float(np.diff(sample_curve(landscape.W, p, positions[[0, -1]]))[0])
        worst = max(worst, gain - path_action(p, times, positions))
    logger.info(f"Domination check over {n_paths} paths: worst violation {worst:.3e}")
    return DominationReport(paths=n_paths, max_violation=float(worst), passed=bool(worst <= 1e-6))
