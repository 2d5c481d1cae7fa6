# Import libraries
import logging

import numpy as np

from common.config import get_settings
from common.errors import AbstractModeError
from common.types import (
    EntropyReport,
    GridFunction,
    KinkRecord,
    PiecewiseCurve,
    Potential,
    SegmentKind,
    ShockRecord,
    ViscosityReport,
)
from services.curves import continuity_defect, joints_with_slopes, locate
from services.potential import evaluate, hamiltonian

logger = logging.getLogger(__name__)

CHECK_SAMPLES = 2048


def _require_derivatives(p: Potential, operation: str) -> None:
    if not p.has_derivatives:
        raise AbstractModeError(operation)


def _segment_slopes(curve: PiecewiseCurve, p: Potential, xs: np.ndarray) -> np.ndarray:
    """Slope of the curve read from the segment kind (U' or 0)."""
    du = evaluate(p, xs, 1)
    shifted = np.array([locate(curve, float(x), p.tilt)[0].kind == SegmentKind.SHIFTED_POTENTIAL for x in xs])
    return np.where(shifted, du, 0.0)


def _away_from_joints(curve: PiecewiseCurve, n: int, gap: float = 1e-6) -> np.ndarray:
    xs = curve.period_anchor + (np.arange(n) + 0.5) / n
    joints = np.array(curve.joints() + [curve.period_anchor, curve.end])
    distance = np.min(np.abs(xs[:, None] - joints[None, :]), axis=1)
    return xs[distance > gap]


def classify_kink(p: Potential, position: float, s_minus: float, s_plus: float, tol: float) -> KinkRecord:
    """
    Viscosity test at one corner with one-sided slopes s_minus, s_plus.

    H(q, x) = q (q - U'(x)) is convex in q: its maximum over an interval sits
    at an endpoint and its minimum at q = U'(x)/2 when that is inside.
    """
    du = float(evaluate(p, position, 1))
    if s_minus > s_plus:
        sub = max(hamiltonian(p, position, s_plus), hamiltonian(p, position, s_minus)) <= tol
        return KinkRecord(
            position=position,
            left_slope=s_minus,
            right_slope=s_plus,
            superdifferential=(s_plus, s_minus),
            subsolution_pass=bool(sub),
            supersolution_pass=True,
        )
    candidates = [s_minus, s_plus]
    if s_minus < du / 2 < s_plus:
        candidates.append(du / 2)
    sup = min(float(hamiltonian(p, position, q)) for q in candidates) >= -tol
    return KinkRecord(
        position=position,
        left_slope=s_minus,
        right_slope=s_plus,
        subdifferential=(s_minus, s_plus),
        subsolution_pass=True,
        supersolution_pass=bool(sup),
    )


def _corners(curve: PiecewiseCurve, p: Potential, tol: float) -> list[tuple[float, float, float]]:
    """Joints whose one-sided slopes differ by more than tol."""
    return [(z, sm, sp) for z, sm, sp in joints_with_slopes(curve, p) if abs(sm - sp) > tol]


def check_viscosity(curve: PiecewiseCurve, p: Potential) -> ViscosityReport:
    """
    Viscosity solution test for W'(W' - U') = 0.

    Args:
        curve (PiecewiseCurve): Periodic candidate.
        p (Potential): Smooth potential (or one with an interpolant).

    Returns:
        ViscosityReport: Sample residual, per-corner records and verdicts.
    """
    _require_derivatives(p, "check_viscosity")
    tol = get_settings().hj_tol
    continuous = continuity_defect(curve, p) <= get_settings().energy_tol

    xs = _away_from_joints(curve, CHECK_SAMPLES)
    residual = float(np.max(np.abs(hamiltonian(p, xs, _segment_slopes(curve, p, xs))), initial=0.0))
    kinks = [classify_kink(p, z, sm, sp, tol) for z, sm, sp in _corners(curve, p, tol)]

    subsolution = continuous and residual <= tol and all(k.subsolution_pass for k in kinks)
    supersolution = continuous and residual <= tol and all(k.supersolution_pass for k in kinks)
    failures = [k.position for k in kinks if not (k.subsolution_pass and k.supersolution_pass)]
    if failures:
        logger.info(f"Viscosity test fails at {len(failures)} corner(s): {failures}")
    return ViscosityReport(
        continuous=continuous,
        max_sample_residual=residual,
        kinks=kinks,
        subsolution=subsolution,
        supersolution=supersolution,
        passed=subsolution and supersolution,
        failures=failures,
    )


def check_entropy_shock(curve: PiecewiseCurve, p: Potential) -> EntropyReport:
    """
    Read slope jumps of the curve as stationary shocks of
    rho_t + (rho^2)_x - (U' rho)_x = 0 and test them.

    Returns:
        EntropyReport: Rankine-Hugoniot residual and admissibility (rho_- >= rho_+) per jump.
    """
    _require_derivatives(p, "check_entropy_shock")
    tol = get_settings().hj_tol
    shocks = []
    for z, rho_left, rho_right in _corners(curve, p, tol):
        du = float(evaluate(p, z, 1))
        rh = abs((rho_right**2 - du * rho_right) - (rho_left**2 - du * rho_left))
        shocks.append(
            ShockRecord(
                position=z,
                rho_left=rho_left,
                rho_right=rho_right,
                rankine_hugoniot_residual=rh,
                rankine_hugoniot=rh <= tol,
                admissible=rho_left >= rho_right - tol,
            )
        )
    return EntropyReport(shocks=shocks, admissible=all(s.rankine_hugoniot and s.admissible for s in shocks))


def subsolution_everywhere(curve: PiecewiseCurve | GridFunction, p: Potential, tol: float | None = None) -> bool:
    """
    Check H(W', x) <= tol along a curve and on every superdifferential.

    A GridFunction is read as the periodic piecewise-linear interpolant of
    its values; each cell is checked at both ends and its midpoint.

    Args:
        curve (PiecewiseCurve | GridFunction): The candidate.
        p (Potential): Smooth potential.
        tol (float | None): Tolerance, defaults to the HJ tolerance.

    Returns:
        bool: True for a subsolution.
    """
    _require_derivatives(p, "subsolution_everywhere")
    tol = get_settings().hj_tol if tol is None else tol
    if isinstance(curve, GridFunction):
        n = curve.n
        slopes = (np.roll(curve.values, -1) - curve.values) * n
        left = curve.grid
        worst = max(
            float(np.max(hamiltonian(p, left + offset / n, slopes))) for offset in (0.0, 0.5, 1.0)
        )
        return worst <= tol

    if continuity_defect(curve, p) > get_settings().energy_tol:
        logger.warning("Curve is not continuous; subsolution test rejected")
        return False
    xs = _away_from_joints(curve, CHECK_SAMPLES)
    if float(np.max(hamiltonian(p, xs, _segment_slopes(curve, p, xs)), initial=0.0)) > tol:
        return False
    return all(classify_kink(p, z, sm, sp, tol).subsolution_pass for z, sm, sp in _corners(curve, p, tol))
