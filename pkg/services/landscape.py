# Import libraries
import logging
from typing import Sequence

import numpy as np

from common.config import get_settings
from common.errors import InconsistentBoundaryData
from common.types import (
    BarrierTable,
    BoundaryData,
    CriticalKind,
    CriticalPointSet,
    DiscreteKamReport,
    ExtendedRepresentationReport,
    Landscape,
    LiftedCurve,
    PeierlsBarrier,
    PiecewiseCurve,
    Potential,
    Provenance,
    UniquenessReport,
)
from services.barriers import (
    barrier_table,
    left_barrier,
    peierls_barrier,
    right_barrier,
)
from services.curves import (
    curve_minimum,
    evaluate_curve,
    find_kinks,
    merge_segments,
    negate,
    pointwise_min,
    rebase,
    sample_curve,
    tie_intervals,
    translate,
)
from services.potential import find_critical_points, reversed_potential

logger = logging.getLogger(__name__)

CHECK_SAMPLES = 2048


def minimum_chain(i: int) -> int:
    return 2 * i + 1


def maximum_chain(i: int) -> int:
    return 2 * i


def anchor_values(bd: BoundaryData) -> dict[int, float]:
    """Boundary values keyed by critical-chain index (minima first)."""
    values = {minimum_chain(i): w for i, w in enumerate(bd.minima_values)}
    values.update({maximum_chain(i): w for i, w in sorted(bd.maxima_values.items())})
    return values


def boundary_values_fw(bt: BarrierTable) -> BoundaryData:
    """
    Freidlin-Wentzell boundary values W_i = min_j (h̃_R(x_i; x_{j+1}) + h̃_L(x_i; x_j)).

    Args:
        bt (BarrierTable): Barrier tables on the minima.

    Returns:
        BoundaryData: Values at the minima plus the argmin set of each row.
    """
    # with k = 1 the chains to the wrapped copy of x_1 are empty, so W_1 = 0
    tol = get_settings().energy_tol
    values, argmins = [], []
    for i in range(bt.k):
        candidates = [bt.hR_tilde[i][j] + bt.hL_tilde[i][j] for j in range(bt.k)]
        best = min(candidates)
        values.append(best)
        argmins.append([j for j, c in enumerate(candidates) if c - best <= tol])
    logger.info(f"Freidlin-Wentzell boundary values: {values}")
    return BoundaryData(minima_values=values, provenance=Provenance.FREIDLIN_WENTZELL, argmins=argmins)


def boundary_values_zero(k: int) -> BoundaryData:
    return BoundaryData(minima_values=[0.0] * k, provenance=Provenance.USER_SUPPLIED)


def check_discrete_weak_kam(bd: BoundaryData, bt: BarrierTable) -> DiscreteKamReport:
    """
    Check W_a = min_b (W_b + h(x_a; x_b)) over every anchor carrying a value.

    Residuals are W_a minus that minimum, so they are never negative and
    vanish exactly on consistent data.

    Args:
        bd (BoundaryData): Values at the minima and any forced maxima.
        bt (BarrierTable): Barrier tables, including the critical matrix.

    Returns:
        DiscreteKamReport: Verdict and residuals per minimum and per maximum.
    """
    if bd.k != bt.k:
        raise ValueError(f"boundary data has {bd.k} values but the potential has {bt.k} wells")
    tol = get_settings().energy_tol
    values = anchor_values(bd)

    def residual(a: int) -> float:
        return values[a] - min(w + bt.critical[a][b] for b, w in values.items())

    residuals = [residual(minimum_chain(i)) for i in range(bd.k)]
    maxima_residuals = {i: residual(maximum_chain(i)) for i in bd.maxima_values}
    consistent = all(r <= tol for r in residuals) and all(r <= tol for r in maxima_residuals.values())
    return DiscreteKamReport(consistent=consistent, residuals=residuals, maxima_residuals=maxima_residuals)


def make_consistent(
    raw_minima: dict[int, float],
    bt: BarrierTable,
    raw_maxima: dict[int, float] | None = None,
) -> BoundaryData:
    """
    Turn values on a subset of critical points into consistent boundary data.

    Every minimum (and every supplied maximum) receives
    min over supplied anchors l of (W_l + h(x; x_l)).

    Args:
        raw_minima (dict[int, float]): Values at some minima (0-based index).
        bt (BarrierTable): Barrier tables.
        raw_maxima (dict[int, float] | None): Values at some maxima.

    Returns:
        BoundaryData: Induced data; never above the input where it was given.
    """
    raw_maxima = raw_maxima or {}
    supplied = {minimum_chain(i): w for i, w in raw_minima.items()}
    supplied.update({maximum_chain(i): w for i, w in raw_maxima.items()})
    if not supplied:
        raise ValueError("at least one boundary value is required")

    def induced(a: int) -> float:
        return min(w + bt.critical[a][b] for b, w in supplied.items())

    minima = [induced(minimum_chain(i)) for i in range(bt.k)]
    maxima = {i: induced(maximum_chain(i)) for i in raw_maxima}
    return BoundaryData(minima_values=minima, maxima_values=maxima, provenance=Provenance.INDUCED)


def force_maxima(bd: BoundaryData, forced: dict[int, float]) -> BoundaryData:
    """Boundary data with values imposed at some maxima (0-based maximum index)."""
    maxima = dict(bd.maxima_values)
    maxima.update(forced)
    return bd.model_copy(update={"maxima_values": maxima, "provenance": Provenance.USER_SUPPLIED})


def anchored_curves(
    p: Potential,
    cps: CriticalPointSet,
    chain_indices: Sequence[int],
    curves: Sequence[PeierlsBarrier] | None = None,
) -> dict[int, PeierlsBarrier]:
    """Peierls barriers for the requested anchors, reusing any supplied ones."""
    known = {}
    for barrier in curves or []:
        if barrier.anchor_index is None:
            continue
        c = minimum_chain(barrier.anchor_index) if barrier.anchor_kind == CriticalKind.MINIMUM else maximum_chain(barrier.anchor_index)
        known[c] = barrier
    for c in chain_indices:
        if c not in known:
            kind = CriticalKind.MINIMUM if c % 2 else CriticalKind.MAXIMUM
            known[c] = peierls_barrier(p, cps, c // 2, kind)
    return known


def _assemble(
    p: Potential, cps: CriticalPointSet, bd: BoundaryData, W: PiecewiseCurve, ties: list[tuple[float, float]]
) -> Landscape:
    lowest = min(bd.minima_values)
    if ties:
        logger.warning(f"Equal glued values from different anchors on {len(ties)} interval(s)")
    return Landscape(
        W=W,
        Wstar=W.shifted(-lowest).model_copy(update={"label": "Wstar"}),
        boundary=bd,
        kinks=find_kinks(W, p, cps),
        minimum=lowest,
        ties=ties,
    )


def _require_consistent(bd: BoundaryData, bt: BarrierTable) -> None:
    report = check_discrete_weak_kam(bd, bt)
    if not report.consistent:
        raise InconsistentBoundaryData(report.residuals + list(report.maxima_residuals.values()))


def _lifted(values: dict[int, float], curves: dict[int, PeierlsBarrier]) -> tuple[list[int], list[PiecewiseCurve]]:
    order = sorted(values, key=lambda c: (c % 2 == 0, c))
    return order, [curves[c].curve.shifted(values[c]) for c in order]


def glue(
    p: Potential,
    cps: CriticalPointSet,
    values: dict[int, float],
    curves: dict[int, PeierlsBarrier],
    label: str = "W",
) -> PiecewiseCurve:
    """min over anchors c of (values[c] + h(x; x_c)) on [x_1/2, x_1/2 + 1]."""
    order, lifted = _lifted(values, curves)
    start = cps.maxima[0].position
    return pointwise_min(p, cps, lifted, start, start + 1.0, sources=order, label=label)


def build_landscape(
    p: Potential,
    cps: CriticalPointSet,
    bd: BoundaryData,
    bt: BarrierTable,
    curves: Sequence[PeierlsBarrier] | None = None,
) -> Landscape:
    """
    Glue lifted Peierls barriers into the global landscape.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        bd (BoundaryData): Consistent boundary data (maxima values become extra anchors).
        bt (BarrierTable): Barrier tables.
        curves (Sequence[PeierlsBarrier] | None): Precomputed barriers to reuse.

    Returns:
        Landscape: W, the normalized W* and the kinks of W.
    """
    _require_consistent(bd, bt)
    values = anchor_values(bd)
    known = anchored_curves(p, cps, list(values), curves)
    W = glue(p, cps, values, known)
    logger.info(f"Landscape glued from {len(values)} anchors into {len(W.segments)} segments")
    start = cps.maxima[0].position
    return _assemble(p, cps, bd, W, tie_intervals(p, cps, _lifted(values, known)[1], start, start + 1.0))


def build_landscape_local(p: Potential, cps: CriticalPointSet, bd: BoundaryData, bt: BarrierTable) -> Landscape:
    """
    Landscape from adjacent wells only.

    On [x_i, x_{i+1}], W = min(W_i + h_R(x; x_i), W_{i+1} + h_L(x; x_{i+1})).

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        bd (BoundaryData): Consistent boundary data on the minima.
        bt (BarrierTable): Barrier tables, used for the consistency gate.

    Returns:
        Landscape: Same curve as build_landscape, laid out on [x_1/2, x_1/2 + 1].
    """
    _require_consistent(bd, bt)
    k = cps.k
    segments = []
    ties = []
    for i in range(k):
        a = cps.minima[i].position
        nxt = (i + 1) % k
        wraps = i + 1 == k
        b = cps.minima[nxt].position + (1.0 if wraps else 0.0)
        right = right_barrier(p, cps, i).shifted(bd.minima_values[i])
        left = left_barrier(p, cps, nxt).shifted(bd.minima_values[nxt])
        if wraps:
            left = translate(left, 1, cps.tilt)
        piece = pointwise_min(p, cps, [right, left], a, b, sources=[minimum_chain(i), minimum_chain(nxt)])
        segments.extend(piece.segments)
        ties.extend(tie_intervals(p, cps, [right, left], a, b))
    joined = PiecewiseCurve(segments=merge_segments(segments), period_anchor=cps.minima[0].position, label="W")
    W = rebase(p, cps, joined, cps.maxima[0].position)
    return _assemble(p, cps, bd, W, ties)


def _sample_grid(curve: PiecewiseCurve, n: int = CHECK_SAMPLES) -> np.ndarray:
    return curve.period_anchor + (np.arange(n) + 0.5) / n


def sup_difference(p: Potential, first: PiecewiseCurve, second: PiecewiseCurve, n: int = CHECK_SAMPLES) -> float:
    xs = _sample_grid(first, n)
    return float(np.max(np.abs(sample_curve(first, p, xs) - sample_curve(second, p, xs))))


def extended_representation(
    p: Potential,
    cps: CriticalPointSet,
    landscape: Landscape,
    curves: Sequence[PeierlsBarrier] | None = None,
) -> ExtendedRepresentationReport:
    """
    Re-glue W with the maxima added as anchors at their induced values.

    Returns:
        ExtendedRepresentationReport: Sup error against W and whether any
            maximum term ever dips below W.
    """
    tol = get_settings().energy_tol
    W = landscape.W
    maxima_values = [evaluate_curve(W, p, cps.maxima[i].position) for i in range(cps.k)]
    values = anchor_values(landscape.boundary)
    values.update({maximum_chain(i): w for i, w in enumerate(maxima_values)})
    known = anchored_curves(p, cps, list(values), curves)
    extended = glue(p, cps, values, known, label="W-extended")

    xs = _sample_grid(W)
    w_samples = sample_curve(W, p, xs)
    never_lowered = all(
        float(np.min(sample_curve(known[maximum_chain(i)].curve.shifted(w), p, xs) - w_samples)) >= -tol
        for i, w in enumerate(maxima_values)
    )
    error = sup_difference(p, W, extended)
    return ExtendedRepresentationReport(
        passed=error <= tol, sup_error=error, maxima_values=maxima_values, never_lowered=never_lowered
    )


def check_maximality(p: Potential, landscape: Landscape, candidate: PiecewiseCurve) -> bool:
    """True when the candidate subsolution stays below W (2048 samples)."""
    tol = get_settings().energy_tol
    xs = _sample_grid(landscape.W)
    return bool(np.all(sample_curve(candidate, p, xs) <= sample_curve(landscape.W, p, xs) + tol))


def lifted_peierls_curves(
    p: Potential,
    cps: CriticalPointSet,
    landscape: Landscape,
    curves: Sequence[PeierlsBarrier] | None = None,
) -> list[LiftedCurve]:
    """
    Each anchor's W_j + h(x; x_j) with the intervals where it realizes W.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        landscape (Landscape): Glued landscape.
        curves (Sequence[PeierlsBarrier] | None): Precomputed barriers.

    Returns:
        list[LiftedCurve]: One entry per anchor of the boundary data.
    """
    values = anchor_values(landscape.boundary)
    known = anchored_curves(p, cps, list(values), curves)
    lifted = []
    for c in sorted(values):
        barrier = known[c]
        active = [(seg.start, seg.end) for seg in landscape.W.segments if seg.source == c]
        lifted.append(
            LiftedCurve(
                anchor=barrier.anchor,
                anchor_kind=barrier.anchor_kind,
                anchor_index=barrier.anchor_index,
                value=values[c],
                curve=barrier.curve.shifted(values[c]),
                active=active,
            )
        )
    return lifted


def uniqueness_check(p: Potential, cps: CriticalPointSet, bd: BoundaryData, bt: BarrierTable) -> UniquenessReport:
    """
    Compare landscapes built from minima data with and without maxima values.

    Induced maxima values (read off W) leave W unchanged. Forcing every
    maximum down to the lower of its two neighbouring minima values, then
    restoring consistency, generally gives a different solution.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        bd (BoundaryData): Consistent data on the minima.
        bt (BarrierTable): Barrier tables.

    Returns:
        UniquenessReport: Sup differences of both variants against W.
    """
    base = build_landscape(p, cps, bd, bt)
    k = cps.k
    induced = {i: evaluate_curve(base.W, p, cps.maxima[i].position) for i in range(k)}
    with_induced = build_landscape(p, cps, force_maxima(bd, induced), bt)
    induced_difference = sup_difference(p, base.W, with_induced.W)

    lower = {i: min(bd.minima_values[i - 1], bd.minima_values[i]) for i in range(k)}
    forced_bd = make_consistent(dict(enumerate(bd.minima_values)), bt, lower)
    forced = build_landscape(p, cps, forced_bd, bt)
    forced_difference = sup_difference(p, base.W, forced.W)
    logger.info(f"Uniqueness check: induced={induced_difference:.3e}, forced={forced_difference:.3e}")
    return UniquenessReport(
        induced_equal=induced_difference <= get_settings().energy_tol,
        induced_sup_difference=induced_difference,
        forced_sup_difference=forced_difference,
        forced_values=forced_bd.maxima_values,
    )


def positive_type_landscape(p: Potential, boundary: str = "fw") -> Landscape:
    """
    Positive-type landscape u_+ = -(negative-type landscape of -U).

    Args:
        p (Potential): The potential.
        boundary (str): "fw" or "zero" boundary data for the reversed problem.

    Returns:
        Landscape: Curves over U on [x_1/2, x_1/2 + 1]; Wstar has minimum 0.
    """
    q = reversed_potential(p)
    cps_q = find_critical_points(q)
    bt_q = barrier_table(cps_q)
    bd_q = boundary_values_fw(bt_q) if boundary == "fw" else boundary_values_zero(cps_q.k)
    reversed_landscape = build_landscape(q, cps_q, bd_q, bt_q)

    cps = find_critical_points(p)
    u_plus = rebase(p, cps, negate(reversed_landscape.W, label="u_plus"), cps.maxima[0].position)
    lowest = curve_minimum(u_plus, p, cps)
    # Minima of -U are the maxima of U.
    maxima = {}
    for i in range(cps.k):
        x = cps.maxima[i].position
        j = min(range(cps_q.k), key=lambda m: abs((cps_q.minima[m].position - x + 0.5) % 1.0 - 0.5))
        maxima[i] = -bd_q.minima_values[j]
    bd = BoundaryData(
        minima_values=[evaluate_curve(u_plus, p, m.position) for m in cps.minima[: cps.k]],
        maxima_values=maxima,
        provenance=bd_q.provenance,
    )
    return Landscape(
        W=u_plus,
        Wstar=u_plus.shifted(-lowest).model_copy(update={"label": "u_plus_star"}),
        boundary=bd,
        kinks=find_kinks(u_plus, p, cps),
        minimum=lowest,
        ties=reversed_landscape.ties,
    )
