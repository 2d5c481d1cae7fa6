# Import libraries
import bisect
import logging
import math
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from common.config import get_settings
from common.types import (
    CriticalKind,
    CriticalPointSet,
    Direction,
    Kink,
    KinkType,
    PiecewiseCurve,
    Potential,
    Segment,
    SegmentKind,
)
from services.potential import evaluate

logger = logging.getLogger(__name__)

SHIFTED = SegmentKind.SHIFTED_POTENTIAL
CONSTANT = SegmentKind.CONSTANT

# Breakpoints closer than this are treated as one point.
MERGE_GAP = 1e-12


def chain_points_between(cps: CriticalPointSet, a: float, b: float, tol: float = MERGE_GAP) -> list[tuple[int, float, float]]:
    """Chain points (index, position, value) strictly inside (a, b)."""
    span = 2 * cps.k
    base = cps.maxima[0].position
    c = span * math.floor(a - base) - 1
    found = []
    while True:
        x, v = cps.chain_point(c)
        if x >= b - tol:
            break
        if x > a + tol:
            found.append((c, x, v))
        c += 1
    return found


def next_chain_point(cps: CriticalPointSet, x: float, tol: float = 1e-9) -> tuple[int, float, float]:
    """First chain point strictly to the right of x (beyond tol)."""
    span = 2 * cps.k
    c = span * math.floor(x - cps.maxima[0].position) - 1
    while True:
        pos, val = cps.chain_point(c)
        if pos > x + tol:
            return c, pos, val
        c += 1


def critical_at(cps: CriticalPointSet, x: float, tol: float = 1e-9) -> tuple[int, float, float] | None:
    """Chain point within tol of x, if any."""
    c, pos, val = next_chain_point(cps, x - 2 * tol, tol=0.0)
    if abs(pos - x) <= tol:
        return c, pos, val
    return None


def is_uphill_at(cps: CriticalPointSet, x: float) -> bool:
    """True when U increases on the monotone stretch containing x."""
    c, _, _ = next_chain_point(cps, x, tol=0.0)
    return cps.chain_kind(c) == CriticalKind.MAXIMUM


def _value(p: Potential, x: float, chain_value: float | None = None) -> float:
    return chain_value if chain_value is not None else evaluate(p, x)


def directional_curve(
    p: Potential,
    cps: CriticalPointSet,
    start: float,
    direction: Direction,
    label: str | None = None,
) -> PiecewiseCurve:
    """
    Accumulated uphill cost of travelling one period away from ``start``.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        start (float): Starting point (value 0 there).
        direction (Direction): RIGHT covers [start, start+1], LEFT covers [start-1, start].
        label (str | None): Optional curve label.

    Returns:
        PiecewiseCurve: Non-periodic curve alternating ShiftedPotential and Constant pieces.
    """
    hit = critical_at(cps, start, tol=MERGE_GAP)
    start_value = hit[2] if hit is not None else evaluate(p, start)

    if direction == Direction.RIGHT:
        inner = chain_points_between(cps, start, start + 1.0)
        end_value = start_value - cps.tilt
        stops = [(start, start_value)] + [(x, v) for _, x, v in inner] + [(start + 1.0, end_value)]
    else:
        inner = chain_points_between(cps, start - 1.0, start)
        end_value = start_value + cps.tilt
        stops = [(start, start_value)] + [(x, v) for _, x, v in reversed(inner)] + [(start - 1.0, end_value)]

    acc = 0.0
    segments = []
    for (xa, ua), (xb, ub) in zip(stops, stops[1:]):
        lo, hi = (xa, xb) if xa < xb else (xb, xa)
        if ub > ua:
            segments.append(Segment(start=lo, end=hi, kind=SHIFTED, level=acc - ua))
            acc += ub - ua
        else:
            segments.append(Segment(start=lo, end=hi, kind=CONSTANT, level=acc))
    if direction == Direction.LEFT:
        segments.reverse()
    anchor = segments[0].start
    return PiecewiseCurve(segments=merge_segments(segments), period_anchor=anchor, periodic=False, label=label)


def locate(curve: PiecewiseCurve, x: float, tilt: float) -> tuple[Segment, float]:
    """Segment containing x and its level expressed at x itself."""
    shift = 0
    r = x
    if curve.periodic:
        shift = math.floor(x - curve.period_anchor)
        r = x - shift
        if r >= curve.end:
            r -= 1.0
            shift += 1
    starts = [seg.start for seg in curve.segments]
    idx = min(max(bisect.bisect_right(starts, r) - 1, 0), len(curve.segments) - 1)
    seg = curve.segments[idx]
    level = seg.level + shift * tilt if seg.kind == SHIFTED else seg.level
    return seg, level


def evaluate_curve(curve: PiecewiseCurve, p: Potential, x: float) -> float:
    seg, level = locate(curve, x, p.tilt)
    return evaluate(p, x) + level if seg.kind == SHIFTED else level


def sample_curve(curve: PiecewiseCurve, p: Potential, xs: Sequence[float] | np.ndarray) -> np.ndarray:
    """Vectorised curve evaluation at many points."""
    xs = np.asarray(xs, dtype=float)
    shift = np.zeros_like(xs)
    r = xs.copy()
    if curve.periodic:
        shift = np.floor(xs - curve.period_anchor)
        r = xs - shift
    starts = np.array([seg.start for seg in curve.segments])
    idx = np.clip(np.searchsorted(starts, r, side="right") - 1, 0, len(curve.segments) - 1)
    kinds = np.array([seg.kind == SHIFTED for seg in curve.segments])[idx]
    levels = np.array([seg.level for seg in curve.segments])[idx]
    u = evaluate(p, xs)
    return np.where(kinds, u + levels + shift * p.tilt, levels)


def merge_segments(segments: Iterable[Segment], tol: float | None = None) -> list[Segment]:
    """Drop empty pieces and fuse neighbours of equal kind and level."""
    tol = get_settings().energy_tol if tol is None else tol
    merged: list[Segment] = []
    for seg in segments:
        if seg.end - seg.start <= MERGE_GAP and merged:
            merged[-1] = merged[-1].model_copy(update={"end": seg.end})
            continue
        if merged and merged[-1].kind == seg.kind and abs(merged[-1].level - seg.level) <= tol:
            prev = merged[-1]
            merged[-1] = prev.model_copy(update={"end": seg.end, "tie": prev.tie or seg.tie})
            continue
        merged.append(seg)
    if len(merged) > 1 and merged[0].end - merged[0].start <= MERGE_GAP:
        first = merged.pop(0)
        merged[0] = merged[0].model_copy(update={"start": first.start})
    return merged


def _breakpoints(curves: Sequence[PiecewiseCurve], cps: CriticalPointSet, start: float, end: float) -> list[float]:
    points = [start, end] + [x for _, x, _ in chain_points_between(cps, start, end)]
    for curve in curves:
        joints = curve.joints()
        if curve.periodic:
            joints = joints + [curve.period_anchor]
            for j in joints:
                n = math.ceil(start - j)
                while j + n < end:
                    if j + n > start:
                        points.append(j + n)
                    n += 1
        else:
            points.extend(j for j in joints if start < j < end)
    points.sort()
    unique = [points[0]]
    for x in points[1:]:
        if x - unique[-1] > MERGE_GAP:
            unique.append(x)
    unique[-1] = end
    return unique


def pointwise_min(
    p: Potential,
    cps: CriticalPointSet,
    curves: Sequence[PiecewiseCurve],
    start: float,
    end: float,
    sources: Sequence[int] | None = None,
    label: str | None = None,
) -> PiecewiseCurve:
    """
    Exact pointwise minimum of piecewise curves over [start, end].

    On each elementary interval U is monotone, so the minimum of
    ``U + c_min`` and ``v_min`` switches at most once.

    Args:
        p (Potential): The potential the ShiftedPotential pieces refer to.
        cps (CriticalPointSet): Its critical points.
        curves (Sequence[PiecewiseCurve]): Curves defined on [start, end].
        start (float): Left end of the output window.
        end (float): Right end of the output window.
        sources (Sequence[int] | None): Label attached to each curve (default: position in the list).
        label (str | None): Output label.

    Returns:
        PiecewiseCurve: Periodic when the window is one period long.
    """
    settings = get_settings()
    tol = settings.energy_tol
    sources = list(range(len(curves))) if sources is None else list(sources)
    points = _breakpoints(curves, cps, start, end)

    segments: list[Segment] = []
    for a, b in zip(points, points[1:]):
        mid = 0.5 * (a + b)
        best: dict[SegmentKind, tuple[float, int, bool]] = {}
        for curve, src in zip(curves, sources):
            seg, level = locate(curve, mid, p.tilt)
            current = best.get(seg.kind)
            if current is None or level < current[0] - tol:
                best[seg.kind] = (level, src, False)
            elif abs(level - current[0]) <= tol:
                best[seg.kind] = (current[0], current[1], True)

        if len(best) == 1:
            kind, (level, src, tie) = next(iter(best.items()))
            segments.append(Segment(start=a, end=b, kind=kind, level=level, source=src, tie=tie))
            continue

        c, c_src, c_tie = best[SHIFTED]
        v, v_src, v_tie = best[CONSTANT]
        fa = evaluate(p, a) + c - v
        fb = evaluate(p, b) + c - v
        shifted_seg = dict(kind=SHIFTED, level=c, source=c_src, tie=c_tie)
        constant_seg = dict(kind=CONSTANT, level=v, source=v_src, tie=v_tie)
        if fa <= tol * 1e-3 and fb <= tol * 1e-3:
            segments.append(Segment(start=a, end=b, **shifted_seg))
        elif fa >= -tol * 1e-3 and fb >= -tol * 1e-3:
            segments.append(Segment(start=a, end=b, **constant_seg))
        else:
            z = optimize.brentq(lambda y: evaluate(p, y) + c - v, a, b, xtol=settings.position_tol, maxiter=200)
            left, right = (shifted_seg, constant_seg) if fa < 0 else (constant_seg, shifted_seg)
            segments.append(Segment(start=a, end=z, **left))
            segments.append(Segment(start=z, end=b, **right))

    periodic = abs(end - start - 1.0) <= MERGE_GAP
    return PiecewiseCurve(segments=merge_segments(segments, tol), period_anchor=start, periodic=periodic, label=label)


def tie_intervals(
    p: Potential,
    cps: CriticalPointSet,
    curves: Sequence[PiecewiseCurve],
    start: float,
    end: float,
) -> list[tuple[float, float]]:
    """
    Sub-intervals of [start, end] on which two or more curves attain the minimum.

    Curves coincide on an elementary interval exactly when their pieces there
    share kind and level; the cheapest ShiftedPotential and Constant pieces
    then split the interval at their crossing, as in pointwise_min.
    """
    settings = get_settings()
    tol = settings.energy_tol
    ties: list[tuple[float, float]] = []

    def add(a: float, b: float) -> None:
        if b - a <= MERGE_GAP:
            return
        if ties and abs(ties[-1][1] - a) <= MERGE_GAP:
            ties[-1] = (ties[-1][0], b)
        else:
            ties.append((a, b))

    points = _breakpoints(curves, cps, start, end)
    for a, b in zip(points, points[1:]):
        mid = 0.5 * (a + b)
        best: dict[SegmentKind, tuple[float, int]] = {}
        for curve in curves:
            seg, level = locate(curve, mid, p.tilt)
            current = best.get(seg.kind)
            if current is None or level < current[0] - tol:
                best[seg.kind] = (level, 1)
            elif abs(level - current[0]) <= tol:
                best[seg.kind] = (current[0], current[1] + 1)

        if len(best) == 1:
            if next(iter(best.values()))[1] > 1:
                add(a, b)
            continue

        (c, c_count), (v, v_count) = best[SHIFTED], best[CONSTANT]
        fa = evaluate(p, a) + c - v
        fb = evaluate(p, b) + c - v
        if fa <= tol * 1e-3 and fb <= tol * 1e-3:
            regions = {SHIFTED: (a, b), CONSTANT: None}
        elif fa >= -tol * 1e-3 and fb >= -tol * 1e-3:
            regions = {SHIFTED: None, CONSTANT: (a, b)}
        else:
            z = optimize.brentq(lambda y: evaluate(p, y) + c - v, a, b, xtol=settings.position_tol, maxiter=200)
            regions = {SHIFTED: (a, z), CONSTANT: (z, b)} if fa < 0 else {SHIFTED: (z, b), CONSTANT: (a, z)}
        for kind, count in ((SHIFTED, c_count), (CONSTANT, v_count)):
            if count > 1 and regions[kind] is not None:
                add(*regions[kind])
    return ties


def rebase(p: Potential, cps: CriticalPointSet, curve: PiecewiseCurve, anchor: float) -> PiecewiseCurve:
    """Same periodic curve laid out on [anchor, anchor + 1]."""
    return pointwise_min(p, cps, [curve], anchor, anchor + 1.0, sources=[curve.segments[0].source or 0], label=curve.label)


def translate(curve: PiecewiseCurve, periods: int, tilt: float) -> PiecewiseCurve:
    """Move a curve by whole periods; ShiftedPotential levels absorb the skew."""
    segments = [
        seg.model_copy(
            update={
                "start": seg.start + periods,
                "end": seg.end + periods,
                "level": seg.level + periods * tilt if seg.kind == SHIFTED else seg.level,
            }
        )
        for seg in curve.segments
    ]
    return curve.model_copy(update={"segments": segments, "period_anchor": curve.period_anchor + periods})


def negate(curve: PiecewiseCurve, label: str | None = None) -> PiecewiseCurve:
    """-(−U + c) = U − c: turns a curve over the reversed potential into one over U."""
    segments = [seg.model_copy(update={"level": -seg.level}) for seg in curve.segments]
    return curve.model_copy(update={"segments": segments, "label": label or curve.label})


def curve_minimum(curve: PiecewiseCurve, p: Potential, cps: CriticalPointSet) -> float:
    """Exact minimum: pieces are monotone between critical points."""
    xs = [seg.start for seg in curve.segments] + [curve.end]
    xs += [x for _, x, _ in chain_points_between(cps, curve.period_anchor, curve.end)]
    return float(np.min(sample_curve(curve, p, np.array(xs))))


def continuity_defect(curve: PiecewiseCurve, p: Potential) -> float:
    """Largest value jump at a joint (and at the wrap for periodic curves)."""
    worst = 0.0
    for left, right in zip(curve.segments, curve.segments[1:]):
        u = evaluate(p, left.end)
        worst = max(worst, abs(left.value_at(u) - right.value_at(u)))
    if curve.periodic:
        first, last = curve.segments[0], curve.segments[-1]
        u0 = evaluate(p, first.start)
        u1 = evaluate(p, last.end)
        worst = max(worst, abs(last.value_at(u1) - first.value_at(u0)))
    return worst


def _joint_pairs(curve: PiecewiseCurve) -> list[tuple[float, Segment, Segment]]:
    pairs = [(left.end, left, right) for left, right in zip(curve.segments, curve.segments[1:])]
    if curve.periodic:
        pairs.append((curve.period_anchor, curve.segments[-1], curve.segments[0]))
    return pairs


def one_sided_slopes(p: Potential, z: float, left: Segment, right: Segment) -> tuple[float, float]:
    slope = evaluate(p, z, 1)
    return (slope if left.kind == SHIFTED else 0.0, slope if right.kind == SHIFTED else 0.0)


def find_kinks(curve: PiecewiseCurve, p: Potential, cps: CriticalPointSet) -> list[Kink]:
    """
    Corners of a curve: joints where a ShiftedPotential piece meets a Constant.

    Joints at critical points of U are not corners (both slopes vanish).

    Returns:
        list[Kink]: One record per corner, with slopes when U' is available.
    """
    kinks = []
    for z, left, right in _joint_pairs(curve):
        if left.kind == right.kind or critical_at(cps, z) is not None:
            continue
        uphill = is_uphill_at(cps, z)
        if left.kind == SHIFTED:
            kind = KinkType.INCREASING_TO_CONSTANT if uphill else KinkType.DECREASING_TO_CONSTANT
        else:
            kind = KinkType.CONSTANT_TO_INCREASING if uphill else KinkType.CONSTANT_TO_DECREASING
        s_left = s_right = None
        if p.has_derivatives:
            s_left, s_right = one_sided_slopes(p, z, left, right)
        kinks.append(Kink(position=z, left_slope=s_left, right_slope=s_right, type=kind))
    return kinks


def joints_with_slopes(curve: PiecewiseCurve, p: Potential) -> list[tuple[float, float, float]]:
    """Every joint with its one-sided slopes (position, s_minus, s_plus)."""
    return [(z, *one_sided_slopes(p, z, left, right)) for z, left, right in _joint_pairs(curve)]


def structure(curve: PiecewiseCurve) -> list[tuple[str, float]]:
    """(kind, level) sequence used to compare curves structurally."""
    return [(seg.kind.value, seg.level) for seg in curve.segments]
