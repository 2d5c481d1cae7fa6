# Import libraries
import heapq
import logging
import math

import numpy as np

from common.errors import AbstractModeError, NotCriticalAnchor
from common.types import (
    BarrierTable,
    CriticalKind,
    CriticalPointSet,
    Direction,
    GridFunction,
    PeierlsBarrier,
    PiecewiseCurve,
    Potential,
)
from services.curves import (
    chain_points_between,
    critical_at,
    directional_curve,
    find_kinks,
    pointwise_min,
    translate,
)
from services.potential import evaluate

logger = logging.getLogger(__name__)

RIGHT_BRANCH = 0
LEFT_BRANCH = 1


def chain_variation(cps: CriticalPointSet, c_from: int, c_to: int) -> float:
    """Uphill increments walking the critical chain from c_from to c_to."""
    total = 0.0
    if c_to >= c_from:
        for c in range(c_from, c_to):
            total += max(cps.chain_point(c + 1)[1] - cps.chain_point(c)[1], 0.0)
    else:
        for c in range(c_to, c_from):
            total += max(cps.chain_point(c)[1] - cps.chain_point(c + 1)[1], 0.0)
    return total


def chain_peierls(cps: CriticalPointSet, target: int, source: int) -> float:
    """h(x_target; x_source) between two chain points, cheaper direction."""
    span = 2 * cps.k
    if (target - source) % span == 0:
        return 0.0
    right_target = source + (target - source) % span
    left_target = right_target - span
    return min(chain_variation(cps, source, right_target), chain_variation(cps, source, left_target))


def positive_variation(
    p: Potential,
    cps: CriticalPointSet,
    start: float,
    end: float,
    direction: Direction | str,
) -> float:
    """
    Sum of uphill increments of U travelled from ``start`` to ``end``.

    Travelling right, an ``end`` left of ``start`` is moved forward by whole
    periods (and symmetrically for left), so the path always runs in the
    requested direction.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        start (float): Starting point.
        end (float): End point.
        direction (Direction | str): "left" or "right".

    Returns:
        float: The quasi-potential cost of that monotone path.
    """
    direction = Direction(direction)
    hit_start = critical_at(cps, start)
    hit_end = critical_at(cps, end)
    if not p.is_smooth and not p.interpolate and (hit_start is None or hit_end is None):
        raise AbstractModeError("positive_variation between non-critical points")

    if direction == Direction.RIGHT and end < start:
        end += math.ceil(start - end)
    elif direction == Direction.LEFT and end > start:
        end -= math.ceil(end - start)
    hit_end = critical_at(cps, end)

    u_start = hit_start[2] if hit_start is not None else evaluate(p, start)
    u_end = hit_end[2] if hit_end is not None else evaluate(p, end)
    lo, hi = min(start, end), max(start, end)
    stops = [u_start] + [v for _, _, v in chain_points_between(cps, lo, hi)][:: 1 if direction == Direction.RIGHT else -1]
    stops.append(u_end)
    return float(sum(max(b - a, 0.0) for a, b in zip(stops, stops[1:])))


def right_barrier(p: Potential, cps: CriticalPointSet, i: int) -> PiecewiseCurve:
    """h_R(y; x_i) for y in [x_i, x_{i+k}] (minimum index i, 0-based)."""
    return directional_curve(p, cps, cps.minima[i].position, Direction.RIGHT, label=f"hR:{i + 1}")


def left_barrier(p: Potential, cps: CriticalPointSet, i: int) -> PiecewiseCurve:
    """h_L(y; x_i) for y in [x_{i-k}, x_i] (minimum index i, 0-based)."""
    return directional_curve(p, cps, cps.minima[i].position, Direction.LEFT, label=f"hL:{i + 1}")


def _glued_barrier(p: Potential, cps: CriticalPointSet, anchor: float, label: str) -> PiecewiseCurve:
    right = directional_curve(p, cps, anchor, Direction.RIGHT)
    left = translate(directional_curve(p, cps, anchor, Direction.LEFT), 1, cps.tilt)
    return pointwise_min(p, cps, [right, left], anchor, anchor + 1.0, sources=[RIGHT_BRANCH, LEFT_BRANCH], label=label)


def peierls_barrier(
    p: Potential,
    cps: CriticalPointSet,
    index: int,
    kind: CriticalKind | str = CriticalKind.MINIMUM,
) -> PeierlsBarrier:
    """
    Peierls barrier h(y; anchor) anchored at a minimum or a maximum.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        index (int): 0-based index of the anchor among minima or maxima.
        kind (CriticalKind | str): Which family the index refers to.

    Returns:
        PeierlsBarrier: The periodic curve on [anchor, anchor+1] and the
            connection point x* where the right branch hands over to the left one.
    """
    kind = CriticalKind(kind)
    point = cps.minima[index] if kind == CriticalKind.MINIMUM else cps.maxima[index]
    prefix = "x" if kind == CriticalKind.MINIMUM else "x+1/2"
    curve = _glued_barrier(p, cps, point.position, label=f"h:{prefix}{index + 1}")

    connection = next((seg.start for seg in curve.segments if seg.source == LEFT_BRANCH), None)
    has_kink = False
    if connection is not None:
        has_kink = any(abs(k.position - connection) <= 1e-9 for k in find_kinks(curve, p, cps))
    tie = any(seg.tie for seg in curve.segments)
    logger.debug(f"Peierls barrier at {point.position:.6f}: connection={connection}, kink={has_kink}")
    return PeierlsBarrier(
        anchor=point.position,
        anchor_kind=kind,
        anchor_index=index,
        curve=curve,
        connection=connection,
        has_kink=has_kink,
        tie=tie,
    )


def peierls_at(p: Potential, cps: CriticalPointSet, anchor: float) -> PeierlsBarrier:
    """Peierls barrier for an anchor given by position; it must be critical."""
    hit = critical_at(cps, anchor)
    if hit is None:
        raise NotCriticalAnchor(anchor)
    c = hit[0] % (2 * cps.k)
    kind = cps.chain_kind(c)
    return peierls_barrier(p, cps, c // 2, kind)


def mane_potential(p: Potential, cps: CriticalPointSet, anchor: float) -> PiecewiseCurve:
    """
    Mañé potential v(y; anchor) for any anchor on the circle.

    For a critical anchor this equals the Peierls barrier; otherwise the curve
    has a convex corner at the anchor where a constant meets a monotone branch.

    Args:
        p (Potential): The potential.
        cps (CriticalPointSet): Its critical points.
        anchor (float): Any point.

    Returns:
        PiecewiseCurve: Periodic curve on [anchor, anchor+1] with v(anchor) = 0.
    """
    if critical_at(cps, anchor) is None and not p.has_derivatives:
        raise AbstractModeError("mane_potential at a non-critical anchor")
    return _glued_barrier(p, cps, anchor, label=f"v:{anchor:.12g}")


def critical_peierls(cps: CriticalPointSet) -> list[list[float]]:
    """h(x_a; x_b) for every pair of critical points in chain order."""
    span = 2 * cps.k
    return [[chain_peierls(cps, a, b) for b in range(span)] for a in range(span)]


def barrier_table(cps: CriticalPointSet) -> BarrierTable:
    """
    Tables h̃_R(x_i; x_{j+1}), h̃_L(x_i; x_j) and h(x_i; x_j) on the minima.

    Args:
        cps (CriticalPointSet): Critical points (values are all that matter).

    Returns:
        BarrierTable: k x k tables plus the 2k x 2k critical-point Peierls matrix.
    """
    k = cps.k
    span = 2 * k
    hr = [[0.0] * k for _ in range(k)]
    hl = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            source = 2 * (j + 1) + 1
            target = 2 * i + 1 if j < i else 2 * i + 1 + span
            hr[i][j] = chain_variation(cps, source, target)
            source = 2 * j + 1
            target = 2 * i + 1 if j >= i else 2 * i + 1 - span
            hl[i][j] = chain_variation(cps, source, target)
    critical = critical_peierls(cps)
    peierls = [[critical[2 * i + 1][2 * j + 1] for j in range(k)] for i in range(k)]
    logger.info(f"Barrier table assembled for k={k}")
    return BarrierTable(hR_tilde=hr, hL_tilde=hl, peierls=peierls, critical=critical)


def grid_barrier_oracle(p: Potential, anchor: float, n: int = 2000) -> GridFunction:
    """
    Shortest-path barrier on a ring of n nodes starting at ``anchor``.

    Edges join neighbouring nodes in both directions with cost
    max(U(next) - U(current), 0).

    Args:
        p (Potential): The potential.
        anchor (float): Position of node 0.
        n (int): Number of nodes.

    Returns:
        GridFunction: Distances on the grid anchor + j/n.
    """
    u = evaluate(p, anchor + np.arange(n + 1) / n)
    rise = np.diff(u)
    distances = np.full(n, np.inf)
    distances[0] = 0.0
    queue = [(0.0, 0)]
    while queue:
        current_distance, node = heapq.heappop(queue)
        if current_distance > distances[node]:
            continue
        for neighbor, weight in (
            ((node + 1) % n, max(rise[node], 0.0)),
            ((node - 1) % n, max(-rise[node - 1], 0.0)),
        ):
            distance = current_distance + weight
            if distance < distances[neighbor]:
                distances[neighbor] = distance
                heapq.heappush(queue, (distance, neighbor))
    return GridFunction(values=distances, start=anchor)
