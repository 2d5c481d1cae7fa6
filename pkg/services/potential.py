# Import libraries
import hashlib
import logging
import math
from typing import Any

import numpy as np
from scipy import optimize

from common.config import get_settings
from common.errors import (
    AbstractModeError,
    DegenerateCriticalPoint,
    NoCriticalPoints,
    PotentialSpecError,
)
from common.types import (
    CriticalKind,
    CriticalPoint,
    CriticalPointSet,
    Potential,
    PotentialMode,
    PotentialSpec,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def _trig(p: Potential, r: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros_like(r)
    for freq, coef in p.cos:
        w = TWO_PI * freq
        if order == 0:
            out += coef * np.cos(w * r)
        elif order == 1:
            out -= coef * w * np.sin(w * r)
        else:
            out -= coef * w * w * np.cos(w * r)
    for freq, coef in p.sin:
        w = TWO_PI * freq
        if order == 0:
            out += coef * np.sin(w * r)
        elif order == 1:
            out += coef * w * np.cos(w * r)
        else:
            out -= coef * w * w * np.sin(w * r)
    return out


def _smooth_values(p: Potential, x: np.ndarray, order: int) -> np.ndarray:
    n = np.floor(x)
    r = x - n
    if order == 0:
        return p.offset + _trig(p, r, 0) - p.linear * r - p.tilt * n
    if order == 1:
        return _trig(p, r, 1) - p.linear
    return _trig(p, r, 2)


def _chain_values(p: Potential, x: np.ndarray, order: int) -> np.ndarray:
    positions = np.asarray(p.chain_positions)
    values = np.asarray(p.chain_values)
    n = np.floor(x - positions[0])
    r = x - n
    s = np.clip(np.searchsorted(positions, r, side="right") - 1, 0, positions.size - 2)
    width = positions[s + 1] - positions[s]
    t = (r - positions[s]) / width
    rise = values[s + 1] - values[s]
    if order == 0:
        return values[s] + 0.5 * rise * (1.0 - np.cos(math.pi * t)) - p.tilt * n
    if order == 1:
        return 0.5 * rise * math.pi * np.sin(math.pi * t) / width
    return 0.5 * rise * math.pi**2 * np.cos(math.pi * t) / width**2


def evaluate(p: Potential, x: Any, order: int = 0) -> Any:
    """
    Evaluate U, U' or U'' at any real x (scalar or array).

    Args:
        p (Potential): The potential.
        x: Position(s); the skew-periodic extension is applied.
        order (int): 0, 1 or 2.

    Returns:
        float or numpy.ndarray matching the shape of x.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    if order > 0 and not p.has_derivatives:
        raise AbstractModeError(f"evaluate(order={order})")
    arr = np.asarray(x, dtype=float)
    if p.is_smooth:
        out = _smooth_values(p, arr, order)
    else:
        out = _chain_values(p, arr, order)
    return float(out) if np.ndim(x) == 0 else out


def build_potential(spec: PotentialSpec | dict) -> Potential:
    """
    Build a Potential from its description.

    Args:
        spec (PotentialSpec | dict): Smooth coefficients plus tilt, or an
            alternating list of critical values starting at a maximum.

    Returns:
        Potential: Skew-periodic to 1e-12 at 64 sample points.
    """
    if isinstance(spec, dict):
        try:
            spec = PotentialSpec.model_validate(spec)
        except ValueError as e:
            raise PotentialSpecError(str(e)) from e

    if spec.mode == PotentialMode.SMOOTH:
        potential = _build_smooth(spec)
    else:
        potential = _build_extrema(spec)

    xs = np.linspace(-1.3, 2.7, 64)
    drift = evaluate(potential, xs + 1.0) - evaluate(potential, xs) + potential.tilt
    scale = max(1.0, float(np.max(np.abs(evaluate(potential, xs)))))
    if np.max(np.abs(drift)) > 1e-12 * scale:
        raise PotentialSpecError("skew periodicity U(x+1) = U(x) - tilt fails", float(np.max(np.abs(drift))))
    logger.info(f"Built {potential.mode.value} potential '{potential.name}' with tilt {potential.tilt:.6g}")
    return potential


def _build_smooth(spec: PotentialSpec) -> Potential:
    tilt = 0.0 if spec.tilt is None else float(spec.tilt)
    draft = Potential(
        mode=PotentialMode.SMOOTH,
        name=spec.name,
        cos=tuple((float(f), float(c)) for f, c in spec.cos),
        sin=tuple((float(f), float(c)) for f, c in spec.sin),
        offset=spec.offset,
        tilt=tilt,
    )
    ends = np.array([0.0, 1.0])
    trig_values = _trig(draft, ends, 0)
    slopes = _trig(draft, ends, 1)
    if abs(slopes[1] - slopes[0]) > 1e-9 * max(1.0, float(np.max(np.abs(slopes)))):
        raise PotentialSpecError("U' does not match across the period boundary", slopes.tolist())
    # U(1) - U(0) = -tilt fixes the linear coefficient.
    linear = tilt + float(trig_values[1] - trig_values[0])
    return draft.model_copy(update={"linear": linear})


def _build_extrema(spec: PotentialSpec) -> Potential:
    values = [float(v) for v in spec.extrema]
    k = (len(values) - 1) // 2
    for i in range(k):
        if not (values[2 * i] > values[2 * i + 1] < values[2 * i + 2]):
            raise PotentialSpecError(f"extrema do not alternate around minimum {i + 1}", values)
    if spec.positions is None:
        positions = [j / (2 * k) for j in range(2 * k + 1)]
    else:
        positions = [float(x) for x in spec.positions]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise PotentialSpecError("extremum positions must increase strictly", positions)
        if abs(positions[-1] - positions[0] - 1.0) > 1e-12:
            raise PotentialSpecError("first and last extremum must be one period apart", positions)
    tilt = values[0] - values[-1]
    if spec.tilt is not None and abs(spec.tilt - tilt) > 1e-12:
        raise PotentialSpecError(f"tilt {spec.tilt} disagrees with the extrema (implied {tilt})")
    return Potential(
        mode=PotentialMode.ABSTRACT_EXTREMA,
        name=spec.name,
        tilt=tilt,
        chain_positions=tuple(positions),
        chain_values=tuple(values),
        interpolate=spec.interpolate,
    )


def find_critical_points(p: Potential) -> CriticalPointSet:
    """
    Locate and classify the critical points of U on one period.

    Args:
        p (Potential): The potential.

    Returns:
        CriticalPointSet: Interleaved maxima/minima starting at a maximum.
    """
    if not p.is_smooth:
        return _chain_critical_points(p)

    settings = get_settings()
    n = settings.root_samples
    xs = np.linspace(0.0, 1.0, n + 1)
    slopes = evaluate(p, xs, 1)

    roots = [float(xs[j]) for j in np.nonzero(slopes[:-1] == 0.0)[0]]
    for j in np.nonzero(slopes[:-1] * slopes[1:] < 0.0)[0]:
        root = optimize.brentq(
            lambda y: evaluate(p, y, 1), xs[j], xs[j + 1], xtol=settings.position_tol, maxiter=200
        )
        roots.append(float(root))

    roots = sorted(r % 1.0 for r in roots)
    unique: list[float] = []
    for r in roots:
        if not unique or r - unique[-1] > 1e-9:
            unique.append(r)
    if len(unique) > 1 and unique[0] + 1.0 - unique[-1] <= 1e-9:
        unique.pop()

    if not unique:
        raise NoCriticalPoints(p.tilt)

    kinds = []
    for r in unique:
        curvature = evaluate(p, r, 2)
        if abs(curvature) < settings.degeneracy_tol:
            raise DegenerateCriticalPoint(r, curvature)
        kinds.append((r, curvature))

    first = next((i for i, (_, c) in enumerate(kinds) if c < 0), None)
    if first is None or len(kinds) % 2:
        raise DegenerateCriticalPoint(kinds[0][0], kinds[0][1])
    ordered = [(r, c) for r, c in kinds[first:]] + [(r + 1.0, c) for r, c in kinds[:first]]

    maxima, minima = [], []
    for j, (r, c) in enumerate(ordered):
        expected_max = j % 2 == 0
        if (c < 0) != expected_max:
            raise DegenerateCriticalPoint(r, c)
        point = CriticalPoint(
            kind=CriticalKind.MAXIMUM if expected_max else CriticalKind.MINIMUM,
            index=j // 2,
            position=r,
            value=evaluate(p, r),
            curvature=c,
        )
        (maxima if expected_max else minima).append(point)
    first_max = maxima[0]
    maxima.append(
        first_max.model_copy(
            update={"index": len(minima), "position": first_max.position + 1.0, "value": first_max.value - p.tilt}
        )
    )
    cps = CriticalPointSet(minima=minima, maxima=maxima, tilt=p.tilt)
    logger.info(f"Found {cps.k} wells for potential '{p.name}'")
    return cps


def _chain_critical_points(p: Potential) -> CriticalPointSet:
    maxima, minima = [], []
    for j, (x, v) in enumerate(zip(p.chain_positions, p.chain_values)):
        if j % 2 == 0:
            maxima.append(CriticalPoint(kind=CriticalKind.MAXIMUM, index=j // 2, position=x, value=v))
        else:
            minima.append(CriticalPoint(kind=CriticalKind.MINIMUM, index=j // 2, position=x, value=v))
    if p.interpolate:
        maxima = [m.model_copy(update={"curvature": evaluate(p, m.position, 2)}) for m in maxima]
        minima = [m.model_copy(update={"curvature": evaluate(p, m.position, 2)}) for m in minima]
    return CriticalPointSet(minima=minima, maxima=maxima, tilt=p.tilt)


def hamiltonian(p: Potential, x: Any, momentum: Any) -> Any:
    """H(p, x) = p (p - U'(x))."""
    return momentum * (momentum - evaluate(p, x, 1))


def lagrangian(p: Potential, x: Any, velocity: Any) -> Any:
    """L(s, x) = (s + U'(x))^2 / 4."""
    return 0.25 * (velocity + evaluate(p, x, 1)) ** 2


def reversed_potential(p: Potential) -> Potential:
    """
    Return the potential -U (tilt -b), swapping minima and maxima.

    Args:
        p (Potential): The potential.

    Returns:
        Potential: The reversed potential; reversing twice gives back U.
    """
    name = None if p.name is None else f"reversed:{p.name}"
    if p.name is not None and p.name.startswith("reversed:"):
        name = p.name[len("reversed:"):]
    if p.is_smooth:
        return p.model_copy(
            update={
                "name": name,
                "cos": tuple((f, -c) for f, c in p.cos),
                "sin": tuple((f, -c) for f, c in p.sin),
                "offset": -p.offset,
                "tilt": -p.tilt,
                "linear": -p.linear,
            }
        )
    positions = list(p.chain_positions[1:]) + [p.chain_positions[1] + 1.0]
    values = [-v for v in p.chain_values[1:]] + [-(p.chain_values[1] - p.tilt)]
    return p.model_copy(
        update={"name": name, "tilt": -p.tilt, "chain_positions": tuple(positions), "chain_values": tuple(values)}
    )


def fingerprint(p: Potential) -> str:
    return hashlib.sha256(p.model_dump_json().encode("utf-8")).hexdigest()[:16]


def random_potential_spec(
    rng: np.random.Generator, k: int, kind: str = "trig", tilt: float | None = 0.0
) -> PotentialSpec:
    """
    Draw a random potential description with k wells per period.

    Args:
        rng (numpy.random.Generator): Seeded generator.
        k (int): Number of wells.
        kind (str): "trig" for a trigonometric polynomial dominated by
            frequency k, "extrema" for an abstract list of critical values.
        tilt (float | None): Energy drop per period; None draws one.

    Returns:
        PotentialSpec: A description accepted by build_potential.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if kind == "extrema":
        if tilt is None:
            tilt = float(rng.uniform(-3.0, 3.0))
        tops = rng.uniform(3.0, 10.0, size=k).tolist()
        tops.append(tops[0] - tilt)
        values = []
        for i in range(k):
            ceiling = min(tops[i], tops[i + 1])
            values.extend([tops[i], float(rng.uniform(ceiling - 6.0, ceiling - 0.5))])
        values.append(tops[k])
        return PotentialSpec(mode=PotentialMode.ABSTRACT_EXTREMA, name=f"random-extrema-{k}", extrema=values)
    if kind != "trig":
        raise ValueError(f"unknown random potential kind '{kind}'")
    if tilt is None:
        tilt = float(rng.uniform(-0.5, 0.5)) * math.pi * k
    phase = float(rng.uniform(0.0, TWO_PI))
    cos_terms = [(float(k), math.cos(phase))]
    sin_terms = [(float(k), -math.sin(phase))]
    freqs = [f for f in range(1, 2 * k + 1) if f != k]
    for f in rng.choice(freqs, size=min(2, len(freqs)), replace=False) if freqs else []:
        amplitude = 0.1 * k / float(f) * float(rng.uniform(0.2, 1.0))
        shift = float(rng.uniform(0.0, TWO_PI))
        cos_terms.append((float(f), amplitude * math.cos(shift)))
        sin_terms.append((float(f), -amplitude * math.sin(shift)))
    return PotentialSpec(
        mode=PotentialMode.SMOOTH,
        name=f"random-trig-{k}",
        cos=cos_terms,
        sin=sin_terms,
        offset=1.0,
        tilt=tilt,
    )
