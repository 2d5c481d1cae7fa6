# Import libraries
import math

import numpy as np
import pytest

from common.errors import AbstractModeError, DegenerateCriticalPoint, NoCriticalPoints, PotentialSpecError
from common.types import CriticalKind, PotentialMode
from services.potential import (
    build_potential,
    evaluate,
    find_critical_points,
    fingerprint,
    hamiltonian,
    lagrangian,
    random_potential_spec,
    reversed_potential,
)

X0 = math.acos(0.25) / math.pi


def test_single_well_end_values(single_well):
    assert single_well.tilt == -2.0
    assert evaluate(single_well, 0.0) == pytest.approx(9 / 8, abs=1e-12)
    assert evaluate(single_well, 1.0) == pytest.approx(9 / 8 + 2, abs=1e-12)


@pytest.mark.parametrize("x, expected", [(2 / 3, 9 / 8), (X0, 0.0), (0.5, 9 / 8 - 1)])
def test_single_well_values(single_well, x, expected):
    assert evaluate(single_well, x) == pytest.approx(expected, abs=1e-12)


def test_skew_periodicity(single_well, rng):
    xs = rng.uniform(-3.0, 3.0, size=50)
    shifted = evaluate(single_well, xs + 1.0)
    assert np.allclose(shifted, evaluate(single_well, xs) - single_well.tilt, atol=1e-12)
    assert np.allclose(evaluate(single_well, xs + 1.0, 1), evaluate(single_well, xs, 1), atol=1e-9)


def test_array_and_scalar_shapes(single_well):
    assert isinstance(evaluate(single_well, 0.3), float)
    assert evaluate(single_well, np.zeros((3, 2))).shape == (3, 2)
    with pytest.raises(ValueError):
        evaluate(single_well, 0.3, order=3)


def test_single_well_critical_points(single_well):
    cps = find_critical_points(single_well)
    assert cps.k == 1
    assert cps.minima[0].position == pytest.approx(X0, abs=1e-10)
    assert cps.minima[0].value == pytest.approx(0.0, abs=1e-12)
    assert cps.maxima[0].position == pytest.approx(0.0, abs=1e-12)
    assert cps.maxima[1].position == pytest.approx(1.0, abs=1e-12)
    assert cps.maxima[0].curvature < 0 < cps.minima[0].curvature


def test_minimum_matches_factored_derivative(single_well):
    # U'(x) = pi sin(pi x) (1 - 4 cos(pi x))
    lo, hi = 0.1, 0.9
    factor = lambda y: 1.0 - 4.0 * math.cos(math.pi * y)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if factor(lo) * factor(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert find_critical_points(single_well).minima[0].position == pytest.approx(0.5 * (lo + hi), abs=1e-10)


def test_three_well_critical_points(three_well):
    cps = find_critical_points(three_well)
    assert cps.k == 3
    assert cps.tilt == pytest.approx(-4.0)
    assert [m.value for m in cps.minima] == [1.0, 0.0, 2.0]
    assert [m.value for m in cps.maxima] == [7.0, 5.0, 10.0, 11.0]
    assert [pt.kind for pt in cps.points()] == [CriticalKind.MAXIMUM, CriticalKind.MINIMUM] * 3


def test_chain_point_shifts_by_period(three_well):
    cps = find_critical_points(three_well)
    x, v = cps.chain_point(1)
    x_next, v_next = cps.chain_point(7)
    assert x_next == pytest.approx(x + 1.0)
    assert v_next == pytest.approx(v - cps.tilt)
    assert cps.chain_point(-1) == pytest.approx((5 / 6 - 1.0, 2.0 + cps.tilt))


def test_abstract_mode_has_no_derivatives(three_well):
    assert not three_well.has_derivatives
    evaluate(three_well, 0.3)
    with pytest.raises(AbstractModeError):
        evaluate(three_well, 0.3, order=1)


def test_interpolated_abstract_mode(three_well_interpolated):
    p = three_well_interpolated
    assert p.has_derivatives
    nodes = np.array([0.0, 0.156, 0.284, 0.428, 0.63, 0.81, 1.0])
    assert np.allclose(evaluate(p, nodes), [7, 1, 5, 0, 10, 2, 11])
    assert np.allclose(evaluate(p, nodes, 1), 0.0, atol=1e-9)
    cps = find_critical_points(p)
    assert all(m.curvature > 0 for m in cps.minima)
    assert all(m.curvature < 0 for m in cps.maxima)


@pytest.mark.parametrize(
    "spec",
    [
        {"mode": "abstract-extrema", "extrema": [7, 1, 5, 0]},
        {"mode": "abstract-extrema", "extrema": [7, 8, 5]},
        {"mode": "abstract-extrema", "extrema": [7, 1, 5], "tilt": 1.0},
        {"mode": "abstract-extrema", "extrema": [7, 1, 5], "positions": [0.0, 0.5, 0.9]},
        {"mode": "smooth", "cos": [[0.3, 1.0]]},
        {"mode": "smooth", "cos": [[1, 1.0]], "extrema": [1, 0, 1]},
        {"mode": "smooth", "sin": [[0.5, 1.0]]},
        {"mode": "unknown"},
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(PotentialSpecError):
        build_potential(spec)


def test_monotone_potential_has_no_critical_points():
    p = build_potential({"cos": [[1, 0.1]], "tilt": -5.0})
    with pytest.raises(NoCriticalPoints):
        find_critical_points(p)


def test_degenerate_critical_point():
    # U' = -2 pi sin(2 pi x) (1 + cos(2 pi x)) has a double root at 1/2.
    p = build_potential({"cos": [[1, 1.0], [2, 0.25]]})
    with pytest.raises(DegenerateCriticalPoint):
        find_critical_points(p)


def test_hamiltonian_and_lagrangian(single_well):
    x = 0.3
    du = evaluate(single_well, x, 1)
    assert hamiltonian(single_well, x, 0.0) == 0.0
    assert hamiltonian(single_well, x, du) == pytest.approx(0.0)
    assert hamiltonian(single_well, x, du / 2) == pytest.approx(-du * du / 4)
    assert lagrangian(single_well, x, -du) == pytest.approx(0.0)
    assert lagrangian(single_well, x, du) == pytest.approx(du * du)


def test_reversed_smooth_potential(single_well):
    q = reversed_potential(single_well)
    xs = np.linspace(-1.0, 2.0, 31)
    assert q.tilt == 2.0
    assert np.allclose(evaluate(q, xs), -evaluate(single_well, xs))
    assert reversed_potential(q) == single_well


def test_reversed_abstract_potential(three_well_interpolated):
    q = reversed_potential(three_well_interpolated)
    xs = np.linspace(-1.0, 2.0, 37)
    assert q.tilt == pytest.approx(4.0)
    assert np.allclose(evaluate(q, xs), -evaluate(three_well_interpolated, xs), atol=1e-12)
    cps = find_critical_points(q)
    assert [m.value for m in cps.minima] == [-5.0, -10.0, -11.0]


def test_fingerprint_is_stable(three_well_spec, three_well_interpolated_spec, single_well_spec):
    assert fingerprint(build_potential(three_well_spec)) == fingerprint(build_potential(three_well_spec))
    assert fingerprint(build_potential(three_well_spec)) != fingerprint(build_potential(three_well_interpolated_spec))
    assert fingerprint(build_potential(single_well_spec)) != fingerprint(build_potential(three_well_spec))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("tilt", [0.0, None])
def test_random_trig_potentials(rng, k, tilt):
    spec = random_potential_spec(rng, k, "trig", tilt=tilt)
    p = build_potential(spec)
    assert p.mode == PotentialMode.SMOOTH
    assert find_critical_points(p).k == k


@pytest.mark.parametrize("k", [1, 2, 5])
def test_random_extrema_potentials(rng, k):
    spec = random_potential_spec(rng, k, "extrema", tilt=None)
    cps = find_critical_points(build_potential(spec))
    assert cps.k == k
    assert len(spec.extrema) == 2 * k + 1


def test_random_spec_rejects_bad_input(rng):
    with pytest.raises(ValueError):
        random_potential_spec(rng, 0)
    with pytest.raises(ValueError):
        random_potential_spec(rng, 2, "spline")
