# Import libraries
import numpy as np
import pytest

from common.errors import AbstractModeError, NotCriticalAnchor
from common.types import CriticalKind, Direction
from services.barriers import (
    barrier_table,
    chain_peierls,
    chain_variation,
    critical_peierls,
    grid_barrier_oracle,
    left_barrier,
    mane_potential,
    peierls_at,
    peierls_barrier,
    positive_variation,
    right_barrier,
)
from services.curves import continuity_defect, evaluate_curve, sample_curve
from services.potential import build_potential, evaluate, find_critical_points, random_potential_spec


def test_chain_variation_three_well(three_well_setup):
    _, cps, _ = three_well_setup
    # x_2 right past wells 2 and 3 to x_1 of the next period
    assert chain_variation(cps, 3, 7) == pytest.approx(19.0)
    # x_3 left to x_1
    assert chain_variation(cps, 5, 1) == pytest.approx(13.0)
    assert chain_variation(cps, 1, 1) == 0.0


def test_positive_variation_between_minima(three_well_setup):
    p, cps, _ = three_well_setup
    assert positive_variation(p, cps, 0.5, 1 / 6, "right") == pytest.approx(19.0)
    assert positive_variation(p, cps, 5 / 6, 1 / 6, Direction.LEFT) == pytest.approx(13.0)


def test_positive_variation_needs_interpolant(three_well_setup):
    p, cps, _ = three_well_setup
    with pytest.raises(AbstractModeError):
        positive_variation(p, cps, 0.3, 0.5, "right")


def test_right_barrier_at_minima(three_well_setup):
    p, cps, _ = three_well_setup
    curve = right_barrier(p, cps, 0)
    assert not curve.periodic
    values = [evaluate_curve(curve, p, x) for x in (1 / 6, 0.5, 5 / 6, 7 / 6)]
    assert values == pytest.approx([0.0, 4.0, 14.0, 23.0])
    assert continuity_defect(curve, p) <= 1e-12


def test_left_barrier_at_minima(three_well_setup):
    p, cps, _ = three_well_setup
    curve = left_barrier(p, cps, 0)
    values = [evaluate_curve(curve, p, x) for x in (1 / 6, -1 / 6, -0.5, -5 / 6)]
    assert values == pytest.approx([0.0, 6.0, 14.0, 19.0])


def test_single_well_right_barrier(single_well_setup):
    p, cps, _ = single_well_setup
    curve = right_barrier(p, cps, 0)
    x0 = cps.minima[0].position
    xs = np.linspace(x0, 1.0, 17)
    assert np.allclose(sample_curve(curve, p, xs), evaluate(p, xs))
    assert evaluate_curve(curve, p, 1.2) == pytest.approx(9 / 8 + 2)


def test_barrier_table_three_well(three_well_setup):
    _, _, bt = three_well_setup
    assert bt.k == 3
    assert bt.hL_tilde[0][2] == pytest.approx(13.0)
    assert bt.hR_tilde[0][2] == pytest.approx(0.0)
    row = [bt.hR_tilde[0][j] + bt.hL_tilde[0][j] for j in range(3)]
    assert row == pytest.approx([19.0, 14.0, 13.0])
    assert all(bt.peierls[i][i] == 0.0 for i in range(3))
    assert all(v >= 0 for table in (bt.hR_tilde, bt.hL_tilde, bt.peierls) for row in table for v in row)


def test_peierls_between_minima(three_well_setup):
    _, cps, bt = three_well_setup
    # h(x_2; x_1): right over the maximum 5, left over 7 and 10
    assert bt.peierls[1][0] == pytest.approx(4.0)
    assert bt.peierls[0][1] == pytest.approx(5.0)
    assert bt.peierls[0][2] == pytest.approx(min(9.0, 13.0))


def test_critical_peierls_is_a_quasi_metric(three_well_setup):
    _, cps, bt = three_well_setup
    h = np.array(critical_peierls(cps))
    assert np.all(np.diag(h) == 0.0)
    for a in range(6):
        for b in range(6):
            assert h[a, b] == pytest.approx(chain_peierls(cps, a, b))
            assert np.all(h[a, b] <= h[a, :] + h[:, b] + 1e-12)
    assert h[1, 3] == pytest.approx(bt.peierls[0][1])


def test_peierls_at_maximum_is_flat_downhill(three_well_setup):
    p, cps, _ = three_well_setup
    barrier = peierls_barrier(p, cps, 1, CriticalKind.MAXIMUM)
    for x in (1 / 6, 0.25, 1 / 3, 0.4, 0.5):
        assert evaluate_curve(barrier.curve, p, x) == pytest.approx(0.0, abs=1e-12)


def test_single_well_peierls(single_well_setup):
    p, cps, _ = single_well_setup
    barrier = peierls_barrier(p, cps, 0)
    xs = np.linspace(0.0, 1.0, 401)
    expected = np.minimum(evaluate(p, xs), 9 / 8)
    assert np.allclose(sample_curve(barrier.curve, p, xs), expected, atol=1e-12)
    assert barrier.connection == pytest.approx(2 / 3, abs=1e-9)
    assert barrier.has_kink
    assert not barrier.tie


def test_peierls_at_needs_critical_anchor(single_well_setup):
    p, cps, _ = single_well_setup
    assert peierls_at(p, cps, cps.minima[0].position).anchor_kind == CriticalKind.MINIMUM
    assert peierls_at(p, cps, 1.0).anchor_kind == CriticalKind.MAXIMUM
    with pytest.raises(NotCriticalAnchor):
        peierls_at(p, cps, 0.3)


def test_mane_potential_at_critical_anchor_matches_peierls(single_well_setup):
    p, cps, _ = single_well_setup
    x0 = cps.minima[0].position
    xs = np.linspace(0.0, 1.0, 257)
    mane = mane_potential(p, cps, x0)
    peierls = peierls_barrier(p, cps, 0).curve
    assert np.allclose(sample_curve(mane, p, xs), sample_curve(peierls, p, xs), atol=1e-12)


def test_mane_potential_vanishes_at_anchor(single_well_setup):
    p, cps, _ = single_well_setup
    for anchor in (0.2, 0.55, 0.8):
        mane = mane_potential(p, cps, anchor)
        assert evaluate_curve(mane, p, anchor) == pytest.approx(0.0, abs=1e-12)
        assert continuity_defect(mane, p) <= 1e-9


def test_mane_potential_needs_interpolant(three_well_setup):
    p, cps, _ = three_well_setup
    with pytest.raises(AbstractModeError):
        mane_potential(p, cps, 0.3)


def _oracle_tolerance(p, n):
    grid = np.arange(n) / n
    return 2.0 * float(np.max(np.abs(evaluate(p, grid, 2)))) / n + 1e-8


def _compare_with_oracle(p, curve, anchor, n=2000):
    oracle = grid_barrier_oracle(p, anchor, n)
    values = sample_curve(curve, p, oracle.grid)
    return float(np.max(np.abs(values - oracle.values)))


@pytest.mark.parametrize("fixture", ["single_well", "double_well"])
def test_oracle_agrees_with_peierls(request, fixture):
    p = request.getfixturevalue(fixture)
    cps = find_critical_points(p)
    for i in range(cps.k):
        barrier = peierls_barrier(p, cps, i)
        assert _compare_with_oracle(p, barrier.curve, barrier.anchor) <= _oracle_tolerance(p, 2000)


def test_oracle_agrees_on_random_potentials(rng):
    for _ in range(10):
        k = int(rng.integers(1, 4))
        p = build_potential(random_potential_spec(rng, k, "trig", tilt=None))
        cps = find_critical_points(p)
        tol = _oracle_tolerance(p, 2000)
        barrier = peierls_barrier(p, cps, int(rng.integers(0, k)))
        assert _compare_with_oracle(p, barrier.curve, barrier.anchor) <= tol
        anchor = float(rng.uniform(0.0, 1.0))
        assert _compare_with_oracle(p, mane_potential(p, cps, anchor), anchor) <= tol
