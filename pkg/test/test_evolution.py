# Import libraries
import numpy as np
import pytest
from pydantic import ValidationError

from common.errors import SchemeError
from common.types import GridFunction, Scheme, SchemeConfig
from services.barriers import barrier_table
from services.curves import sample_curve
from services.evolution import (
    bernoulli,
    evolve_fokker_planck,
    evolve_hje,
    evolve_hje_snapshots,
    exchange_limits_experiment,
    fokker_planck_operator,
    gibbs_initial_density,
    godunov_hamiltonian,
    lax_friedrichs_hamiltonian,
)
from services.landscape import boundary_values_fw, build_landscape
from services.potential import evaluate, find_critical_points
from services.stochastic import invariant_density


def _fw_landscape(p):
    cps = find_critical_points(p)
    bt = barrier_table(cps)
    return build_landscape(p, cps, boundary_values_fw(bt), bt)


def _sampled_wstar(p, n):
    return GridFunction(values=sample_curve(_fw_landscape(p).Wstar, p, np.arange(n) / n))


def _drift(p, n, T, scheme=Scheme.LAX_FRIEDRICHS):
    u0 = _sampled_wstar(p, n)
    return float(np.max(np.abs(evolve_hje(u0, p, SchemeConfig(n=n, T=T, scheme=scheme)).values - u0.values)))


def test_bernoulli():
    z = np.array([-3.0, -1e-12, 0.0, 1e-12, 0.5, 40.0])
    values = bernoulli(z)
    assert values[2] == 1.0
    assert values[4] == pytest.approx(0.5 / np.expm1(0.5))
    assert np.allclose(bernoulli(-z), values + z)
    assert np.all(values > 0)


def test_scheme_config_ranges():
    with pytest.raises(ValidationError):
        SchemeConfig(cfl=0.6)
    with pytest.raises(ValidationError):
        SchemeConfig(n=32)
    with pytest.raises(ValidationError):
        SchemeConfig(epsilon=0.0)


def test_operator_conserves_mass(single_well):
    operator = fokker_planck_operator(single_well, 0.1, 256)
    column_sums = np.asarray(operator.sum(axis=0)).ravel()
    assert np.max(np.abs(column_sums)) <= 1e-9 * abs(operator).max()


def test_operator_annihilates_gibbs_without_tilt(double_well):
    eps, n = 0.1, 512
    gibbs = np.exp(-evaluate(double_well, np.arange(n) / n) / eps)
    operator = fokker_planck_operator(double_well, eps, n)
    assert np.max(np.abs(operator @ gibbs)) <= 1e-9 * abs(operator).max() * np.max(gibbs)


def test_tilted_invariant_density_is_stationary(single_well):
    eps, n = 0.2, 4096
    pi = invariant_density(single_well, eps, n)
    rho = evolve_fokker_planck(pi, single_well, SchemeConfig(n=n, T=0.1, epsilon=eps))
    assert np.max(np.abs(rho.values - pi.values)) <= 1e-2 * np.max(pi.values)


def test_fokker_planck_conserves_mass_and_sign(single_well, rng):
    rho0 = GridFunction(values=rng.uniform(0.0, 2.0, size=256))
    rho = evolve_fokker_planck(rho0, single_well, SchemeConfig(n=256, T=0.2, epsilon=0.05))
    assert np.mean(rho.values) == pytest.approx(np.mean(rho0.values), rel=1e-10)
    assert np.all(rho.values >= 0)
    assert rho.time == 0.2


def test_fokker_planck_input_checks(single_well):
    rho0 = GridFunction(values=np.ones(128))
    with pytest.raises(SchemeError):
        evolve_fokker_planck(rho0, single_well, SchemeConfig(n=128, T=0.1))
    negative = GridFunction(values=np.r_[-1.0, np.ones(127)])
    with pytest.raises(SchemeError):
        evolve_fokker_planck(negative, single_well, SchemeConfig(n=128, T=0.1, epsilon=0.1))


def test_fixed_alpha_below_wave_speed_is_rejected(single_well):
    n = 128
    x = np.arange(n) / n
    u = np.sin(2 * np.pi * x)
    with pytest.raises(SchemeError):
        lax_friedrichs_hamiltonian(single_well, x, u, 1.0 / n, alpha=0.0)
    _, alpha = lax_friedrichs_hamiltonian(single_well, x, u, 1.0 / n)
    assert np.all(alpha > 0)


def test_dissipation_is_local(single_well):
    n = 512
    x = np.arange(n) / n
    u0 = _sampled_wstar(single_well, n)
    _, alpha = lax_friedrichs_hamiltonian(single_well, x, u0.values, 1.0 / n)
    assert np.min(alpha) < 0.1 * np.max(alpha)
    x0 = find_critical_points(single_well).minima[0].position
    assert alpha[int(round(x0 * n)) % n] < 0.05 * np.max(alpha)


def test_godunov_rates_vanish_on_the_potential(single_well):
    n = 256
    x = np.arange(n) / n
    h = 1.0 / n
    for u in (evaluate(single_well, x) + 3.0, np.full(n, 2.0)):
        rates, bound = godunov_hamiltonian(single_well, x, u, h)
        assert np.all(bound >= 0)
        assert np.all(rates <= 1e-9)
        assert np.sum(np.abs(rates) > 1e-9) <= 4


def test_hje_keeps_the_landscape_short_run(single_well):
    assert _drift(single_well, 512, 0.1) <= 0.05


def test_godunov_keeps_the_landscape_short_run(three_well_interpolated):
    assert _drift(three_well_interpolated, 500, 0.05, Scheme.GODUNOV) <= 1e-8


@pytest.mark.slow
def test_hje_keeps_the_landscape(single_well):
    coarse = _drift(single_well, 1000, 1.0)
    assert coarse <= 0.05
    assert _drift(single_well, 2000, 1.0) < coarse


@pytest.mark.slow
@pytest.mark.parametrize("n", [1000, 2000])
def test_hje_keeps_the_three_well_landscape(three_well_interpolated, n):
    assert _drift(three_well_interpolated, n, 1.0, Scheme.GODUNOV) <= 0.02


def test_hje_is_monotone_and_non_expansive(single_well):
    n = 256
    cfg = SchemeConfig(n=n, T=0.05)
    u0 = _sampled_wstar(single_well, n)
    bump = 0.1 * (1.0 + np.sin(2 * np.pi * u0.grid))
    v0 = GridFunction(values=u0.values + bump)
    u = evolve_hje(u0, single_well, cfg, alpha=40.0)
    v = evolve_hje(v0, single_well, cfg, alpha=40.0)
    assert np.all(u.values <= v.values + 1e-12)
    assert np.max(np.abs(v.values - u.values)) <= np.max(bump) + 1e-12


def test_snapshots(single_well):
    n = 256
    u0 = _sampled_wstar(single_well, n)
    cfg = SchemeConfig(n=n, T=0.1)
    snapshots = evolve_hje_snapshots(u0, single_well, cfg, [0.1, 0.05])
    assert [s.time for s in snapshots] == [0.05, 0.1]
    assert np.allclose(snapshots[-1].values, evolve_hje(u0, single_well, cfg).values, atol=1e-3)
    with pytest.raises(SchemeError):
        evolve_hje_snapshots(u0, single_well, cfg, [-0.1])


def test_gibbs_initial_density(single_well):
    rho = gibbs_initial_density(single_well, _fw_landscape(single_well), 0.05, 512)
    assert np.mean(rho.values) == pytest.approx(1.0)
    assert np.all(rho.values > 0)


@pytest.mark.slow
def test_exchange_of_limits(single_well):
    report = exchange_limits_experiment(single_well, _fw_landscape(single_well), [0.01], T=1.0, n=2000)
    assert report.n == 2000
    (row,) = report.rows
    assert row.fokker_planck_distance <= 0.05
    assert row.hje_distance <= 0.05
