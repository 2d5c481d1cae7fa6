# Import libraries
import math

import numpy as np
import pytest
from pydantic import ValidationError

from common.errors import GridResolutionError, SchemeError, SingleStateChain
from common.types import ChainModel
from services.landscape import boundary_values_fw, build_landscape
from services.potential import evaluate
from services.stochastic import (
    chain_generator,
    chain_stationary,
    closed_form_log_weights,
    gth_stationary,
    invariant_density,
    ldp_convergence,
    log_invariant_measure,
    simpson_weights,
    spectral_derivative,
    steady_flux,
    wkb,
)


def _ring_model(log_a, log_b, eps=1.0):
    k = len(log_a)
    a, b = np.exp(log_a), np.exp(log_b)
    q = np.zeros((k, k))
    for i in range(k):
        q[i, (i + 1) % k] += a[i]
        q[i, (i - 1) % k] += b[i]
        q[i, i] = -(a[i] + b[i])
    return ChainModel(epsilon=eps, a=a.tolist(), b=b.tolist(), log_a=list(log_a), log_b=list(log_b), Q=q.tolist())


def test_simpson_weights():
    w = simpson_weights(8)
    assert w.size == 9
    assert w.sum() == pytest.approx(1.0)
    xs = np.linspace(0.0, 1.0, 9)
    assert np.dot(w, xs**3) == pytest.approx(0.25)


def test_log_measure_and_density(single_well):
    log_pi = log_invariant_measure(single_well, 0.1, 1024)
    assert log_pi.n == 1024
    assert np.max(log_pi.values) == 0.0
    density = invariant_density(single_well, 0.1, 1024)
    assert np.mean(density.values) == pytest.approx(1.0)
    assert np.all(density.values > 0)


def test_tilt_free_measure_is_gibbs(double_well):
    eps, n = 0.1, 1024
    log_pi = log_invariant_measure(double_well, eps, n).values
    residual = log_pi + evaluate(double_well, np.arange(n) / n) / eps
    assert np.ptp(residual) <= 1e-8


def test_wkb_minimum_is_zero(single_well):
    w = wkb(single_well, 0.05, 1024)
    assert np.min(w.values) == 0.0


@pytest.mark.parametrize("eps, n, error", [(0.0, 64, SchemeError), (0.1, 63, GridResolutionError), (0.1, 8, GridResolutionError)])
def test_grid_checks(single_well, eps, n, error):
    with pytest.raises(error):
        log_invariant_measure(single_well, eps, n)


def _single_well_landscape(setup):
    p, cps, bt = setup
    return p, build_landscape(p, cps, boundary_values_fw(bt), bt)


def test_ldp_errors_decrease(single_well_setup):
    p, land = _single_well_landscape(single_well_setup)
    report = ldp_convergence(p, land, [0.05, 0.01, 0.005], n=2048)
    assert [row.eps for row in report.rows] == [0.05, 0.01, 0.005]
    assert report.decreasing
    assert report.final_error == report.rows[-1].sup_error


@pytest.mark.slow
def test_ldp_full_sweep(single_well_setup):
    p, land = _single_well_landscape(single_well_setup)
    report = ldp_convergence(p, land, [0.05, 0.01, 0.005, 0.003, 0.002, 0.001], n=8192)
    errors = [row.sup_error for row in report.rows]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert report.final_error <= 0.05


def test_spectral_derivative():
    xs = np.arange(256) / 256
    derivative = spectral_derivative(np.sin(2 * np.pi * xs) + 0.5 * np.cos(6 * np.pi * xs))
    expected = 2 * np.pi * np.cos(2 * np.pi * xs) - 3 * np.pi * np.sin(6 * np.pi * xs)
    assert np.allclose(derivative, expected, atol=1e-10)


def test_steady_flux_is_constant_with_the_right_sign(single_well, double_well):
    tilted = steady_flux(single_well, 0.2, 2048)
    assert tilted.expected_sign == 1
    assert np.sign(tilted.mean) == 1
    assert tilted.relative_deviation <= 1e-4

    balanced = steady_flux(double_well, 0.2, 2048)
    assert balanced.expected_sign == 0
    assert balanced.relative_deviation <= 1e-4
    assert abs(balanced.mean) <= 1e-4


def test_single_well_has_no_chain(single_well_setup):
    _, cps, _ = single_well_setup
    with pytest.raises(SingleStateChain):
        chain_generator(cps, 0.05)


def test_three_well_chain_exponents(three_well_setup):
    _, cps, bt = three_well_setup
    eps = 0.05
    model = chain_generator(cps, eps)
    assert model.k == 3
    assert np.allclose(np.sum(model.Q, axis=1), 0.0)
    stationary = chain_stationary(model)
    assert stationary.agreement <= 1e-10
    assert sum(stationary.nu_closed) == pytest.approx(1.0)
    fw = np.array(boundary_values_fw(bt).minima_values)
    expected = fw - fw.min()
    assert np.max(np.abs(np.array(stationary.normalized_exponents) - expected)) <= eps * math.log(3) + 0.01


def test_gth_matches_closed_form_on_random_rings(rng):
    for _ in range(100):
        k = int(rng.integers(2, 7))
        log_a = rng.uniform(-20.0, 0.0, size=k)
        log_b = rng.uniform(-20.0, 0.0, size=k)
        stationary = chain_stationary(_ring_model(log_a, log_b))
        assert stationary.agreement <= 1e-10


def test_two_state_chain_closed_form():
    # two wells: nu_1 (a_1 + b_1) = nu_2 (a_2 + b_2)
    log_a, log_b = [math.log(2.0), math.log(1.0)], [math.log(1.0), math.log(3.0)]
    weights = np.exp(closed_form_log_weights(log_a, log_b))
    assert weights[0] / weights[1] == pytest.approx(4.0 / 3.0)
    nu = gth_stationary(np.array(_ring_model(log_a, log_b).Q))
    assert nu[0] / nu[1] == pytest.approx(4.0 / 3.0)


def test_generator_rows_must_sum_to_zero():
    with pytest.raises(ValidationError):
        ChainModel(epsilon=0.1, a=[1.0, 1.0], b=[1.0, 1.0], log_a=[0.0, 0.0], log_b=[0.0, 0.0], Q=[[-1.0, 2.0], [2.0, -2.0]])
