# Import libraries
import logging
import math
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from common.config import get_settings
from common.errors import GridResolutionError, SchemeError, SingleStateChain
from common.types import (
    ChainModel,
    ChainStationary,
    CriticalPointSet,
    FluxReport,
    GridFunction,
    Landscape,
    LdpReport,
    LdpRow,
    Potential,
)
from services.curves import sample_curve
from services.potential import evaluate

logger = logging.getLogger(__name__)

# Rows of the sliding quadrature window processed at once.
WINDOW_CHUNK = 256
LDP_SLACK = 1.05


def _check_grid(eps: float, n: int) -> None:
    if eps <= 0:
        raise SchemeError(f"epsilon must be positive, got {eps}")
    if eps < get_settings().eps_floor:
        logger.warning(f"epsilon={eps:g} is below the quadrature floor {get_settings().eps_floor:g}")
    if n < 16 or n % 2:
        raise GridResolutionError(f"grid size must be even and at least 16, got {n}")
    if n < 8.0 / math.sqrt(eps):
        logger.warning(f"N={n} may not resolve boundary layers at epsilon={eps:g} (want N >= {8.0 / math.sqrt(eps):.0f})")


def simpson_weights(n: int) -> np.ndarray:
    """Composite Simpson weights for n (even) intervals of width 1/n."""
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return weights / (3.0 * n)


def log_invariant_measure(p: Potential, eps: float, n: int) -> GridFunction:
    """
    log π_ε on x_j = j/n, up to a constant.

    log π_ε(x) = -U(x)/ε + log ∫_x^{x+1} exp(U(y)/ε) dy, with the window
    integral taken by Simpson's rule in log-sum-exp form so nothing overflows.

    Args:
        p (Potential): The potential.
        eps (float): Noise strength.
        n (int): Even grid size.

    Returns:
        GridFunction: log π_ε shifted so its maximum is 0.
    """
    _check_grid(eps, n)
    scaled = evaluate(p, np.arange(2 * n + 1) / n) / eps
    weights = simpson_weights(n)
    windows = sliding_window_view(scaled, n + 1)[:n]
    log_window = np.empty(n)
    for lo in range(0, n, WINDOW_CHUNK):
        block = windows[lo : lo + WINDOW_CHUNK]
        log_window[lo : lo + WINDOW_CHUNK] = special.logsumexp(block, axis=1, b=weights)
    log_pi = log_window - scaled[:n]
    return GridFunction(values=log_pi - np.max(log_pi))


def invariant_density(p: Potential, eps: float, n: int) -> GridFunction:
    """π_ε on the grid, normalized to unit mass."""
    log_pi = log_invariant_measure(p, eps, n).values
    density = np.exp(log_pi)
    return GridFunction(values=density / np.mean(density))


def wkb(p: Potential, eps: float, n: int) -> GridFunction:
    """W_ε = -ε log π_ε shifted to minimum 0."""
    w = -eps * log_invariant_measure(p, eps, n).values
    return GridFunction(values=w - np.min(w))


def ldp_convergence(
    p: Potential,
    landscape: Landscape,
    eps_list: Sequence[float],
    n: int = 8192,
) -> LdpReport:
    """
    Sup-norm distance between W_ε and W* along a decreasing ε sweep.

    Args:
        p (Potential): The potential.
        landscape (Landscape): Landscape supplying W*.
        eps_list (Sequence[float]): Noise strengths, largest first.
        n (int): Grid size.

    Returns:
        LdpReport: Error per ε; ``decreasing`` allows 5% slack between neighbours.
    """
    xs = np.arange(n) / n
    wstar = sample_curve(landscape.Wstar, p, xs)
    rows = []
    for eps in eps_list:
        error = float(np.max(np.abs(wkb(p, eps, n).values - wstar)))
        logger.info(f"eps={eps:g}: sup |W_eps - W*| = {error:.4e}")
        rows.append(LdpRow(eps=eps, sup_error=error))
    decreasing = all(b.sup_error <= a.sup_error * LDP_SLACK for a, b in zip(rows, rows[1:]))
    return LdpReport(rows=rows, decreasing=decreasing, final_error=rows[-1].sup_error if rows else 0.0)


def spectral_derivative(values: np.ndarray) -> np.ndarray:
    """d/dx of a 1-periodic grid function via FFT."""
    n = values.size
    freqs = np.fft.rfftfreq(n, d=1.0 / n)
    spectrum = np.fft.rfft(values) * (2j * np.pi * freqs)
    if n % 2 == 0:
        spectrum[-1] = 0.0
    return np.fft.irfft(spectrum, n)


def flux_closed_form_sign(p: Potential, eps: float) -> int:
    """Sign of exp(-b/ε) - 1, where b is the energy drop per period."""
    if abs(p.tilt) <= get_settings().energy_tol:
        return 0
    return int(np.sign(np.expm1(np.clip(-p.tilt / eps, -700.0, 700.0))))


def steady_flux(p: Potential, eps: float, n: int) -> FluxReport:
    """
    J_ε = ε π_ε' + U' π_ε on the grid; it is constant in x and vanishes iff b = 0.

    Returns:
        FluxReport: Mean flux, deviation from constancy and the expected sign.
    """
    density = invariant_density(p, eps, n).values
    xs = np.arange(n) / n
    flux = eps * spectral_derivative(density) + evaluate(p, xs, 1) * density
    mean = float(np.mean(flux))
    deviation = float(np.max(np.abs(flux - mean)))
    scale = max(abs(mean), float(np.max(density)))
    return FluxReport(
        mean=mean,
        max_deviation=deviation,
        relative_deviation=deviation / scale,
        expected_sign=flux_closed_form_sign(p, eps),
    )


def chain_generator(cps: CriticalPointSet, eps: float) -> ChainModel:
    """
    Coarse-grained jump chain between the wells.

    Well i jumps right at rate a_i = exp(-(U_{i+1/2} - U_i)/ε) and left at
    rate b_i = exp(-(U_{i-1/2} - U_i)/ε); all prefactors are 1.

    Args:
        cps (CriticalPointSet): Critical points.
        eps (float): Noise strength.

    Returns:
        ChainModel: Rates (also in log form) and the cyclic generator Q.
    """
    k = cps.k
    if k < 2:
        raise SingleStateChain()
    if eps <= 0:
        raise SchemeError(f"epsilon must be positive, got {eps}")
    log_a = [-(cps.maxima[i + 1].value - cps.minima[i].value) / eps for i in range(k)]
    log_b = [-(cps.maxima[i].value - cps.minima[i].value) / eps for i in range(k)]
    a = np.exp(log_a)
    b = np.exp(log_b)
    q = np.zeros((k, k))
    for i in range(k):
        q[i, (i + 1) % k] += a[i]
        q[i, (i - 1) % k] += b[i]
        q[i, i] = -(a[i] + b[i])
    return ChainModel(epsilon=eps, a=a.tolist(), b=b.tolist(), log_a=log_a, log_b=log_b, Q=q.tolist())


def gth_stationary(q: np.ndarray) -> np.ndarray:
    """
    Stationary vector of a generator by Grassmann-Taksar-Heyman elimination.

    Only off-diagonal rates enter, so no subtraction ever happens and every
    entry is computed to high relative accuracy.
    """
    a = np.array(q, dtype=float)
    n = a.shape[0]
    for m in range(n - 1, 0, -1):
        total = np.sum(a[m, :m])
        a[:m, m] /= total
        a[:m, :m] += np.outer(a[:m, m], a[m, :m])
    nu = np.zeros(n)
    nu[0] = 1.0
    for j in range(1, n):
        nu[j] = np.dot(nu[:j], a[:j, j])
    return nu / np.sum(nu)


def closed_form_log_weights(log_a: Sequence[float], log_b: Sequence[float]) -> np.ndarray:
    """
    log ν_i (unnormalized) from the spanning-tree sum on the ring.

    ν_i = Σ_{j=i}^{i+k-1} Π_{m=i+1}^{j} b_m · Π_{m=j+1}^{i+k-1} a_m, indices mod k.
    """
    k = len(log_a)
    log_a = np.asarray(log_a)
    log_b = np.asarray(log_b)
    weights = np.empty(k)
    for i in range(k):
        terms = []
        for j in range(i, i + k):
            left = sum(log_b[m % k] for m in range(i + 1, j + 1))
            right = sum(log_a[m % k] for m in range(j + 1, i + k))
            terms.append(left + right)
        weights[i] = special.logsumexp(terms)
    return weights


def chain_stationary(cm: ChainModel) -> ChainStationary:
    """
    Stationary distribution of the well chain, numerically and in closed form.

    Returns:
        ChainStationary: Both vectors, their worst relative disagreement and
            the exponents -ε log ν_i (raw and relative to the largest entry).
    """
    log_rates = np.concatenate([cm.log_a, cm.log_b])
    scale = float(np.max(log_rates))
    k = cm.k
    q = np.zeros((k, k))
    for i in range(k):
        q[i, (i + 1) % k] += math.exp(cm.log_a[i] - scale)
        q[i, (i - 1) % k] += math.exp(cm.log_b[i] - scale)
        q[i, i] = -(math.exp(cm.log_a[i] - scale) + math.exp(cm.log_b[i] - scale))
    nu_numeric = gth_stationary(q)

    log_closed = closed_form_log_weights(cm.log_a, cm.log_b)
    log_closed -= special.logsumexp(log_closed)
    nu_closed = np.exp(log_closed)
    agreement = float(np.max(np.abs(nu_numeric - nu_closed) / nu_closed))
    if agreement > 1e-10:
        logger.warning(f"Closed-form and numerical stationary vectors differ by {agreement:.3e}")

    exponents = -cm.epsilon * log_closed
    return ChainStationary(
        nu_numeric=nu_numeric.tolist(),
        nu_closed=nu_closed.tolist(),
        exponents=exponents.tolist(),
        normalized_exponents=(exponents - np.min(exponents)).tolist(),
        agreement=agreement,
    )
