# Import libraries
import logging
import math
from typing import Iterator, Sequence

import numpy as np
from scipy import sparse, special
from scipy.sparse import linalg as sparse_linalg

from common.errors import SchemeError
from common.types import (
    ExchangeReport,
    ExchangeRow,
    GridFunction,
    Landscape,
    Potential,
    Scheme,
    SchemeConfig,
)
from services.curves import sample_curve
from services.potential import evaluate

logger = logging.getLogger(__name__)

MAX_HALVINGS = 20
TIME_GAP = 1e-14


def _one_sided_slopes(u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    return (u - np.roll(u, 1)) / h, (np.roll(u, -1) - u) / h


def _potential_differences(p: Potential, x: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided differences a± of U at every node; the skew shift enters at the wrap."""
    potential = evaluate(p, x[0] + np.arange(-1, x.size + 1) / x.size)
    slopes = np.diff(potential) / h
    return slopes[:-1], slopes[1:]


def _lax_friedrichs_rates(u: np.ndarray, h: float, du: np.ndarray, alpha: float | None) -> tuple[np.ndarray, np.ndarray]:
    p_minus, p_plus = _one_sided_slopes(u, h)
    speed = np.maximum(np.abs(2.0 * p_minus - du), np.abs(2.0 * p_plus - du))
    needed = np.maximum(speed, np.maximum(np.roll(speed, 1), np.roll(speed, -1)))
    if alpha is None:
        local = needed
    elif alpha < float(np.max(needed)) - 1e-12:
        raise SchemeError(f"alpha={alpha:g} is below the wave speed {float(np.max(needed)):g}; the scheme is not monotone")
    else:
        local = np.full_like(needed, alpha)
    mean = 0.5 * (p_minus + p_plus)
    return mean * (mean - du) - 0.5 * local * (p_plus - p_minus), local


def _godunov_rates(
    u: np.ndarray, h: float, du: np.ndarray, a_minus: np.ndarray, a_plus: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    p_minus, p_plus = _one_sided_slopes(u, h)
    rising = np.maximum(p_minus, 0.5 * a_minus)
    falling = np.minimum(p_plus, 0.5 * a_plus)
    values = np.maximum.reduce([rising * (rising - a_minus), falling * (falling - a_plus), -0.25 * du * du])
    speed = np.maximum(np.abs(2.0 * p_minus - a_minus), np.abs(2.0 * p_plus - a_plus))
    return values, np.maximum(speed, np.abs(du))


def lax_friedrichs_hamiltonian(p: Potential, x: np.ndarray, u: np.ndarray, h: float, alpha: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Local Lax-Friedrichs numerical Hamiltonian on a periodic grid.

    Ĥ_j = H((p⁻ + p⁺)/2, x_j) - α_j (p⁺ - p⁻)/2, where α_j bounds |∂H/∂p| = |2p - U'|
    over both one-sided slopes at x_j and its two neighbours.

    Args:
        alpha (float | None): Fixed dissipation used at every node instead;
            it must dominate every local bound.

    Returns:
        tuple[np.ndarray, np.ndarray]: Ĥ at every node and the α used there.
    """
    return _lax_friedrichs_rates(u, h, evaluate(p, x, 1), alpha)


def godunov_hamiltonian(p: Potential, x: np.ndarray, u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Godunov numerical Hamiltonian with U' replaced by one-sided differences of U.

    For H_a(q) = q (q - a), convex with minimum at a/2,
    Ĥ_j = max(H_{a⁻}(max(p⁻, a⁻/2)), H_{a⁺}(min(p⁺, a⁺/2)), -U'(x_j)²/4),
    a± the one-sided differences of U at x_j. Grid samples of U + c and of
    constants are stationary, including across a corner between them; a
    smooth extremum of U strictly between two nodes still moves by O(h²) per
    unit time.

    Returns:
        tuple[np.ndarray, np.ndarray]: Ĥ at every node and the local bound on |∂H/∂p|.
    """
    return _godunov_rates(u, h, evaluate(p, x, 1), *_potential_differences(p, x, h))


def _hje_steps(
    u0: GridFunction,
    p: Potential,
    cfg: SchemeConfig,
    stops: Sequence[float],
    alpha: float | None,
) -> Iterator[GridFunction]:
    u = u0.values.copy()
    x = u0.grid
    h = 1.0 / u0.n
    du = evaluate(p, x, 1)
    if cfg.scheme == Scheme.GODUNOV:
        a_minus, a_plus = _potential_differences(p, x, h)

        def rates_of(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return _godunov_rates(v, h, du, a_minus, a_plus)

    else:

        def rates_of(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return _lax_friedrichs_rates(v, h, du, alpha)

    t = 0.0
    warned = False
    for stop in stops:
        while stop - t > TIME_GAP:
            rates, bound = rates_of(u)
            stable = cfg.cfl * h / max(float(np.max(bound)), 1e-12)
            dt = stable
            if cfg.dt is not None:
                dt = cfg.dt
                if cfg.dt > stable and not warned:
                    logger.warning(f"dt={cfg.dt:g} violates the CFL bound {stable:.3e}; shrinking the step")
                    warned = True
                dt = min(dt, stable)
            dt = min(dt, stop - t)
            u = u - dt * rates
            t += dt
        yield GridFunction(values=u.copy(), start=u0.start, time=stop)


def evolve_hje(u0: GridFunction, p: Potential, cfg: SchemeConfig, alpha: float | None = None) -> GridFunction:
    """
    Evolve ∂_t u + H(∂_x u, x) = 0 to time cfg.T.

    Args:
        u0 (GridFunction): Periodic initial data.
        p (Potential): Potential with derivatives.
        cfg (SchemeConfig): Scheme, CFL number, final time and optional fixed step.
        alpha (float | None): Fixed Lax-Friedrichs dissipation; local bounds are
            recomputed every step when None. Ignored by the Godunov scheme.

    Returns:
        GridFunction: u(·, T).
    """
    return next(_hje_steps(u0, p, cfg, [cfg.T], alpha))


def evolve_hje_snapshots(
    u0: GridFunction,
    p: Potential,
    cfg: SchemeConfig,
    times: Sequence[float],
    alpha: float | None = None,
) -> list[GridFunction]:
    """Snapshots of the HJE evolution at the requested (sorted) times."""
    stops = sorted(float(t) for t in times)
    if stops and stops[0] < 0:
        raise SchemeError("snapshot times must be non-negative")
    return list(_hje_steps(u0, p, cfg, stops, alpha))


def bernoulli(z: np.ndarray) -> np.ndarray:
    """B(z) = z / (e^z - 1), with B(0) = 1."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-10
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        values = z / np.expm1(np.where(small, 1.0, z))
    return np.where(small, 1.0 - 0.5 * z, values)


def fokker_planck_operator(p: Potential, eps: float, n: int, start: float = 0.0) -> sparse.csc_matrix:
    """
    Finite-volume generator of ∂_t ρ = ∂_x(ε ∂_x ρ + U' ρ) on a periodic grid.

    Interface fluxes are exponentially fitted:
    J_{j+1/2} = (ε/h) [B(-δ_j) ρ_{j+1} - B(δ_j) ρ_j], δ_j = (U_{j+1} - U_j)/ε,
    where U_n is taken one period on, so the tilt enters at the wrap.
    """
    h = 1.0 / n
    u = evaluate(p, start + np.arange(n + 1) / n)
    delta = np.diff(u) / eps
    forward = eps / h * bernoulli(-delta)
    backward = eps / h * bernoulli(delta)
    index = np.arange(n)
    up = (index + 1) % n
    down = (index - 1) % n
    rows = np.concatenate([index, index, index])
    cols = np.concatenate([up, index, down])
    data = np.concatenate([forward, -(backward + np.roll(forward, 1)), np.roll(backward, 1)]) / h
    return sparse.csc_matrix((data, (rows, cols)), shape=(n, n))


def evolve_fokker_planck(rho0: GridFunction, p: Potential, cfg: SchemeConfig) -> GridFunction:
    """
    Implicit-Euler Fokker-Planck evolution to cfg.T.

    Steps default to Δt = Δx (uniformly adjusted to land on T); the system is
    factored once. Mass is conserved by construction, and a negative entry
    halves the step and refactors.

    Args:
        rho0 (GridFunction): Non-negative initial density.
        p (Potential): The potential.
        cfg (SchemeConfig): Must carry epsilon.

    Returns:
        GridFunction: ρ(·, T).
    """
    if cfg.epsilon is None:
        raise SchemeError("Fokker-Planck evolution needs epsilon")
    if np.any(rho0.values < 0):
        raise SchemeError("initial density must be non-negative")
    n = rho0.n
    operator = fokker_planck_operator(p, cfg.epsilon, n, rho0.start)
    identity = sparse.identity(n, format="csc")
    target = cfg.dt if cfg.dt is not None else 1.0 / n
    steps = max(1, math.ceil(cfg.T / target - 1e-12)) if cfg.T > 0 else 0

    rho = rho0.values.copy()
    for _ in range(MAX_HALVINGS):
        if steps == 0:
            break
        dt = cfg.T / steps
        solver = sparse_linalg.splu(identity - dt * operator)
        trial = rho0.values.copy()
        ok = True
        for _ in range(steps):
            trial = solver.solve(trial)
            if np.min(trial) < -1e-14 * np.max(np.abs(trial)):
                ok = False
                break
        if ok:
            rho = trial
            break
        steps *= 2
        logger.warning(f"Negative density encountered; retrying with {steps} steps")
    else:
        raise SchemeError("positivity could not be restored by step halving")

    mass0 = float(np.mean(rho0.values))
    drift = abs(float(np.mean(rho)) - mass0)
    logger.debug(f"Fokker-Planck run: {steps} steps, mass drift {drift:.2e}")
    return GridFunction(values=np.maximum(rho, 0.0), start=rho0.start, time=cfg.T)


def gibbs_initial_density(p: Potential, landscape: Landscape, eps: float, n: int) -> GridFunction:
    """ρ₀ ∝ exp(-W*/ε) on x_j = j/n with unit mass."""
    exponent = -sample_curve(landscape.Wstar, p, np.arange(n) / n) / eps
    log_rho = exponent - special.logsumexp(exponent) + math.log(n)
    return GridFunction(values=np.exp(log_rho))


def sup_distance(values: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(values - reference)))


def exchange_limits_experiment(
    p: Potential,
    landscape: Landscape,
    eps_list: Sequence[float],
    T: float = 1.0,
    n: int = 2000,
    cfl: float = 0.45,
) -> ExchangeReport:
    """
    Compare the zero-noise limit of Fokker-Planck with the HJE evolution.

    Path A evolves ρ₀ ∝ exp(-W*/ε) to T and reads -ε log ρ (minimum shifted
    to 0). Path B evolves W* itself with the HJE scheme. Both are measured
    against W* in sup norm.

    Args:
        p (Potential): Potential with derivatives.
        landscape (Landscape): Landscape supplying W*.
        eps_list (Sequence[float]): Noise strengths.
        T (float): Final time.
        n (int): Grid size.
        cfl (float): CFL number of the HJE run.

    Returns:
        ExchangeReport: One row per ε.
    """
    xs = np.arange(n) / n
    wstar = sample_curve(landscape.Wstar, p, xs)
    hje = evolve_hje(GridFunction(values=wstar), p, SchemeConfig(n=n, cfl=cfl, T=T))
    hje_distance = sup_distance(hje.values, wstar)

    rows = []
    for eps in eps_list:
        cfg = SchemeConfig(n=n, cfl=cfl, T=T, epsilon=eps)
        rho = evolve_fokker_planck(gibbs_initial_density(p, landscape, eps, n), p, cfg)
        with np.errstate(divide="ignore"):
            w_eps = -eps * np.log(rho.values)
        w_eps -= np.min(w_eps)
        rows.append(ExchangeRow(eps=eps, fokker_planck_distance=sup_distance(w_eps, wstar), hje_distance=hje_distance))
        logger.info(f"Exchange experiment eps={eps:g}: FP {rows[-1].fokker_planck_distance:.4f}, HJE {hje_distance:.4f}")
    return ExchangeReport(T=T, n=n, rows=rows)
