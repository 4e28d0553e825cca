"""Joint power-distance optimization for variable-distance devices.

Implements the single-device optimality condition ln(1+xi)(1+xi)/xi =
2 + d*k_abs, the two operating regimes (rate floor slack vs. binding), the
maximum feasible distance for a given rate floor, and the iterative
distance-power fixed point with exponential smoothing that drives the
proposed allocation strategy.

All per-device arithmetic is done in log space where absorption exponents
could overflow; devices parked deep inside an absorption peak simply end up
with very short distances instead of NaNs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import D_MIN, LinkParams, log_inverse_gain

_LN2 = math.log(2.0)


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance."""


class InfeasibleError(RuntimeError):
    """Rate requirements cannot be met; `devices` lists the offenders."""

    def __init__(self, message: str, devices=()):
        super().__init__(message)
        self.devices = tuple(devices)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls for the fixed-point solver.

    eps is the stop tolerance on the change of total transport capacity per
    inner iteration; with eps_relative=True it is scaled by max(1, TC), since
    an absolute 1e-6 m*bps would never trigger at realistic TC magnitudes.
    """

    alpha: float = 0.7
    eps: float = 1e-6
    eps_relative: bool = True
    m_out: int = 5
    d_init: float = 10.0
    max_inner: int = 500
    d_min: float = D_MIN
    bisect_rel_tol: float = 1e-10
    enum_cap: int = 10_000_000
    seed: int = 0


class Regime(enum.Enum):
    TC_MAXIMIZED = "tc_maximized"
    DISTANCE_MAXIMIZED = "distance_maximized"


@dataclass(frozen=True)
class RegimeResult:
    regime: Regime
    d_opt: float
    snr_opt: float
    spectral_eff_opt: float


def stationarity_lhs(xi):
    """ln(1+xi)(1+xi)/xi: strictly increasing on (0, inf), -> 1 as xi -> 0."""
    xi = np.asarray(xi, dtype=float)
    return np.log1p(xi) * (1.0 + xi) / xi


def solve_stationarity_snr(absorption_exponent, rel_tol: float = 1e-12):
    """The unique xi > 0 with ln(1+xi)(1+xi)/xi = 2 + absorption_exponent.

    Vectorized bisection in log(xi); accepts a scalar or an array of
    nonnegative absorption exponents d*k_abs.
    """
    a = np.asarray(absorption_exponent, dtype=float)
    if np.any(a < 0):
        raise ValueError("absorption exponent must be >= 0")
    target = 2.0 + a
    lo = np.full(a.shape, math.log(1e-9))
    hi = np.full(a.shape, math.log(1e12))
    # Extend the upper bracket for extreme exponents (LHS ~ ln(xi) there);
    # past the float ceiling the solution is clamped, which keeps callers'
    # monotone bracketing intact for physically absurd exponents.
    while True:
        short = (hi < 690.0) & (stationarity_lhs(np.exp(hi)) < target)
        if not short.any():
            break
        hi = np.where(short, np.minimum(hi + 50.0, 690.0), hi)
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        below = stationarity_lhs(np.exp(mid)) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) <= rel_tol:
            break
    xi = np.exp(0.5 * (lo + hi))
    return float(xi) if np.isscalar(absorption_exponent) else xi


def _log_snr(log_power, frequency, k_abs, distance, bandwidth, params):
    return log_power - log_inverse_gain(frequency, k_abs, distance, bandwidth, params)


def optimal_distance_pair(
    power: float,
    frequency: float,
    k_abs: float,
    bandwidth: float,
    params: LinkParams,
    residual_tol: float = 1e-6,
) -> tuple[float, float]:
    """Distance and SNR jointly satisfying the stationarity condition and
    the SNR definition at the given power (the unconstrained per-device
    transport-capacity optimum).
    """
    if not power > 0:
        raise ValueError("power must be > 0")
    log_p = math.log(power)

    def gap(log_d):
        d = math.exp(log_d)
        xi_link = _log_snr(log_p, frequency, k_abs, d, bandwidth, params)
        xi_stat = math.log(solve_stationarity_snr(k_abs * d))
        return xi_link - xi_stat  # strictly decreasing in d

    lo, hi = math.log(1e-8), math.log(1e3)
    while gap(hi) > 0:
        hi += math.log(10.0)
        if hi > math.log(1e12):
            raise ConvergenceError("optimal distance bracket expansion failed")
    log_d = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
    d = math.exp(log_d)
    xi = math.exp(_log_snr(log_p, frequency, k_abs, d, bandwidth, params))
    residual = abs(stationarity_lhs(xi) - (2.0 + k_abs * d))
    if residual > residual_tol:
        raise ConvergenceError(f"stationarity residual {residual:.3e} above tolerance")
    return d, xi


def max_distance(
    power: float,
    rate_req: float,
    frequency: float,
    k_abs: float,
    bandwidth: float,
    params: LinkParams,
    d_min: float = D_MIN,
    rel_tol: float = 1e-10,
) -> float:
    """Largest distance at which the link still meets its rate floor.

    Solves SNR(d) = 2^(rate_req/W) - 1; the SNR is strictly decreasing in d.
    """
    if not power > 0 or not rate_req > 0:
        raise ValueError("power and rate_req must be > 0")
    log_xi_req = math.log(math.expm1(rate_req / bandwidth * _LN2))
    log_p = math.log(power)

    def gap(log_d):
        return _log_snr(log_p, frequency, k_abs, math.exp(log_d), bandwidth, params) - log_xi_req

    lo = math.log(d_min)
    if gap(lo) < 0:
        raise InfeasibleError(
            f"rate floor {rate_req:.3e} bps unreachable even at d_min={d_min:g} m"
        )
    hi = lo + math.log(10.0)
    while gap(hi) > 0:
        hi += math.log(10.0)
    log_d = brentq(gap, lo, hi, xtol=rel_tol, rtol=rel_tol, maxiter=200)
    return math.exp(log_d)


def classify_regime(
    power: float,
    rate_req: float,
    frequency: float,
    k_abs: float,
    bandwidth: float,
    params: LinkParams,
    d_min: float = D_MIN,
) -> RegimeResult:
    """Pick the operating regime for one device at a fixed power.

    Rate floor below the spectral efficiency of the unconstrained optimum:
    use the optimum distance. Otherwise push the distance out to the largest
    value that meets the floor exactly.
    """
    d_o, xi_o = optimal_distance_pair(power, frequency, k_abs, bandwidth, params)
    eta_o = math.log1p(xi_o) / _LN2
    if rate_req <= bandwidth * eta_o:
        return RegimeResult(Regime.TC_MAXIMIZED, d_o, xi_o, eta_o)
    d_max = max_distance(power, rate_req, frequency, k_abs, bandwidth, params, d_min)
    xi_req = math.expm1(rate_req / bandwidth * _LN2)
    return RegimeResult(Regime.DISTANCE_MAXIMIZED, d_max, xi_req, rate_req / bandwidth)


def _log_power_coeff(log_xi, frequencies, k_abs, distances, bandwidth, params):
    """ln(c_k) where p_k = c_k * d_k^2 for SNR xi_k with the absorption loss
    frozen at the current distances."""
    sigma2 = params.n0 * bandwidth
    return (
        log_xi
        + math.log(sigma2 / (params.gt_linear * params.gr_linear))
        + 2.0 * np.log(4.0 * np.pi * frequencies / params.c)
        + k_abs * distances
    )


def thm1_distance_update(
    distances,
    xi,
    frequencies,
    k_abs,
    bandwidth: float,
    params: LinkParams,
    nu: float | None = None,
) -> tuple[np.ndarray, float]:
    """Optimal next distances for frozen absorption losses and SNR targets.

    d_hat_k = log2(1+xi_k) / (2 nu c_k) with p_k = c_k d_k^2; when `nu` is
    None it is set so the implied total power meets the budget exactly
    (total power scales as 1/nu^2, so the dual has a closed form).
    """
    d = np.asarray(distances, dtype=float)
    xi = np.asarray(xi, dtype=float)
    f = np.asarray(frequencies, dtype=float)
    k = np.asarray(k_abs, dtype=float)
    log_xi = np.log(xi)
    log_c = _log_power_coeff(log_xi, f, k, d, bandwidth, params)
    log_num = np.log(np.log1p(xi) / _LN2) - math.log(2.0)  # ln(log2(1+xi)/2)
    if nu is None:
        # sum_k c_k (log2(1+xi_k)/(2 nu c_k))^2 = P_T  =>  nu^2 = sum/(P_T)
        nu = math.sqrt(np.exp(2.0 * log_num - log_c).sum() / params.p_total)
    d_hat = np.exp(log_num - log_c - math.log(nu))
    return d_hat, nu


@dataclass
class IterState:
    """Converged output of the inner power-distance loop."""

    distances: np.ndarray
    powers: np.ndarray
    snrs: np.ndarray
    rates: np.ndarray
    regimes: list[Regime]
    tc: float
    iterations: int
    tc_history: list[float] = field(default_factory=list)


def _pin_masks(distances, k_abs, rate_reqs, bandwidth):
    """Devices whose rate floor exceeds the stationary spectral efficiency."""
    xi_tilde = solve_stationarity_snr(k_abs * distances)
    eta_tilde = np.log1p(xi_tilde) / _LN2
    pinned = np.asarray(rate_reqs) > bandwidth * eta_tilde
    return pinned, xi_tilde


def _log_pinned_power(scale, d_pin, f_pin, k_pin, log_xi_req, bandwidth, params):
    d = scale * d_pin
    sigma2 = params.n0 * bandwidth
    return (
        log_xi_req
        + math.log(sigma2 / (params.gt_linear * params.gr_linear))
        + 2.0 * np.log(4.0 * np.pi * f_pin * d / params.c)
        + k_pin * d
    )


def _enforce_rate_floors(d, log_p, frequencies, k_abs, rate_reqs, bandwidth, params):
    """Final feasibility repair: devices with binding floors get powers set
    so their SNR hits the floor exactly at their distance, with the pinned
    distances rescaled by a common factor to keep the budget exact.

    Returns (distances, powers, snrs, rates, pinned mask).
    """
    n = len(d)
    log_xi_req = np.where(
        rate_reqs > 0, np.log(np.expm1(np.maximum(rate_reqs, 1e-300) / bandwidth * _LN2)), -np.inf
    )
    pinned, _ = _pin_masks(d, k_abs, rate_reqs, bandwidth)
    for _ in range(n + 1):
        free = ~pinned
        p_free = np.exp(log_p[free])
        budget_pin = params.p_total - p_free.sum()
        d_new = d.copy()
        log_p_new = log_p.copy()
        if pinned.any():
            if budget_pin <= 0:
                raise InfeasibleError(
                    "rate floors leave no power budget", np.flatnonzero(pinned)
                )
            d_pin = d[pinned]
            f_pin = np.asarray(frequencies)[pinned]
            k_pin = np.asarray(k_abs)[pinned]
            lxr = log_xi_req[pinned]

            def excess(log_s):
                lp = _log_pinned_power(
                    math.exp(log_s), d_pin, f_pin, k_pin, lxr, bandwidth, params
                )
                return np.exp(lp).sum() - budget_pin  # increasing in s

            lo, hi = math.log(1e-9), 0.0
            if excess(lo) > 0:
                raise InfeasibleError(
                    "rate floors unreachable within the power budget",
                    np.flatnonzero(pinned),
                )
            while excess(hi) < 0:
                hi += math.log(2.0)
                if hi > 50:
                    raise ConvergenceError("rate-floor repair bracket expansion failed")
            log_s = brentq(excess, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=300)
            s = math.exp(log_s)
            d_new[pinned] = s * d_pin
            log_p_new[pinned] = _log_pinned_power(
                s, d_pin, f_pin, k_pin, lxr, bandwidth, params
            )
        snrs = np.exp(
            log_p_new - log_inverse_gain(frequencies, k_abs, d_new, bandwidth, params)
        )
        snrs[pinned] = np.exp(log_xi_req[pinned])  # exact by construction
        rates = bandwidth * np.log1p(snrs) / _LN2
        rates[pinned] = np.asarray(rate_reqs, dtype=float)[pinned]
        violated = free & (rates < np.asarray(rate_reqs) * (1.0 - 1e-12))
        if not violated.any():
            return d_new, np.exp(log_p_new), snrs, rates, pinned
        pinned = pinned | violated
    raise ConvergenceError("rate-floor repair did not stabilize")


def iterate_power_distance(
    frequencies,
    k_abs,
    rate_reqs,
    bandwidth: float,
    params: LinkParams,
    config: SolverConfig = SolverConfig(),
    d0=None,
    p0=None,
) -> IterState:
    """Run the smoothed distance-power fixed point to convergence.

    Per iteration: freeze the absorption loss at the current distances, pick
    each device's SNR target (stationary value, or the rate floor's SNR when
    the floor binds), solve the budget dual for the proposed distances,
    smooth, and recompute powers. Stops when the total transport capacity
    changes by at most eps (relative by default). On termination every rate
    floor is enforced exactly via a final repair step.
    """
    f = np.asarray(frequencies, dtype=float)
    k = np.asarray(k_abs, dtype=float)
    req = np.asarray(rate_reqs, dtype=float)
    n = len(f)
    if np.any(req < 0):
        raise ValueError("rate requirements must be >= 0")
    d = np.full(n, float(config.d_init)) if d0 is None else np.asarray(d0, dtype=float).copy()
    # p0 is accepted for interface symmetry with the outer loop but has no
    # effect: powers are recomputed from the SNR targets every iteration.
    del p0

    log_xi_req = np.where(req > 0, np.log(np.expm1(np.maximum(req, 1e-300) / bandwidth * _LN2)), -np.inf)
    tc_prev = None
    tc_history: list[float] = []
    alpha = config.alpha
    for it in range(1, config.max_inner + 1):
        pinned, xi_tilde = _pin_masks(d, k, req, bandwidth)
        xi = np.where(pinned, np.exp(log_xi_req), xi_tilde)
        d_hat, _nu = thm1_distance_update(d, xi, f, k, bandwidth, params)
        d_new = alpha * d + (1.0 - alpha) * d_hat
        log_c = _log_power_coeff(np.log(xi), f, k, d, bandwidth, params)
        log_p = log_c + 2.0 * np.log(d_new)
        # Smoothing can transiently overshoot the budget the dual enforced
        # for d_hat; scale the reported powers back onto it. The distance
        # dynamics are unaffected and restore equality at the fixed point.
        total = np.exp(log_p).sum()
        if total > params.p_total:
            log_p += math.log(params.p_total / total)
        # Actual SNR at the new distances and reported powers.
        snr_act = np.exp(
            log_p - log_inverse_gain(f, k, d_new, bandwidth, params)
        )
        rates = bandwidth * np.log1p(snr_act) / _LN2
        tc = float((d_new * rates).sum())
        tc_history.append(tc)
        d = d_new
        if tc_prev is not None:
            tol = config.eps * max(1.0, abs(tc)) if config.eps_relative else config.eps
            if abs(tc - tc_prev) <= tol:
                break
        tc_prev = tc
    else:
        raise ConvergenceError(
            f"no convergence within {config.max_inner} inner iterations"
        )

    d, p, snrs, rates, pinned = _enforce_rate_floors(
        d, log_p, f, k, req, bandwidth, params
    )
    regimes = [
        Regime.DISTANCE_MAXIMIZED if flag else Regime.TC_MAXIMIZED for flag in pinned
    ]
    return IterState(
        distances=d,
        powers=p,
        snrs=snrs,
        rates=rates,
        regimes=regimes,
        tc=float((d * rates).sum()),
        iterations=it,
        tc_history=tc_history,
    )
