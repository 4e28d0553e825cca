"""End-to-end allocation strategies.

Fixed-distance pipelines (transport-capacity and plain sum-rate objectives:
Hungarian assignment at equal power, then water-filling) and the
variable-distance strategies: the proposed iterative TC maximization, the
distance-maximization and non-adaptive benchmarks, and an exhaustive
assignment variant used as the small-instance oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .assignment import (
    EnumerationCapError,
    check_assignment,
    exhaustive_assign,
    hungarian_assign,
)
from .channel import BandPlan, LinkParams, inverse_gain, log_inverse_gain
from .distance_power import (
    InfeasibleError,
    IterState,
    Regime,
    SolverConfig,
    classify_regime,
    iterate_power_distance,
)
from .waterfill import waterfill

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DeviceSpec:
    """Per-device requirement: minimum rate (bps) and, for the fixed-distance
    strategies, the given transmitter-device distance (m)."""

    rate_req: float = 0.0
    fixed_distance: float | None = None

    def __post_init__(self):
        if self.rate_req < 0:
            raise ValueError("rate_req must be >= 0")
        if self.fixed_distance is not None and not self.fixed_distance > 0:
            raise ValueError("fixed_distance must be > 0")


@dataclass(frozen=True)
class Scenario:
    band: BandPlan
    params: LinkParams
    devices: tuple[DeviceSpec, ...]
    config: SolverConfig = SolverConfig()

    def __post_init__(self):
        if not self.devices:
            raise ValueError("scenario needs at least one device")
        if len(self.devices) > self.band.n:
            raise ValueError(
                f"{len(self.devices)} devices exceed {self.band.n} subwindows"
            )

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def rate_reqs(self) -> np.ndarray:
        return np.array([dev.rate_req for dev in self.devices])

    @property
    def fixed_distances(self) -> np.ndarray:
        if any(dev.fixed_distance is None for dev in self.devices):
            raise ValueError("every device needs a fixed distance for this strategy")
        return np.array([dev.fixed_distance for dev in self.devices])


@dataclass
class Allocation:
    """Solver output: per-device subwindow/power/distance/rate plus totals."""

    strategy: str
    subwindows: np.ndarray
    powers: np.ndarray
    distances: np.ndarray
    rates: np.ndarray
    regimes: list[str]
    iterations: int = 0

    @property
    def tc_per_device(self) -> np.ndarray:
        return self.distances * self.rates

    @property
    def tc(self) -> float:
        return float(self.tc_per_device.sum())

    @property
    def sum_rate(self) -> float:
        return float(self.rates.sum())

    @property
    def power_used(self) -> float:
        return float(self.powers.sum())


def audit_allocation(
    alloc: Allocation, scenario: Scenario, check_rate_floors: bool
) -> None:
    """Feasibility audit: assignment validity, power budget, rate floors."""
    check_assignment(alloc.subwindows, scenario.band.n)
    p_total = scenario.params.p_total
    if alloc.power_used > p_total * (1.0 + 1e-9):
        raise InfeasibleError(
            f"power budget violated: {alloc.power_used:.6e} > {p_total:.6e}"
        )
    if np.any(alloc.powers < 0) or np.any(alloc.distances <= 0):
        raise InfeasibleError("negative power or non-positive distance in allocation")
    if check_rate_floors:
        floors = scenario.rate_reqs
        bad = np.flatnonzero(alloc.rates < floors * (1.0 - 1e-9))
        if bad.size:
            raise InfeasibleError("rate floors violated", bad)


def _rate_matrix(scenario: Scenario, distances, powers) -> np.ndarray:
    """Per-(device, subwindow) rates (bps) at the given distances/powers."""
    band = scenario.band
    d = np.asarray(distances, dtype=float)[:, None]
    p = np.asarray(powers, dtype=float)[:, None]
    log_ginv = log_inverse_gain(
        band.frequencies[None, :], band.k_abs[None, :], d, band.bandwidth, scenario.params
    )
    with np.errstate(over="ignore"):
        snr = np.where(p > 0, np.exp(np.log(np.maximum(p, 1e-300)) - log_ginv), 0.0)
    return band.bandwidth * np.log1p(snr) / _LN2


def _assigned_rates(scenario: Scenario, n_of_k, distances, powers) -> np.ndarray:
    band = scenario.band
    f = band.frequencies[n_of_k]
    k = band.k_abs[n_of_k]
    ginv = inverse_gain(f, k, distances, band.bandwidth, scenario.params)
    snr = np.where(np.isfinite(ginv), np.asarray(powers) / ginv, 0.0)
    return band.bandwidth * np.log1p(snr) / _LN2


def _fixed_distance_pipeline(scenario: Scenario, weighted: bool, name: str) -> Allocation:
    d = scenario.fixed_distances
    n_dev = scenario.n_devices
    p_eq = np.full(n_dev, scenario.params.p_total / n_dev)
    rates = _rate_matrix(scenario, d, p_eq)
    payoff = d[:, None] * rates if weighted else rates
    n_of_k = hungarian_assign(payoff)
    band = scenario.band
    ginv = inverse_gain(
        band.frequencies[n_of_k], band.k_abs[n_of_k], d, band.bandwidth, scenario.params
    )
    weights = d if weighted else np.ones(n_dev)
    p = waterfill(weights, ginv, scenario.params.p_total)
    alloc = Allocation(
        strategy=name,
        subwindows=n_of_k,
        powers=p,
        distances=d.copy(),
        rates=_assigned_rates(scenario, n_of_k, d, p),
        regimes=["fixed"] * n_dev,
    )
    audit_allocation(alloc, scenario, check_rate_floors=False)
    return alloc


def fixed_distance_tc_max(scenario: Scenario) -> Allocation:
    """Two-stage TC maximization for given distances: Hungarian assignment
    on the rate-distance payoff at equal power, then distance-weighted
    water-filling."""
    return _fixed_distance_pipeline(scenario, weighted=True, name="tc_fixed")


def sum_rate_max(scenario: Scenario) -> Allocation:
    """Fixed-distance comparator: the same two-stage pipeline with unit
    weights, maximizing the stage-wise sum rate instead of the TC."""
    return _fixed_distance_pipeline(scenario, weighted=False, name="sum_rate")


def _alloc_from_state(
    scenario: Scenario, name: str, n_of_k: np.ndarray, state: IterState, iterations: int
) -> Allocation:
    return Allocation(
        strategy=name,
        subwindows=np.asarray(n_of_k, dtype=int).copy(),
        powers=state.powers.copy(),
        distances=state.distances.copy(),
        rates=state.rates.copy(),
        regimes=[r.value for r in state.regimes],
        iterations=iterations,
    )


def proposed_tc_max(scenario: Scenario) -> Allocation:
    """Iterative TC maximization with variable distances.

    Outer loop: rebuild the payoff at the current distance/power iterates and
    re-run the Hungarian assignment; inner loop: the smoothed distance-power
    fixed point. The best-TC iterate over all outer rounds is returned.
    """
    cfg = scenario.config
    band = scenario.band
    reqs = scenario.rate_reqs
    n_dev = scenario.n_devices
    d = np.full(n_dev, cfg.d_init)
    p = np.full(n_dev, scenario.params.p_total / n_dev)
    best: Allocation | None = None
    total_inner = 0
    for _ in range(cfg.m_out):
        payoff = d[:, None] * _rate_matrix(scenario, d, p)
        n_of_k = hungarian_assign(payoff)
        state = iterate_power_distance(
            band.frequencies[n_of_k],
            band.k_abs[n_of_k],
            reqs,
            band.bandwidth,
            scenario.params,
            cfg,
            d0=d,
            p0=p,
        )
        total_inner += state.iterations
        if best is None or state.tc > best.tc:
            best = _alloc_from_state(scenario, "proposed", n_of_k, state, total_inner)
        d, p = state.distances, state.powers
    best.iterations = total_inner
    audit_allocation(best, scenario, check_rate_floors=True)
    return best


def _greedy_min_pairing(rate_reqs, k_abs) -> np.ndarray:
    """Repeatedly match the smallest remaining rate floor with the smallest
    remaining absorption coefficient (ties toward the lowest index)."""
    dev_order = np.argsort(rate_reqs, kind="stable")
    sub_order = np.argsort(k_abs, kind="stable")
    n_of_k = np.empty(len(dev_order), dtype=int)
    n_of_k[dev_order] = sub_order[: len(dev_order)]
    return n_of_k


def distance_max_benchmark(scenario: Scenario) -> Allocation:
    """Sum-distance maximization benchmark.

    Greedy min-floor/min-absorption subwindow pairing, then the KKT solution
    of the sum-distance problem: each device's distance solves the
    stationarity equation for a common dual, powers follow from the pinned
    SNR requirement, and the dual is bisected onto the power budget. Every
    device's rate ends up exactly at its floor.
    """
    reqs = scenario.rate_reqs
    if np.any(reqs <= 0):
        raise ValueError("distance_max_benchmark requires rate_req > 0 for all devices")
    band = scenario.band
    params = scenario.params
    n_of_k = _greedy_min_pairing(reqs, band.k_abs)
    f = band.frequencies[n_of_k]
    k = band.k_abs[n_of_k]
    w = band.bandwidth
    sigma2 = params.n0 * w
    log_xi_req = np.log(np.expm1(reqs / w * _LN2))
    log_gain = math.log(params.gt_linear * params.gr_linear)
    log_geo = 2.0 * np.log(4.0 * np.pi * f / params.c)

    def distances_for_nu(log_nu: float) -> np.ndarray:
        # psi(d) = xi_req*sigma2*(2d + k d^2)*e^{k d}*(4 pi f/c)^2 / (GtGr)
        # is strictly increasing in d; solve psi(d) = 1/nu by bisection.
        target = -log_nu
        base = log_xi_req + math.log(sigma2) + log_geo - log_gain

        def log_psi(log_d):
            d = np.exp(log_d)
            return base + np.log(2.0 * d + k * d * d) + k * d

        lo = np.full(len(f), math.log(1e-12))
        hi = np.full(len(f), 0.0)
        while True:
            short = log_psi(hi) < target
            if not short.any():
                break
            hi = np.where(short, hi + math.log(10.0), hi)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            below = log_psi(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.exp(0.5 * (lo + hi))

    def log_powers(d: np.ndarray) -> np.ndarray:
        return log_xi_req + math.log(sigma2) - log_gain + k * d + 2.0 * np.log(
            4.0 * np.pi * f * d / params.c
        )

    def budget_gap(log_nu: float) -> float:
        return np.exp(log_powers(distances_for_nu(log_nu))).sum() - params.p_total

    lo, hi = 0.0, 0.0  # total power is strictly decreasing in nu
    while budget_gap(lo) < 0:
        lo -= math.log(256.0)
    while budget_gap(hi) > 0:
        hi += math.log(256.0)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if budget_gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    d = distances_for_nu(0.5 * (lo + hi))
    p = np.exp(log_powers(d))
    p *= params.p_total / p.sum()
    alloc = Allocation(
        strategy="distmax",
        subwindows=n_of_k,
        powers=p,
        distances=d,
        rates=reqs.astype(float).copy(),
        regimes=[Regime.DISTANCE_MAXIMIZED.value] * len(d),
        iterations=80,
    )
    audit_allocation(alloc, scenario, check_rate_floors=True)
    return alloc


def non_adaptive_benchmark(scenario: Scenario) -> Allocation:
    """Non-adaptive benchmark: devices sorted by descending rate floor take
    subwindows in band order, power is split equally, and each distance is
    the per-device TC optimum (or the floor-meeting maximum when the
    optimum violates the floor)."""
    reqs = scenario.rate_reqs
    band = scenario.band
    params = scenario.params
    n_dev = scenario.n_devices
    order = np.argsort(-reqs, kind="stable")
    n_of_k = np.empty(n_dev, dtype=int)
    n_of_k[order] = np.arange(n_dev)
    p_eq = params.p_total / n_dev
    d = np.empty(n_dev)
    rates = np.empty(n_dev)
    regimes = []
    infeasible = []
    for i in range(n_dev):
        f = band.frequencies[n_of_k[i]]
        k = band.k_abs[n_of_k[i]]
        try:
            res = classify_regime(
                p_eq, reqs[i], f, k, band.bandwidth, params, scenario.config.d_min
            )
        except InfeasibleError:
            infeasible.append(i)
            continue
        d[i] = res.d_opt
        rates[i] = (
            reqs[i]
            if res.regime is Regime.DISTANCE_MAXIMIZED
            else band.bandwidth * res.spectral_eff_opt
        )
        regimes.append(res.regime.value)
    if infeasible:
        raise InfeasibleError("equal power split cannot meet rate floors", infeasible)
    alloc = Allocation(
        strategy="nonadaptive",
        subwindows=n_of_k,
        powers=np.full(n_dev, p_eq),
        distances=d,
        rates=rates,
        regimes=regimes,
        iterations=1,
    )
    audit_allocation(alloc, scenario, check_rate_floors=True)
    return alloc


def exhaustive_tc_max(scenario: Scenario) -> Allocation:
    """Oracle strategy: run the inner power-distance solver for every
    possible subwindow assignment and keep the best. Intended for K=N<=6."""
    band = scenario.band
    cfg = scenario.config
    reqs = scenario.rate_reqs
    n_dev, n_sub = scenario.n_devices, band.n
    count = math.perm(n_sub, n_dev)
    if count > cfg.enum_cap:
        raise EnumerationCapError(f"{count} assignments exceed the cap of {cfg.enum_cap}")
    best: Allocation | None = None
    for perm in itertools.permutations(range(n_sub), n_dev):
        n_of_k = np.array(perm, dtype=int)
        state = iterate_power_distance(
            band.frequencies[n_of_k],
            band.k_abs[n_of_k],
            reqs,
            band.bandwidth,
            scenario.params,
            cfg,
        )
        if best is None or state.tc > best.tc:
            best = _alloc_from_state(
                scenario, "exhaustive", n_of_k, state, state.iterations
            )
    audit_allocation(best, scenario, check_rate_floors=True)
    return best


STRATEGIES = {
    "tc_fixed": fixed_distance_tc_max,
    "sum_rate": sum_rate_max,
    "proposed": proposed_tc_max,
    "distmax": distance_max_benchmark,
    "nonadaptive": non_adaptive_benchmark,
    "exhaustive": exhaustive_tc_max,
}
