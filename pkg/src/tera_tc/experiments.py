"""Experiment drivers: parameter sweeps, Monte Carlo CDFs, and CSV output.

Every runner returns plain row dictionaries so results can be written as
CSV (`write_results`) or inspected in memory. Sweep points and trials are
independent jobs; with `workers > 1` they run in a process pool and are
merged back in deterministic (sweep, trial) order, so output files are
byte-identical regardless of parallelism.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .channel import spreading_loss, absorption_loss
from .distance_power import optimal_distance_pair
from .scenario import ExperimentSpec, Scenario, scenario_to_dict
from .strategies import STRATEGIES, Allocation, DeviceSpec, audit_allocation
from .units import dbm_to_watts, watts_to_dbm

_LN2 = math.log(2.0)


def _summary_row(experiment: str, strategy: str, sweep_value, trial: int, alloc: Allocation | None, error: str = ""):
    row = {
        "experiment": experiment,
        "strategy": strategy,
        "sweep_value": sweep_value,
        "trial": trial,
        "tc_m_bps": "",
        "sum_rate_bps": "",
        "power_used_w": "",
        "iterations": "",
        "error": error,
    }
    if alloc is not None:
        row.update(
            tc_m_bps=alloc.tc,
            sum_rate_bps=alloc.sum_rate,
            power_used_w=alloc.power_used,
            iterations=alloc.iterations,
        )
    return row


def _device_rows(experiment: str, strategy: str, sweep_value, trial: int, scenario: Scenario, alloc: Allocation):
    band = scenario.band
    rows = []
    for k in range(len(alloc.subwindows)):
        n = int(alloc.subwindows[k])
        rows.append(
            {
                "experiment": experiment,
                "strategy": strategy,
                "sweep_value": sweep_value,
                "trial": trial,
                "device": k,
                "subwindow": n,
                "frequency_hz": band.frequencies[n],
                "k_abs_per_m": band.k_abs[n],
                "distance_m": alloc.distances[k],
                "power_w": alloc.powers[k],
                "rate_bps": alloc.rates[k],
                "rate_req_bps": scenario.devices[k].rate_req,
                "regime": alloc.regimes[k],
            }
        )
    return rows


def _run_strategy_job(job):
    """One (strategy, scenario) work item; top-level so it pickles."""
    experiment, strategy, sweep_value, trial, scenario, check_floors = job
    try:
        alloc = STRATEGIES[strategy](scenario)
        audit_allocation(alloc, scenario, check_rate_floors=check_floors)
    except Exception as exc:  # recorded per row, sweep continues
        return _summary_row(experiment, strategy, sweep_value, trial, None, f"{type(exc).__name__}: {exc}"), []
    return (
        _summary_row(experiment, strategy, sweep_value, trial, alloc),
        _device_rows(experiment, strategy, sweep_value, trial, scenario, alloc),
    )


def _run_jobs(jobs, workers: int = 1):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_strategy_job, jobs))
    else:
        results = [_run_strategy_job(job) for job in jobs]
    summary = [r[0] for r in results]
    devices = [row for r in results for row in r[1]]
    return summary, devices


_FLOOR_STRATEGIES = {"proposed", "distmax", "nonadaptive", "exhaustive"}


def run_tc_vs_power(scenario: Scenario, spec: ExperimentSpec, workers: int = 1):
    """TC of the selected strategies over a total-power grid (dBm)."""
    jobs = []
    for p_dbm in spec.grid:
        sc = replace(scenario, params=replace(scenario.params, p_total=float(dbm_to_watts(p_dbm))))
        for strategy in spec.strategies:
            jobs.append((spec.kind, strategy, p_dbm, 0, sc, strategy in _FLOOR_STRATEGIES))
    return _run_jobs(jobs, workers)


def fig8_rate_tiers(n_devices: int, bandwidth: float) -> tuple[DeviceSpec, ...]:
    """Rate floors of 1/2/3/4 bps/Hz for device blocks of 25."""
    return tuple(
        DeviceSpec(rate_req=(1 + min(k // 25, 3)) * bandwidth) for k in range(n_devices)
    )


def run_tc_vs_devices(scenario: Scenario, spec: ExperimentSpec, workers: int = 1):
    """TC over the number of devices, with tiered rate floors."""
    jobs = []
    for k_count in spec.grid:
        devices = fig8_rate_tiers(int(k_count), scenario.band.bandwidth)
        sc = replace(scenario, devices=devices)
        for strategy in spec.strategies:
            jobs.append((spec.kind, strategy, k_count, 0, sc, strategy in _FLOOR_STRATEGIES))
    return _run_jobs(jobs, workers)


def sample_disk_distances(rng: np.random.Generator, n: int, radius: float, d_min: float) -> np.ndarray:
    """Radial distances of n points uniform over a disk of the given radius."""
    return np.maximum(radius * np.sqrt(rng.random(n)), d_min)


def _cdf_job(job):
    experiment, strategy, radius, trial, scenario, seed, radius_index = job
    rng = np.random.default_rng([seed, radius_index, trial])
    d = sample_disk_distances(
        rng, scenario.n_devices, radius, scenario.config.d_min
    )
    devices = tuple(
        replace(dev, fixed_distance=float(di)) for dev, di in zip(scenario.devices, d)
    )
    sc = replace(scenario, devices=devices)
    try:
        alloc = STRATEGIES[strategy](sc)
        audit_allocation(alloc, sc, check_rate_floors=False)
    except Exception as exc:
        return _summary_row(experiment, strategy, radius, trial, None, f"{type(exc).__name__}: {exc}"), []
    return _summary_row(experiment, strategy, radius, trial, alloc), list(alloc.rates)


def run_cdf_fixed_distance(scenario: Scenario, spec: ExperimentSpec, workers: int = 1):
    """Monte Carlo fixed-distance experiment: device locations are drawn
    uniformly over a disk per trial, rates are pooled over devices and
    trials jointly, and empirical CDF points are emitted per (radius,
    strategy).

    Returns (summary_rows, cdf_rows).
    """
    strategies = spec.strategies or ("tc_fixed", "sum_rate")
    jobs = []
    for radius_index, radius in enumerate(spec.grid):
        for strategy in strategies:
            for trial in range(spec.trials):
                jobs.append(
                    (spec.kind, strategy, radius, trial, scenario, spec.seed, radius_index)
                )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cdf_job, jobs))
    else:
        results = [_cdf_job(job) for job in jobs]
    summary = [r[0] for r in results]
    pooled: dict[tuple[float, str], list[float]] = {}
    for job, (_, rates) in zip(jobs, results):
        pooled.setdefault((job[2], job[1]), []).extend(rates)
    cdf_rows = []
    for (radius, strategy), rates in sorted(pooled.items()):
        rates = np.sort(np.asarray(rates))
        m = len(rates)
        for i, r in enumerate(rates):
            cdf_rows.append(
                {
                    "experiment": spec.kind,
                    "strategy": strategy,
                    "radius_m": radius,
                    "rate_bps": float(r),
                    "cdf": (i + 1) / m,
                }
            )
    return summary, cdf_rows


def run_loss_distance_vs_frequency(scenario: Scenario, spec: ExperimentSpec, workers: int = 1):
    """Per-subwindow losses and the distance allocated by the proposed
    strategy; the path loss column excludes antenna gains."""
    strategy = spec.strategies[0] if spec.strategies else "proposed"
    alloc = STRATEGIES[strategy](scenario)
    audit_allocation(alloc, scenario, check_rate_floors=strategy in _FLOOR_STRATEGIES)
    band = scenario.band
    rows = []
    for k in np.argsort(alloc.subwindows):
        n = int(alloc.subwindows[k])
        f = band.frequencies[n]
        ka = band.k_abs[n]
        d = alloc.distances[k]
        spread = float(spreading_loss(f, d, scenario.params.c))
        absorb = float(absorption_loss(ka, d))
        rows.append(
            {
                "experiment": spec.kind,
                "strategy": strategy,
                "subwindow": n,
                "frequency_hz": f,
                "k_abs_per_m": ka,
                "device": int(k),
                "distance_m": d,
                "spreading_loss_db": -10.0 * math.log10(spread),
                "absorption_loss_db": -10.0 * math.log10(absorb),
                "path_loss_db": -10.0 * math.log10(spread * absorb),
                "rate_bps": alloc.rates[k],
            }
        )
    return [_summary_row(spec.kind, strategy, 0.0, 0, alloc)], rows


def run_rate_distance_tradeoff(scenario: Scenario, spec: ExperimentSpec, workers: int = 1):
    """(distance, rate) scatter per strategy for the rate-distance trade-off."""
    summary, scatter = [], []
    for strategy in spec.strategies:
        alloc = STRATEGIES[strategy](scenario)
        audit_allocation(alloc, scenario, check_rate_floors=strategy in _FLOOR_STRATEGIES)
        summary.append(_summary_row(spec.kind, strategy, 0.0, 0, alloc))
        for k in range(scenario.n_devices):
            scatter.append(
                {
                    "experiment": spec.kind,
                    "strategy": strategy,
                    "device": k,
                    "rate_req_bps": scenario.devices[k].rate_req,
                    "distance_m": alloc.distances[k],
                    "rate_bps": alloc.rates[k],
                }
            )
    return summary, scatter


def run_single_link_curve(scenario: Scenario, spec: ExperimentSpec, workers: int = 1):
    """Transport capacity of one full-power link versus distance, plus the
    stationary optimum, for the first subwindow of the band."""
    band = scenario.band
    params = scenario.params
    sub = band.subwindows[0]
    rows = link_curve(sub.frequency, sub.k_abs, band.bandwidth, params, np.asarray(spec.grid))
    return [], rows


def link_curve(frequency: float, k_abs: float, bandwidth: float, params, distances) -> list[dict]:
    """T(d) = d * W * log2(1 + SNR(d)) rows at full power over a distance grid."""
    d = np.asarray(distances, dtype=float)
    gain = params.gt_linear * params.gr_linear * np.exp(-k_abs * d) * (
        params.c / (4.0 * np.pi * frequency * d)
    ) ** 2
    snr = params.p_total * gain / (params.n0 * bandwidth)
    rate = bandwidth * np.log1p(snr) / _LN2
    d_opt, xi_opt = optimal_distance_pair(params.p_total, frequency, k_abs, bandwidth, params)
    rate_opt = bandwidth * math.log1p(xi_opt) / _LN2
    rows = [
        {
            "frequency_hz": frequency,
            "k_abs_per_m": k_abs,
            "distance_m": float(di),
            "rate_bps": float(ri),
            "tc_m_bps": float(di * ri),
            "is_optimum": 0,
        }
        for di, ri in zip(d, rate)
    ]
    rows.append(
        {
            "frequency_hz": frequency,
            "k_abs_per_m": k_abs,
            "distance_m": d_opt,
            "rate_bps": rate_opt,
            "tc_m_bps": d_opt * rate_opt,
            "is_optimum": 1,
        }
    )
    return rows


RUNNERS = {
    "tc_vs_power": run_tc_vs_power,
    "tc_vs_devices": run_tc_vs_devices,
    "cdf_fixed_distance": run_cdf_fixed_distance,
    "loss_distance_vs_frequency": run_loss_distance_vs_frequency,
    "rate_distance_tradeoff": run_rate_distance_tradeoff,
    "exhaustive_validation": run_tc_vs_power,
    "single_link_curve": run_single_link_curve,
}

#: Name of the secondary CSV emitted per experiment kind.
DETAIL_FILENAMES = {
    "cdf_fixed_distance": "cdf.csv",
    "loss_distance_vs_frequency": "subwindows.csv",
    "rate_distance_tradeoff": "scatter.csv",
    "single_link_curve": "curve.csv",
}


def write_results(rows, path) -> None:
    """Write row dictionaries as CSV with a stable column order."""
    rows = list(rows)
    if not rows:
        with open(path, "w", newline="") as fh:
            fh.write("")
        return
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def run_experiment(scenario: Scenario, spec: ExperimentSpec, out_dir, workers: int = 1) -> dict:
    """Dispatch on the experiment kind and write summary/detail CSVs plus a
    metadata JSON into `out_dir`. Returns {filename: path}."""
    os.makedirs(out_dir, exist_ok=True)
    runner = RUNNERS[spec.kind]
    summary, detail = runner(scenario, spec, workers)
    written = {}
    if summary:
        path = os.path.join(out_dir, "summary.csv")
        write_results(summary, path)
        written["summary.csv"] = path
    detail_name = DETAIL_FILENAMES.get(spec.kind, "devices.csv")
    if detail:
        path = os.path.join(out_dir, detail_name)
        write_results(detail, path)
        written[detail_name] = path
    meta = {
        "version": __version__,
        "kind": spec.kind,
        "seed": spec.seed,
        "trials": spec.trials,
        "strategies": list(spec.strategies),
        "cdf_pooling": "devices and trials pooled jointly",
        "scenario": scenario_to_dict(scenario, spec),
    }
    meta_path = os.path.join(out_dir, "meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["meta.json"] = meta_path
    return written
