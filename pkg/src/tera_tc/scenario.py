"""Scenario file loading/saving and band construction.

The scenario JSON has sections `band`, `link_params`, `devices`, `solver`,
and `experiment`. Logarithmic inputs (dBi gains, dBm powers, dBm/Hz noise
density) are accepted and converted to linear units on load; saving always
emits the canonical linear form, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from .channel import AbsorptionTable, BandPlan, LinkParams, Subwindow, bundled_absorption_table
from .distance_power import SolverConfig
from .strategies import STRATEGIES, DeviceSpec, Scenario
from .units import db_to_linear, dbm_to_watts

EXPERIMENT_KINDS = (
    "tc_vs_power",
    "tc_vs_devices",
    "cdf_fixed_distance",
    "loss_distance_vs_frequency",
    "rate_distance_tradeoff",
    "exhaustive_validation",
    "single_link_curve",
)


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentSpec:
    """What to sweep and how often.

    The meaning of `grid` depends on `kind`: total power in dBm
    (tc_vs_power, exhaustive_validation), device counts (tc_vs_devices),
    cell radii in m (cdf_fixed_distance), distances in m
    (single_link_curve); kinds without a sweep use a single placeholder
    point.
    """

    kind: str
    grid: tuple[float, ...]
    trials: int = 1
    seed: int = 0
    strategies: tuple[str, ...] = ("proposed",)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ScenarioError(f"experiment.kind: unknown kind {self.kind!r}")
        if not self.grid or list(self.grid) != sorted(self.grid):
            raise ScenarioError("experiment.grid: must be non-empty and sorted")
        if self.trials < 1:
            raise ScenarioError("experiment.trials: must be >= 1")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ScenarioError(f"experiment.strategies: unknown strategy {s!r}")


def uniform_band(
    f_start: float, f_stop: float, n_subwindows: int, table: AbsorptionTable
) -> BandPlan:
    """N equal subwindows spanning [f_start, f_stop] with center-frequency
    absorption coefficients sampled from the table."""
    edges = np.linspace(f_start, f_stop, n_subwindows + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    w = (f_stop - f_start) / n_subwindows
    return BandPlan(tuple(Subwindow(float(f), float(w), float(table.lookup(f))) for f in centers))


_MISSING = object()


def _get(section: dict, context: str, key: str, default=_MISSING):
    if key in section:
        return section[key]
    if default is _MISSING:
        raise ScenarioError(f"{context}: missing required field {key!r}")
    return default


def _parse_band(section: dict) -> BandPlan:
    if "subwindows" in section:
        subs = []
        for i, row in enumerate(section["subwindows"]):
            subs.append(
                Subwindow(
                    float(_get(row, f"band.subwindows[{i}]", "frequency_hz")),
                    float(_get(row, f"band.subwindows[{i}]", "bandwidth_hz")),
                    float(_get(row, f"band.subwindows[{i}]", "k_abs_per_m")),
                )
            )
        return BandPlan(tuple(subs))
    table_ref = _get(section, "band", "absorption_table", default="bundled")
    table = bundled_absorption_table() if table_ref == "bundled" else AbsorptionTable.from_csv(table_ref)
    return uniform_band(
        float(_get(section, "band", "f_start_hz")),
        float(_get(section, "band", "f_stop_hz")),
        int(_get(section, "band", "n_subwindows")),
        table,
    )


def _parse_link_params(section: dict) -> LinkParams:
    if "gt_linear" in section:
        gt = float(section["gt_linear"])
        gr = float(section["gr_linear"])
    else:
        gt = float(db_to_linear(_get(section, "link_params", "gain_tx_dbi")))
        gr = float(db_to_linear(_get(section, "link_params", "gain_rx_dbi")))
    if "n0_w_per_hz" in section:
        n0 = float(section["n0_w_per_hz"])
    else:
        n0 = float(dbm_to_watts(_get(section, "link_params", "noise_psd_dbm_per_hz")))
    if "p_total_w" in section:
        p_total = float(section["p_total_w"])
    else:
        p_total = float(dbm_to_watts(_get(section, "link_params", "p_total_dbm")))
    c = float(_get(section, "link_params", "c_m_per_s", default=LinkParams.c))
    return LinkParams(gt_linear=gt, gr_linear=gr, n0=n0, p_total=p_total, c=c)


def _parse_devices(entries, bandwidth: float) -> tuple[DeviceSpec, ...]:
    if not entries:
        raise ScenarioError("devices: list must be non-empty")
    devices = []
    for i, row in enumerate(entries):
        ctx = f"devices[{i}]"
        count = int(row.get("count", 1))
        if count < 1:
            raise ScenarioError(f"{ctx}.count: must be >= 1")
        if "rate_req_bps" in row:
            req = float(row["rate_req_bps"])
        elif "rate_req_bps_per_hz" in row:
            req = float(row["rate_req_bps_per_hz"]) * bandwidth
        else:
            req = 0.0
        dist = row.get("fixed_distance_m")
        try:
            dev = DeviceSpec(rate_req=req, fixed_distance=None if dist is None else float(dist))
        except ValueError as exc:
            raise ScenarioError(f"{ctx}: {exc}") from exc
        devices.extend([dev] * count)
    return tuple(devices)


def _parse_solver(section: dict) -> SolverConfig:
    defaults = SolverConfig()
    try:
        return SolverConfig(
            alpha=float(section.get("alpha", defaults.alpha)),
            eps=float(section.get("eps", defaults.eps)),
            eps_relative=bool(section.get("eps_relative", defaults.eps_relative)),
            m_out=int(section.get("m_out", defaults.m_out)),
            d_init=float(section.get("d_init_m", defaults.d_init)),
            max_inner=int(section.get("max_inner", defaults.max_inner)),
            d_min=float(section.get("d_min_m", defaults.d_min)),
            bisect_rel_tol=float(section.get("bisect_rel_tol", defaults.bisect_rel_tol)),
            enum_cap=int(section.get("enum_cap", defaults.enum_cap)),
            seed=int(section.get("seed", defaults.seed)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"solver: {exc}") from exc


def _parse_experiment(section: dict) -> ExperimentSpec:
    return ExperimentSpec(
        kind=_get(section, "experiment", "kind"),
        grid=tuple(float(x) for x in _get(section, "experiment", "grid")),
        trials=int(section.get("trials", 1)),
        seed=int(section.get("seed", 0)),
        strategies=tuple(section.get("strategies", ["proposed"])),
    )


def scenario_from_dict(doc: dict) -> tuple[Scenario, ExperimentSpec]:
    for key in ("band", "link_params", "devices"):
        if key not in doc:
            raise ScenarioError(f"missing top-level section {key!r}")
    band = _parse_band(doc["band"])
    params = _parse_link_params(doc["link_params"])
    devices = _parse_devices(doc["devices"], band.bandwidth)
    config = _parse_solver(doc.get("solver", {}))
    try:
        scenario = Scenario(band=band, params=params, devices=devices, config=config)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    experiment = _parse_experiment(doc.get("experiment", {"kind": "tc_vs_power", "grid": [30.0]}))
    return scenario, experiment


def load_scenario(path) -> tuple[Scenario, ExperimentSpec]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(scenario: Scenario, experiment: ExperimentSpec) -> dict:
    """Canonical (linear-unit) form; round-trips exactly through JSON."""
    return {
        "band": {
            "subwindows": [
                {"frequency_hz": s.frequency, "bandwidth_hz": s.bandwidth, "k_abs_per_m": s.k_abs}
                for s in scenario.band.subwindows
            ]
        },
        "link_params": {
            "gt_linear": scenario.params.gt_linear,
            "gr_linear": scenario.params.gr_linear,
            "n0_w_per_hz": scenario.params.n0,
            "p_total_w": scenario.params.p_total,
            "c_m_per_s": scenario.params.c,
        },
        "devices": [
            {"rate_req_bps": dev.rate_req, "fixed_distance_m": dev.fixed_distance}
            for dev in scenario.devices
        ],
        "solver": {
            "alpha": scenario.config.alpha,
            "eps": scenario.config.eps,
            "eps_relative": scenario.config.eps_relative,
            "m_out": scenario.config.m_out,
            "d_init_m": scenario.config.d_init,
            "max_inner": scenario.config.max_inner,
            "d_min_m": scenario.config.d_min,
            "bisect_rel_tol": scenario.config.bisect_rel_tol,
            "enum_cap": scenario.config.enum_cap,
            "seed": scenario.config.seed,
        },
        "experiment": {
            "kind": experiment.kind,
            "grid": list(experiment.grid),
            "trials": experiment.trials,
            "seed": experiment.seed,
            "strategies": list(experiment.strategies),
        },
    }


def save_scenario(scenario: Scenario, experiment: ExperimentSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario, experiment), fh, indent=2)
        fh.write("\n")


def default_scenario() -> tuple[Scenario, ExperimentSpec]:
    """The checked-in desk-scale default: 100 x 1 GHz subwindows over
    500-600 GHz, -168 dBm/Hz noise density, 15 dBi antennas."""
    path = resources.files("tera_tc").joinpath("data/default_scenario.json")
    with resources.as_file(path) as p:
        return load_scenario(p)
