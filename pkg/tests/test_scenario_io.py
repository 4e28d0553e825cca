"""Scenario file parsing, canonical round trips, and validation errors."""

import json

import numpy as np
import pytest

from tera_tc.channel import bundled_absorption_table
from tera_tc.scenario import (
    ExperimentSpec,
    ScenarioError,
    default_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    uniform_band,
)


def minimal_doc(**overrides):
    doc = {
        "band": {
            "f_start_hz": 5e11,
            "f_stop_hz": 5.1e11,
            "n_subwindows": 10,
            "absorption_table": "bundled",
        },
        "link_params": {
            "gain_tx_dbi": 15.0,
            "gain_rx_dbi": 15.0,
            "noise_psd_dbm_per_hz": -168.0,
            "p_total_dbm": 30.0,
        },
        "devices": [{"count": 4, "rate_req_bps_per_hz": 1.0}],
        "experiment": {"kind": "tc_vs_power", "grid": [20.0, 30.0]},
    }
    doc.update(overrides)
    return doc


def test_default_scenario():
    scenario, spec = default_scenario()
    assert scenario.n_devices == 100
    assert scenario.band.n == 100
    assert scenario.band.bandwidth == 1e9
    assert scenario.params.p_total == pytest.approx(10.0)  # 40 dBm
    assert scenario.config.alpha == 0.7
    assert scenario.config.m_out == 5
    assert spec.kind == "tc_vs_power"
    assert spec.strategies == ("proposed", "distmax", "nonadaptive")


def test_uniform_band_centers():
    band = uniform_band(5e11, 5.1e11, 10, bundled_absorption_table())
    assert band.n == 10
    assert band.bandwidth == pytest.approx(1e9)
    assert band.frequencies[0] == pytest.approx(5.005e11)
    assert band.frequencies[-1] == pytest.approx(5.095e11)


def test_db_inputs_converted():
    scenario, _ = scenario_from_dict(minimal_doc())
    assert scenario.params.gt_linear == pytest.approx(10.0**1.5)
    assert scenario.params.n0 == pytest.approx(10.0 ** ((-168.0 - 30.0) / 10.0))
    assert scenario.params.p_total == pytest.approx(1.0)
    # rate_req in bps/Hz scales by the subwindow bandwidth.
    assert scenario.devices[0].rate_req == pytest.approx(1e9)


def test_round_trip_bit_exact(tmp_path):
    scenario, spec = scenario_from_dict(minimal_doc())
    path = tmp_path / "scenario.json"
    save_scenario(scenario, spec, path)
    loaded, loaded_spec = load_scenario(path)
    assert loaded == scenario
    assert loaded_spec == spec
    assert scenario_to_dict(loaded, loaded_spec) == scenario_to_dict(scenario, spec)


def test_explicit_subwindows():
    doc = minimal_doc(
        band={
            "subwindows": [
                {"frequency_hz": 5e11, "bandwidth_hz": 1e9, "k_abs_per_m": 0.1},
                {"frequency_hz": 5.01e11, "bandwidth_hz": 1e9, "k_abs_per_m": 0.2},
            ]
        },
        devices=[{"rate_req_bps": 1e9}, {"fixed_distance_m": 5.0}],
    )
    scenario, _ = scenario_from_dict(doc)
    assert scenario.band.n == 2
    assert scenario.devices[1].fixed_distance == 5.0


def test_empty_devices_rejected():
    with pytest.raises(ScenarioError, match="devices"):
        scenario_from_dict(minimal_doc(devices=[]))


def test_missing_section_rejected():
    doc = minimal_doc()
    del doc["band"]
    with pytest.raises(ScenarioError, match="band"):
        scenario_from_dict(doc)


def test_missing_field_rejected():
    doc = minimal_doc()
    del doc["band"]["f_stop_hz"]
    with pytest.raises(ScenarioError, match="f_stop_hz"):
        scenario_from_dict(doc)


def test_unknown_experiment_kind():
    with pytest.raises(ScenarioError, match="kind"):
        ExperimentSpec(kind="nope", grid=(1.0,))


def test_unknown_strategy():
    with pytest.raises(ScenarioError, match="strategy"):
        ExperimentSpec(kind="tc_vs_power", grid=(1.0,), strategies=("bogus",))


def test_unsorted_grid_rejected():
    with pytest.raises(ScenarioError, match="grid"):
        ExperimentSpec(kind="tc_vs_power", grid=(30.0, 20.0))


def test_bad_trials_rejected():
    with pytest.raises(ScenarioError, match="trials"):
        ExperimentSpec(kind="tc_vs_power", grid=(20.0,), trials=0)


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "band": [,\n}\n')
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(path)


def test_too_many_devices_rejected():
    doc = minimal_doc(devices=[{"count": 11, "rate_req_bps_per_hz": 1.0}])
    with pytest.raises(ScenarioError):
        scenario_from_dict(doc)


def test_custom_absorption_table(tmp_path):
    table = tmp_path / "table.csv"
    table.write_text("frequency_hz,k_abs_per_m\n4.9e11,0.1\n5.2e11,0.1\n")
    doc = minimal_doc()
    doc["band"]["absorption_table"] = str(table)
    scenario, _ = scenario_from_dict(doc)
    assert np.allclose(scenario.band.k_abs, 0.1)
