"""Data-model tests: parsing, validation, discretization and round trips."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexgas import netmodel
from flexgas.netmodel import (NetworkError, PA_PER_BAR, TimeGrid,
                              compute_pipe_coefficients, discretize_pipe,
                              fixture_to_dict, load_fixture, save_fixture,
                              scale_pipe_diameters)

from conftest import FIXTURE_DIR


def test_time_grid_steps():
    grid = TimeGrid(horizon_hours=24.0, dt_minutes=5.0)
    assert grid.n_steps == 288
    assert grid.dt_hours == pytest.approx(1.0 / 12.0)
    assert grid.dt_seconds == pytest.approx(300.0)


def test_time_grid_rejects_misaligned_horizon():
    with pytest.raises(NetworkError):
        TimeGrid(horizon_hours=1.0, dt_minutes=7.0)
    with pytest.raises(NetworkError):
        TimeGrid(horizon_hours=1.0, dt_minutes=-5.0)


def test_pipe_coefficients_oracle():
    # hand evaluation: D = 0.5 m, F = 0.01, c = 350 m/s
    # A = pi D^2 / 4 = 0.19634954.., c1 = A / c^2, c3 = 2 D A^2 / (F c^2)
    c1, c2, c3 = compute_pipe_coefficients(0.5, 0.01, 350.0)
    area = math.pi * 0.25 * 0.25
    assert c2 == pytest.approx(area, rel=1e-12)
    assert c1 == pytest.approx(area / 122500.0, rel=1e-12)
    assert c3 == pytest.approx(2.0 * 0.5 * area ** 2 / (0.01 * 122500.0), rel=1e-12)


def test_pipe_coefficients_rejects_bad_inputs():
    for bad in ((0.0, 0.01, 350.0), (0.5, -1.0, 350.0), (0.5, 0.01, 0.0)):
        with pytest.raises(NetworkError):
            compute_pipe_coefficients(*bad)


@given(length=st.floats(min_value=100.0, max_value=5e5),
       dx_target=st.floats(min_value=100.0, max_value=5e4))
@settings(max_examples=200, deadline=None)
def test_discretize_pipe_properties(length, dx_target):
    n_segments, dx = discretize_pipe(length, dx_target)
    assert n_segments >= 1
    assert n_segments * dx == pytest.approx(length, rel=1e-12)
    # actual spacing never exceeds the target (up to roundoff)
    assert dx <= dx_target * (1.0 + 1e-9)


def test_load_fixture_six_by_six(six_by_six):
    assert len(six_by_six.elec.buses) == 6
    assert len(six_by_six.gas.junctions) == 6
    assert six_by_six.time_grid.n_steps == 96
    assert [g.id for g in six_by_six.elec.gas_fired()] == ["gasgen"]
    assert six_by_six.elec.peak_demand == pytest.approx(400.0)
    # pressures are converted to pascal on load
    assert six_by_six.gas.junctions[0].pr_min == pytest.approx(30.0 * PA_PER_BAR)


def test_fixture_round_trip(tmp_path, six_by_six):
    path = tmp_path / "copy.json"
    save_fixture(six_by_six, path)
    again = load_fixture(path)
    assert fixture_to_dict(again) == fixture_to_dict(six_by_six)


def test_scale_pipe_diameters(six_by_six):
    scaled = scale_pipe_diameters(six_by_six.gas, 1.2)
    for before, after in zip(six_by_six.gas.pipes, scaled.pipes):
        assert after.diameter == pytest.approx(1.2 * before.diameter)
        # c3 ~ D^5, so friction losses drop steeply with the upgrade
        assert after.c3 == pytest.approx(before.c3 * 1.2 ** 5, rel=1e-9)
        assert after.n_segments == before.n_segments


def _doc(six_by_six):
    return fixture_to_dict(six_by_six)


def _expect_error(tmp_path, doc, match):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(NetworkError, match=match):
        load_fixture(path)


def test_validation_duplicate_bus(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["buses"].append(dict(doc["buses"][0]))
    _expect_error(tmp_path, doc, "duplicate bus")


def test_validation_unknown_generator_bus(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["generators"][0]["bus"] = "nope"
    _expect_error(tmp_path, doc, "unknown bus")


def test_validation_frp_beyond_ramp(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["generators"][0]["frp_up_max"] = doc["generators"][0]["ramp_per_step"] + 1.0
    _expect_error(tmp_path, doc, "cannot exceed ramp_per_step")


def test_validation_negative_demand(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["buses"][0]["demand_series"][3] = -1.0
    _expect_error(tmp_path, doc, "demand must be >= 0")


def test_validation_pressure_band(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["junctions"][0]["pr_min"] = doc["junctions"][0]["pr_max"] + 1.0
    _expect_error(tmp_path, doc, "pr_min must be < pr_max")


def test_validation_units_block(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["units"]["pressure"] = "psi"
    _expect_error(tmp_path, doc, "units.pressure")


def test_validation_series_length(tmp_path, six_by_six):
    doc = _doc(six_by_six)
    doc["heat_loads"][0]["demand_series"] = doc["heat_loads"][0]["demand_series"][:-1]
    _expect_error(tmp_path, doc, "series length")


def test_missing_file_raises():
    with pytest.raises(NetworkError, match="file not found"):
        load_fixture(FIXTURE_DIR / "does_not_exist.json")


def test_invalid_json_raises(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(NetworkError, match="invalid JSON"):
        load_fixture(path)
