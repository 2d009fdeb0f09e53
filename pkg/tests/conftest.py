"""Shared fixtures and small network builders for the test suite."""

from pathlib import Path

import numpy as np
import pytest

from flexgas import netmodel, scenarios as sc
from flexgas.netmodel import (Bus, ElectricNetwork, GasNetwork, Generator,
                              HeatLoad, Junction, PenaltyConfig, Pipe,
                              RenewableUnit, Supplier, TimeGrid,
                              finalize_pipe, PA_PER_BAR)

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "flexgas" / "fixtures"

SOUND_SPEED = 350.0


@pytest.fixture(scope="session")
def six_by_six():
    return netmodel.load_fixture(FIXTURE_DIR / "six_by_six.json")


@pytest.fixture(scope="session")
def large_fixture():
    return netmodel.load_fixture(FIXTURE_DIR / "large.json")


@pytest.fixture(scope="session")
def wind_drop():
    return sc.load_realization(FIXTURE_DIR / "six_by_six_realization.json")


def single_pipe_gas(n_steps=3, dt_minutes=5.0, heat=(12.0, 14.0, 16.0),
                    diameter=0.4, length_km=20.0, dx_target_km=10.0,
                    pr_from=(30.0, 60.0), pr_to=(25.0, 60.0),
                    q_max=40.0, price=0.2) -> GasNetwork:
    """One supplier, one pipe, one demand junction; n_segments from dx."""
    grid = TimeGrid(horizon_hours=n_steps * dt_minutes / 60.0,
                    dt_minutes=dt_minutes)
    pipe = finalize_pipe(
        Pipe(id="p1", from_junction="j1", to_junction="j2",
             length=length_km * 1000.0, diameter=diameter, friction=0.01),
        SOUND_SPEED, dx_target_km * 1000.0)
    heat = tuple(float(v) for v in heat)
    assert len(heat) == grid.n_steps
    return GasNetwork(
        junctions=(Junction("j1", pr_from[0] * PA_PER_BAR, pr_from[1] * PA_PER_BAR),
                   Junction("j2", pr_to[0] * PA_PER_BAR, pr_to[1] * PA_PER_BAR)),
        pipes=(pipe,),
        compressors=(),
        suppliers=(Supplier("s1", "j1", 0.0, q_max, price),),
        heat_loads=(HeatLoad("h2", "j2", heat),),
        time_grid=grid,
        sound_speed=SOUND_SPEED,
        dx_target=dx_target_km * 1000.0)


def two_unit_elec(n_steps=288, dt_minutes=5.0) -> ElectricNetwork:
    """Single-bus fleet with one gas-fired and one must-run thermal unit.

    Unit 2 is cheap but its reserve offer is capped at 6.25 MW per step, so
    with a 12 MW per-step requirement unit 1 has to carry the remainder.
    """
    grid = TimeGrid(horizon_hours=n_steps * dt_minutes / 60.0,
                    dt_minutes=dt_minutes)
    t = np.arange(n_steps) * grid.dt_hours
    demand = 110.0 + 70.0 * np.exp(-((t - 19.0) / 3.0) ** 2) \
        + 30.0 * np.exp(-((t - 9.0) / 2.5) ** 2)
    solar = 45.0 * np.clip(np.sin(np.pi * (t - 6.0) / 13.0), 0.0, None)
    u1 = Generator(id="u1", bus="b1", is_gas_fired=True,
                   cost_quad=(0.02, 40.0, 0.0), p_min=0.0, p_max=150.0,
                   ramp_per_step=125.0 * grid.dt_hours,
                   frp_up_max=125.0 * grid.dt_hours,
                   frp_dn_max=125.0 * grid.dt_hours)
    u2 = Generator(id="u2", bus="b1", is_gas_fired=False,
                   cost_quad=(0.01, 20.0, 0.0), p_min=50.0, p_max=225.0,
                   ramp_per_step=75.0 * grid.dt_hours,
                   frp_up_max=6.25, frp_dn_max=6.25)
    return ElectricNetwork(
        buses=(Bus("b1", tuple(demand)),),
        lines=(),
        generators=(u1, u2),
        renewables=(RenewableUnit("pv1", "b1", "solar", tuple(solar)),),
        time_grid=grid)


def simple_penalties(kappa_E=1000.0, kappa_S=10000.0) -> PenaltyConfig:
    return PenaltyConfig(kappa_E=kappa_E, kappa_S=kappa_S)
