"""Generate the bundled fixtures.

Run from the repository root:

    python3 scripts/make_fixtures.py

Writes six_by_six (6-bus / 6-junction day study), its evening wind-drop
realization, and the large scalability fixture into src/flexgas/fixtures/.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from flexgas import netmodel as nm  # noqa: E402
from flexgas import scenarios as sc  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "flexgas" / "fixtures"


def profile(knots_h, knots_v, grid: nm.TimeGrid) -> np.ndarray:
    """Piecewise-linear hourly profile sampled at step midpoints."""
    t = (np.arange(grid.n_steps) + 0.5) * grid.dt_hours
    return np.interp(t, knots_h, knots_v)


def build_six_by_six() -> nm.Fixture:
    grid = nm.TimeGrid(horizon_hours=24.0, dt_minutes=15.0)

    demand_h = [0, 2, 4, 6, 8, 10, 12, 14, 16, 17, 18, 20, 21, 22, 23, 24]
    demand_v = [152, 150, 150, 165, 225, 250, 260, 245, 270, 330, 400, 390,
                330, 245, 185, 152]
    total = profile(demand_h, demand_v, grid)
    total *= 400.0 / total.max()  # pin the peak exactly

    wind_h = [0, 2, 4, 6, 8, 10, 12, 14, 16, 17, 18, 20, 21, 22, 23, 24]
    wind_v = [88, 86, 84, 78, 60, 40, 30, 28, 30, 45, 45, 45, 50, 60, 75, 88]
    wind = profile(wind_h, wind_v, grid)

    solar_h = [0, 6, 7, 9, 12, 15, 17, 18, 24]
    solar_v = [0, 0, 10, 45, 70, 50, 15, 0, 0]
    solar = profile(solar_h, solar_v, grid)

    buses = [
        nm.Bus(id="b1", demand_series=tuple(np.zeros(grid.n_steps))),
        nm.Bus(id="b2", demand_series=tuple(np.zeros(grid.n_steps))),
        nm.Bus(id="b3", demand_series=tuple(0.7 * total)),
        nm.Bus(id="b4", demand_series=tuple(np.zeros(grid.n_steps))),
        nm.Bus(id="b5", demand_series=tuple(np.zeros(grid.n_steps))),
        nm.Bus(id="b6", demand_series=tuple(0.3 * total)),
    ]
    ring = [("b1", "b2"), ("b2", "b3"), ("b3", "b4"), ("b4", "b5"),
            ("b5", "b6"), ("b6", "b1")]
    lines = [nm.Line(id=f"l{i+1}", from_bus=a, to_bus=b, reactance=0.1,
                     flow_limit=400.0) for i, (a, b) in enumerate(ring)]

    generators = [
        nm.Generator(id="base", bus="b1", is_gas_fired=False,
                     cost_quad=(0.01, 18.0, 0.0), p_min=40.0, p_max=200.0,
                     ramp_per_step=25.0, frp_up_max=18.75, frp_dn_max=18.75),
        nm.Generator(id="mid", bus="b2", is_gas_fired=False,
                     cost_quad=(2.0, 95.0, 0.0), p_min=0.0, p_max=110.0,
                     ramp_per_step=40.0, frp_up_max=0.0, frp_dn_max=0.0),
        nm.Generator(id="gasgen", bus="b4", is_gas_fired=True,
                     cost_quad=(0.02, 35.0, 0.0), p_min=0.0, p_max=180.0,
                     ramp_per_step=31.25, frp_up_max=31.25, frp_dn_max=31.25),
    ]
    renewables = [
        nm.RenewableUnit(id="wind1", bus="b5", kind="wind",
                         forecast_series=tuple(wind)),
        nm.RenewableUnit(id="solar1", bus="b6", kind="solar",
                         forecast_series=tuple(solar)),
    ]
    elec = nm.ElectricNetwork(buses=tuple(buses), lines=tuple(lines),
                              generators=tuple(generators),
                              renewables=tuple(renewables), time_grid=grid)

    # Single trunk j1 -> j6.  All linepack storage sits upstream of the thin
    # delivery lateral p5; the power plant taps the terminal junction j6, so
    # its fuel is limited by transit through p5 plus whatever was parked at
    # the far end beforehand.
    pr_bands = [(30, 44), (30, 44), (30, 44), (30, 44), (30, 44), (28, 44)]
    junctions = [nm.Junction(id=f"j{i+1}", pr_min=lo * 1e5, pr_max=hi * 1e5)
                 for i, (lo, hi) in enumerate(pr_bands)]
    pipe_specs = [
        ("p1", "j1", "j2", 20.0, 0.50),
        ("p2", "j2", "j3", 20.0, 0.50),
        ("p3", "j3", "j4", 20.0, 0.50),
        ("p4", "j4", "j5", 20.0, 0.50),
        ("p5", "j5", "j6", 2.0, 0.128),  # short delivery lateral to the plant
    ]
    pipes = [nm.finalize_pipe(
        nm.Pipe(id=pid, from_junction=fr, to_junction=to, length=km * 1000.0,
                diameter=d, friction=0.01),
        sound_speed=350.0, dx_target=20_000.0)
        for pid, fr, to, km, d in pipe_specs]
    compressors = []
    # s1 can follow the draw; the terminal linepack restoration keeps the
    # schedule cyclic, so every kg burned during the day is purchased within
    # the horizon rather than borrowed from the stored trunk inventory.
    suppliers = [
        nm.Supplier(id="s1", junction="j1", q_min=0.0, q_max=45.0, price=0.15),
    ]
    # The shaped city-gate load sits at the head of the lateral and dips at
    # midday (linepack builds) before the evening peak (linepack drains); the
    # two mid-line taps are small and flat so only the power-plant fuel swings
    # the lateral transit.  The profile is cyclic so the horizon starts and
    # ends in the same steady regime.
    heat_h = [0, 1, 6, 11, 15, 17.5, 19, 22, 24]
    heat3 = profile([0, 24], [4, 4], grid)
    heat4 = profile([0, 24], [3, 3], grid)
    heat5 = profile(heat_h,
                    [22.7, 22.7, 21.0, 20.5, 20.5, 21.5, 22.3, 22.5, 22.7],
                    grid)
    heat_loads = [
        nm.HeatLoad(id="h3", junction="j3", demand_series=tuple(heat3)),
        nm.HeatLoad(id="h4", junction="j4", demand_series=tuple(heat4)),
        nm.HeatLoad(id="h5", junction="j5", demand_series=tuple(heat5)),
    ]
    gas = nm.GasNetwork(junctions=tuple(junctions), pipes=tuple(pipes),
                        compressors=tuple(compressors),
                        suppliers=tuple(suppliers),
                        heat_loads=tuple(heat_loads), time_grid=grid,
                        dx_target=20_000.0)
    coupling = {"gasgen": nm.CouplingEntry(junction="j6", heat_rate=0.05)}
    penalties = nm.PenaltyConfig(kappa_E=1000.0, kappa_S=1.0e4)
    return nm.Fixture(elec=elec, gas=gas, coupling=coupling, penalties=penalties)


def build_six_by_six_realization(fix: nm.Fixture) -> sc.RealizationScenario:
    grid = fix.time_grid
    dev = profile([0, 16, 17, 18, 20, 21, 22, 23, 24],
                  [0, 0, -15, -38, -38, -25, -10, 0, 0], grid)
    return sc.RealizationScenario(name="evening_wind_drop",
                                  deviations={"wind1": dev})


def build_large() -> nm.Fixture:
    grid = nm.TimeGrid(horizon_hours=6.0, dt_minutes=5.0)
    n_zones = 4

    demand_h = [0, 1, 2, 3, 4, 5, 6]
    demand_v = [560, 650, 800, 850, 820, 710, 600]
    total = profile(demand_h, demand_v, grid)
    wind = profile([0, 1.5, 3, 4.5, 6], [90, 75, 70, 80, 110], grid)
    solar = profile([0, 1, 2, 3.5, 5, 6], [60, 45, 25, 5, 0, 0], grid)

    buses, lines, generators, renewables = [], [], [], []
    for z in range(n_zones):
        bz = f"b{z+1}"
        buses.append(nm.Bus(id=bz, demand_series=tuple(total / n_zones)))
        generators += [
            nm.Generator(id=f"base{z+1}", bus=bz, is_gas_fired=False,
                         cost_quad=(0.01, 18.0 + z, 0.0), p_min=20.0,
                         p_max=110.0, ramp_per_step=10.0, frp_up_max=6.0,
                         frp_dn_max=6.0),
            nm.Generator(id=f"mid{z+1}", bus=bz, is_gas_fired=False,
                         cost_quad=(2.0, 95.0 + 2 * z, 0.0), p_min=0.0,
                         p_max=90.0, ramp_per_step=15.0, frp_up_max=0.0,
                         frp_dn_max=0.0),
            nm.Generator(id=f"peak{z+1}", bus=bz, is_gas_fired=False,
                         cost_quad=(1.0, 140.0 + 3 * z, 0.0), p_min=0.0,
                         p_max=60.0, ramp_per_step=20.0, frp_up_max=0.0,
                         frp_dn_max=0.0),
            nm.Generator(id=f"gg{2*z+1}", bus=bz, is_gas_fired=True,
                         cost_quad=(0.02, 34.0 + z, 0.0), p_min=0.0,
                         p_max=80.0, ramp_per_step=12.0, frp_up_max=10.0,
                         frp_dn_max=10.0),
            nm.Generator(id=f"gg{2*z+2}", bus=bz, is_gas_fired=True,
                         cost_quad=(0.02, 36.0 + z, 0.0), p_min=0.0,
                         p_max=80.0, ramp_per_step=12.0, frp_up_max=10.0,
                         frp_dn_max=10.0),
        ]
    for z in range(n_zones):
        lines.append(nm.Line(id=f"l{z+1}", from_bus=f"b{z+1}",
                             to_bus=f"b{(z+1) % n_zones + 1}",
                             reactance=0.1, flow_limit=600.0))
    renewables += [
        nm.RenewableUnit(id="windA", bus="b1", kind="wind",
                         forecast_series=tuple(0.6 * wind)),
        nm.RenewableUnit(id="windB", bus="b3", kind="wind",
                         forecast_series=tuple(0.4 * wind)),
        nm.RenewableUnit(id="solarA", bus="b2", kind="solar",
                         forecast_series=tuple(solar)),
    ]
    elec = nm.ElectricNetwork(buses=tuple(buses), lines=tuple(lines),
                              generators=tuple(generators),
                              renewables=tuple(renewables), time_grid=grid)

    junctions = [nm.Junction(id=f"j{i+1}", pr_min=30e5, pr_max=40e5)
                 for i in range(10)]
    pipe_specs = [
        ("p1", "j1", "j2", 20.0, 0.60),
        ("p2", "j2", "j3", 20.0, 0.55),
        ("p3", "j2", "j4", 15.0, 0.40),   # heat branch
        ("p4", "j4", "j5", 15.0, 0.35),
        ("p5", "j3", "j6", 15.0, 0.40),   # heat branch
        ("p6", "j1", "j7", 10.0, 0.12),   # generation spurs
        ("p7", "j2", "j8", 10.0, 0.12),
        ("p8", "j3", "j9", 10.0, 0.12),
        ("p9", "j3", "j10", 10.0, 0.12),
    ]
    pipes = [nm.finalize_pipe(
        nm.Pipe(id=pid, from_junction=fr, to_junction=to, length=km * 1000.0,
                diameter=d, friction=0.01),
        sound_speed=350.0, dx_target=10_000.0)
        for pid, fr, to, km, d in pipe_specs]
    compressors = [nm.Compressor(junction_id="j2", boost=1.1)]
    suppliers = [
        nm.Supplier(id="s1", junction="j1", q_min=0.0, q_max=80.0, price=0.15),
        nm.Supplier(id="s2", junction="j3", q_min=0.0, q_max=20.0, price=0.35),
    ]
    heat_loads = [
        nm.HeatLoad(id="h5", junction="j5",
                    demand_series=tuple(profile([0, 3, 6], [16, 20, 17], grid))),
        nm.HeatLoad(id="h6", junction="j6",
                    demand_series=tuple(profile([0, 3, 6], [12, 15, 13], grid))),
    ]
    gas = nm.GasNetwork(junctions=tuple(junctions), pipes=tuple(pipes),
                        compressors=tuple(compressors),
                        suppliers=tuple(suppliers),
                        heat_loads=tuple(heat_loads), time_grid=grid)
    gen_junction = {0: "j7", 1: "j7", 2: "j8", 3: "j8",
                    4: "j9", 5: "j9", 6: "j10", 7: "j10"}
    coupling = {f"gg{i+1}": nm.CouplingEntry(junction=gen_junction[i],
                                             heat_rate=0.05)
                for i in range(8)}
    penalties = nm.PenaltyConfig(kappa_E=1000.0, kappa_S=1.0e4)
    return nm.Fixture(elec=elec, gas=gas, coupling=coupling, penalties=penalties)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    six = build_six_by_six()
    nm.save_fixture(six, OUT / "six_by_six.json")
    sc.save_realization(build_six_by_six_realization(six),
                        OUT / "six_by_six_realization.json")
    nm.save_fixture(build_large(), OUT / "large.json")
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
