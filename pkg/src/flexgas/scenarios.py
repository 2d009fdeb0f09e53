"""Case-study workflows: day-ahead coordination, real-time realization with
shed accounting, diameter what-if, ramping-requirement sweep and the ADMM
mode benchmark."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coordinator as co
from . import elec, gas as gasmod
from .netmodel import Fixture, PA_PER_BAR, scale_pipe_diameters


class ScenarioError(RuntimeError):
    pass


REPORT_TOLERANCE = 1e-8


@dataclass
class RealizationScenario:
    """Signed renewable deviation from forecast, MW per unit per step."""
    name: str
    deviations: dict  # renewable id -> array of length n_steps

    def realized_series(self, fixture: Fixture) -> np.ndarray:
        net = fixture.elec
        n = net.time_grid.n_steps
        out = np.zeros((len(net.renewables), n))
        known = {r.id for r in net.renewables}
        for rid in self.deviations:
            if rid not in known:
                raise ScenarioError(f"realization names unknown renewable '{rid}'")
        for r_i, r in enumerate(net.renewables):
            dev = np.asarray(self.deviations.get(r.id, np.zeros(n)), dtype=float)
            if dev.shape != (n,):
                raise ScenarioError(f"deviation for '{r.id}' has wrong length")
            out[r_i] = np.maximum(np.asarray(r.forecast_series) + dev, 0.0)
        return out

    def check_bound(self, fixture: Fixture, frp: elec.FrpRequirement) -> None:
        """Case premise: net-demand deviation stays within the FRP band."""
        net = fixture.elec
        n = net.time_grid.n_steps
        total_dev = np.zeros(n)
        for rid, dev in self.deviations.items():
            total_dev += np.asarray(dev, dtype=float)
        # renewable shortfall raises net demand, covered by upward FRP
        if ((-total_dev) > frp.r_up + 1e-9).any():
            raise ScenarioError("realization exceeds the upward FRP band")
        if (total_dev > frp.r_dn + 1e-9).any():
            raise ScenarioError("realization exceeds the downward FRP band")


def load_realization(path) -> RealizationScenario:
    with open(path) as fh:
        raw = json.load(fh)
    return RealizationScenario(name=raw.get("name", Path(path).stem),
                               deviations={k: np.asarray(v, dtype=float)
                                           for k, v in raw["deviations"].items()})


def save_realization(scn: RealizationScenario, path) -> None:
    with open(path, "w") as fh:
        json.dump({"name": scn.name,
                   "deviations": {k: list(map(float, v))
                                  for k, v in scn.deviations.items()}},
                  fh, indent=2)
        fh.write("\n")


@dataclass
class ScenarioReport:
    kind: str
    status: str
    shed_percent: float
    utilization_percent: dict
    unit_mwh: float
    fuel_kg: dict
    min_pressure_bar: float
    max_pressure_bar: float
    tightness: gasmod.TightnessReport | None
    strong_duality_residual: float
    gas_cost: float
    frp: elec.FrpRequirement
    coordination: co.CoordinationResult
    elec_decision: elec.ElecDecision
    gas_decision: gasmod.GasDecision
    init_state: gasmod.GasInitialState
    renewable_series: np.ndarray
    extras: dict = field(default_factory=dict)


def frp_requirement(fixture: Fixture, fraction: float) -> elec.FrpRequirement:
    net = fixture.elec
    level = fraction * net.peak_demand * net.time_grid.dt_hours
    n = net.time_grid.n_steps
    return elec.FrpRequirement(r_up=np.full(n, level), r_dn=np.full(n, level))


def _initial_state(fixture: Fixture, units,
                   frp_fraction: float = 0.0) -> gasmod.GasInitialState:
    """Steady pre-horizon state from the first-step loads.

    The fuel withdrawal at t=0 comes from a gas-blind dispatch of the first
    step under the scenario's own ramping requirement, so the pre-horizon
    pipeline already carries the overnight plant burn that the requirement
    keeps online.  This keeps the whole pipeline deterministic.
    """
    gnet = fixture.gas
    jix = gnet.junction_index()
    heat0 = np.zeros(len(gnet.junctions))
    for h in gnet.heat_loads:
        heat0[jix[h.junction]] += float(np.asarray(h.demand_series)[0])
    pre = elec.solve_elec(fixture.elec, frp_requirement(fixture, frp_fraction),
                          fixture.penalties)
    x0 = elec.gas_fired_slice(fixture.elec, pre)[:, 0]
    fuel0 = np.zeros(len(gnet.junctions))
    for u_i, u in enumerate(units):
        fuel0[jix[u.junction]] += u.heat_rate * max(float(x0[u_i]), 0.0)
    return gasmod.steady_state_init(gnet, heat0, fuel0)


def _build_report(kind, fixture: Fixture, units, init, frp, result,
                  renewable_series, elec_agent=None) -> ScenarioReport:
    net = fixture.elec
    gnet = fixture.gas
    dt_h = net.time_grid.dt_hours
    edec = result.elec_decision
    if edec is None or result.gas_decision is None:
        raise ScenarioError("coordination produced no decisions")

    # reporting solves at tight tolerance on the final consensus point, so
    # the published numbers are free of the last iteration's loose tolerance;
    # the gas side is audited against the settled power-side schedule
    request = result.z
    if elec_agent is not None:
        request = elec_agent.solve(result.z, result.lam, result.rho,
                                   REPORT_TOLERANCE)
        edec = elec_agent.last_decision
    gdec, sol, h, info = gasmod.solve_response(gnet, units, request, init,
                                               fixture.penalties.kappa_S,
                                               tau=REPORT_TOLERANCE)
    demand = np.array([b.demand_series for b in net.buses])
    total_demand = float(demand.sum())
    shed = 100.0 * float((demand - edec.p_served).sum()) / total_demand
    shed = max(shed, 0.0)

    util = {}
    for kind_name in sorted({r.kind for r in net.renewables}):
        rows = [i for i, r in enumerate(net.renewables) if r.kind == kind_name]
        avail = float(renewable_series[rows].sum())
        got = float(edec.p_renew[rows].sum())
        util[kind_name] = 100.0 * got / avail if avail > 1e-12 else 100.0
    unit_mwh = float(edec.p_gen.sum()) * dt_h
    fuel = {u.id: float(gdec.d_fuel[u_i].sum()) * net.time_grid.dt_seconds
            for u_i, u in enumerate(units)}
    report = ScenarioReport(
        kind=kind,
        status="converged" if result.converged else "non_converged",
        shed_percent=shed,
        utilization_percent=util,
        unit_mwh=unit_mwh,
        fuel_kg=fuel,
        min_pressure_bar=float(gdec.pi_junction.min()) / PA_PER_BAR,
        max_pressure_bar=float(gdec.pi_junction.max()) / PA_PER_BAR,
        tightness=gasmod.audit_tightness(gnet, gdec),
        strong_duality_residual=gasmod.strong_duality_residual(sol, h, info),
        gas_cost=gdec.cost,
        frp=frp,
        coordination=result,
        elec_decision=edec,
        gas_decision=gdec,
        init_state=init,
        renewable_series=renewable_series)
    return report


def run_dayahead(fixture: Fixture, frp_fraction: float = 0.4,
                 mode: str = "iv", params: co.AdmmParams | None = None
                 ) -> ScenarioReport:
    net = fixture.elec
    frp = frp_requirement(fixture, frp_fraction)
    units = co.gas_units_from_fixture(fixture)
    init = _initial_state(fixture, units, frp_fraction)
    forecast = np.array([r.forecast_series for r in net.renewables]).reshape(
        len(net.renewables), net.time_grid.n_steps)
    params = params or co.AdmmParams(mode=mode)
    ea = co.ElectricAgent(net, frp, fixture.penalties)
    ga = co.GasAgent(fixture.gas, units, init, fixture.penalties.kappa_S)
    result = co.run_coordination(ea, ga, params)
    rep = _build_report("dayahead", fixture, units, init, frp, result, forecast,
                        elec_agent=ea)
    rep.extras["frp_fraction"] = frp_fraction
    return rep


def run_realtime(fixture: Fixture, dayahead: ScenarioReport,
                 realization: RealizationScenario, mode: str = "iv",
                 params: co.AdmmParams | None = None,
                 gas_override=None) -> ScenarioReport:
    net = fixture.elec
    realization.check_bound(fixture, dayahead.frp)
    realized = realization.realized_series(fixture)
    da = dayahead.elec_decision
    p_lo = da.p_gen - da.r_dn
    p_hi = da.p_gen + da.r_up
    units = co.gas_units_from_fixture(fixture)
    gnet = fixture.gas if gas_override is None else gas_override
    params = params or co.AdmmParams(mode=mode)
    # real-time redispatch stays inside the day-ahead FRP band; the upward
    # requirement is consumed by the materialized deviation, but the system
    # must still hold downward capability in case the deviation recedes
    frp_rt = elec.FrpRequirement(r_up=np.zeros_like(dayahead.frp.r_up),
                                 r_dn=dayahead.frp.r_dn)
    ea = co.ElectricAgent(net, frp_rt, fixture.penalties,
                          p_bounds=(p_lo, p_hi), renewable_series=realized)
    ga = co.GasAgent(gnet, units, dayahead.init_state,
                     fixture.penalties.kappa_S)
    result = co.run_coordination(ea, ga, params)
    fx = fixture if gas_override is None else Fixture(
        elec=fixture.elec, gas=gnet, coupling=fixture.coupling,
        penalties=fixture.penalties)
    rep = _build_report("realtime", fixture=fx, units=units,
                        init=dayahead.init_state, frp=dayahead.frp,
                        result=result, renewable_series=realized,
                        elec_agent=ea)
    rep.extras["realization"] = realization.name
    return rep


def diameter_whatif(fixture: Fixture, scale: float,
                    realization: RealizationScenario,
                    dayahead: ScenarioReport | None = None,
                    frp_fraction: float = 0.4, mode: str = "iv"
                    ) -> ScenarioReport:
    """Real-time re-run with pipe diameters scaled, day-ahead kept as-is."""
    if scale <= 0:
        raise ScenarioError("diameter scale must be positive")
    if dayahead is None:
        dayahead = run_dayahead(fixture, frp_fraction, mode=mode)
    scaled = scale_pipe_diameters(fixture.gas, scale)
    rep = run_realtime(fixture, dayahead, realization, mode=mode,
                       gas_override=scaled)
    rep.kind = "whatif_diameter"
    rep.extras["scale"] = scale
    return rep


def frp_sweep(fixture: Fixture, fractions, mode: str = "iv") -> list:
    fractions = list(fractions)
    if sorted(fractions) != fractions:
        raise ScenarioError("sweep fractions must be sorted ascending")
    reports = []
    for phi in fractions:
        rep = run_dayahead(fixture, phi, mode=mode)
        rep.kind = "sweep_point"
        reports.append(rep)
    return reports


def compare_admm(fixture: Fixture, frp_fraction: float = 0.4,
                 realization: RealizationScenario | None = None,
                 params_iv: co.AdmmParams | None = None,
                 params_classic: co.AdmmParams | None = None) -> dict:
    """Benchmark the two coordination modes on the same scenario.

    With a realization the benchmark runs the real-time redispatch (the case
    with genuine disagreement between the operators); otherwise it times the
    day-ahead negotiation.
    """
    if realization is not None:
        da = run_dayahead(fixture, frp_fraction)
        rep_iv = run_realtime(fixture, da, realization,
                              params=params_iv or co.AdmmParams(mode="iv"))
        rep_cl = run_realtime(fixture, da, realization,
                              params=params_classic
                              or co.AdmmParams(mode="classic"))
    else:
        rep_iv = run_dayahead(fixture, frp_fraction,
                              params=params_iv or co.AdmmParams(mode="iv"))
        rep_cl = run_dayahead(fixture, frp_fraction,
                              params=params_classic
                              or co.AdmmParams(mode="classic"))
    x_iv, x_cl = rep_iv.coordination.z, rep_cl.coordination.z
    diff = co.relative_errors(x_iv, x_cl)
    return {
        "iv": rep_iv,
        "classic": rep_cl,
        "iterations_iv": rep_iv.coordination.iterations,
        "iterations_classic": rep_cl.coordination.iterations,
        "wall_iv_s": rep_iv.coordination.wall_time_s,
        "wall_classic_s": rep_cl.coordination.wall_time_s,
        "max_consensus_rel_diff": float(diff.max()) if diff.size else 0.0,
    }


def write_report_csvs(fixture: Fixture, report: ScenarioReport, out_dir) -> list:
    """Emit the CSV bundle for one scenario run; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = fixture.elec
    units = co.gas_units_from_fixture(fixture)
    caps_request = report.coordination.z
    written = []

    def _p(name):
        written.append(out / name)
        return out / name

    elec.write_dispatch_csv(net, report.elec_decision, _p("dispatch.csv"))
    elec.write_demand_csv(net, report.elec_decision, _p("demand.csv"))
    gasmod.write_pressure_csv(fixture.gas, report.gas_decision, _p("pressure.csv"))
    gasmod.write_supply_csv(fixture.gas, report.gas_decision, _p("supply.csv"))
    gasmod.write_fuel_csv(fixture.gas, units, caps_request, report.gas_decision,
                          _p("fuel.csv"))
    if report.tightness is not None:
        gasmod.write_tightness_csv(report.tightness, _p("tightness.csv"))
    co.write_iteration_csv(report.coordination, _p("iterations.csv"))

    with open(_p("summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        w.writerow(["kind", report.kind])
        w.writerow(["status", report.status])
        w.writerow(["shed_percent", f"{report.shed_percent:.6f}"])
        for kind, val in sorted(report.utilization_percent.items()):
            w.writerow([f"utilization_{kind}_percent", f"{val:.4f}"])
        w.writerow(["unit_mwh", f"{report.unit_mwh:.4f}"])
        for uid, kg in sorted(report.fuel_kg.items()):
            w.writerow([f"fuel_{uid}_kg", f"{kg:.3f}"])
        w.writerow(["min_pressure_bar", f"{report.min_pressure_bar:.4f}"])
        w.writerow(["max_pressure_bar", f"{report.max_pressure_bar:.4f}"])
        w.writerow(["gas_cost", f"{report.gas_cost:.4f}"])
        w.writerow(["strong_duality_residual",
                    f"{report.strong_duality_residual:.3e}"])
        w.writerow(["iterations", report.coordination.iterations])

    # plot-data file: plain x/y series, no rendering dependency
    n = net.time_grid.n_steps
    demand = np.array([b.demand_series for b in net.buses]).sum(axis=0)
    served = report.elec_decision.p_served.sum(axis=0)
    minp = report.gas_decision.pi_junction.min(axis=0) / PA_PER_BAR
    with open(_p("plot_data.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "demand_MW", "served_MW", "min_pressure_bar"])
        for t in range(n):
            w.writerow([t, f"{demand[t]:.4f}", f"{served[t]:.4f}",
                        f"{minp[t]:.4f}"])
    return written


def write_sweep_csv(fractions, reports, path) -> None:
    kinds = sorted({k for r in reports for k in r.utilization_percent})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["frp_fraction", "fuel_total_kg", "min_pressure_bar",
                  "unit_mwh", "shed_percent"]
        header += [f"utilization_{k}_percent" for k in kinds]
        w.writerow(header)
        for phi, rep in zip(fractions, reports):
            row = [f"{phi:.2f}", f"{sum(rep.fuel_kg.values()):.3f}",
                   f"{rep.min_pressure_bar:.4f}", f"{rep.unit_mwh:.4f}",
                   f"{rep.shed_percent:.6f}"]
            row += [f"{rep.utilization_percent.get(k, 100.0):.4f}" for k in kinds]
            w.writerow(row)


def write_benchmark_csv(bench: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "iterations", "wall_time_s", "converged"])
        w.writerow(["iv", bench["iterations_iv"], f"{bench['wall_iv_s']:.3f}",
                    bench["iv"].status == "converged"])
        w.writerow(["classic", bench["iterations_classic"],
                    f"{bench['wall_classic_s']:.3f}",
                    bench["classic"].status == "converged"])
        w.writerow(["max_consensus_rel_diff",
                    f"{bench['max_consensus_rel_diff']:.6f}", "", ""])
