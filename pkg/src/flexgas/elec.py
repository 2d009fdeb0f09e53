"""Electricity day-ahead dispatch problem: DC power flow, ramping reserves,
load shedding and the consensus-augmented variant used inside the
distributed coordination loop.

All quantities are MW; costs are in $ with per-step energy scaling by the
grid's dt in hours.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import conic
from .netmodel import ElectricNetwork, PenaltyConfig


class ElecError(RuntimeError):
    pass


@dataclass(frozen=True)
class FrpRequirement:
    """System-wide up/down ramping-reserve requirement per step (MW per dt)."""
    r_up: np.ndarray
    r_dn: np.ndarray

    @classmethod
    def from_fraction(cls, net: ElectricNetwork, fraction: float) -> "FrpRequirement":
        if fraction < 0:
            raise ElecError("FRP fraction must be >= 0")
        n = net.time_grid.n_steps
        level = fraction * net.peak_demand * net.time_grid.dt_hours
        return cls(r_up=np.full(n, level), r_dn=np.full(n, level))

    @classmethod
    def zero(cls, net: ElectricNetwork) -> "FrpRequirement":
        n = net.time_grid.n_steps
        return cls(r_up=np.zeros(n), r_dn=np.zeros(n))


@dataclass
class ElecDecision:
    p_gen: np.ndarray       # (G, N) MW
    p_served: np.ndarray    # (B, N) MW
    p_renew: np.ndarray     # (R, N) MW dispatched renewables
    p_line: np.ndarray      # (L, N) MW
    theta: np.ndarray       # (B, N) rad
    r_up: np.ndarray        # (G, N) MW per dt
    r_dn: np.ndarray        # (G, N)
    objective: float
    status: str


def build_elec_problem(net: ElectricNetwork, frp: FrpRequirement,
                       penalties: PenaltyConfig,
                       consensus: tuple | None = None,
                       p_bounds: tuple | None = None,
                       renewable_series: np.ndarray | None = None) -> conic.ConicProgram:
    """Assemble the dispatch program.

    consensus: optional (z, lam, rho) with z, lam shaped (n_gas_fired, N);
    adds <lam, x - z> + rho/2 ||x - z||^2 over gas-fired dispatch.
    p_bounds: optional (lo, hi) arrays (G, N) tightening generation bounds,
    used for the real-time re-dispatch inside committed ramp envelopes.
    renewable_series: optional (R, N) override of the forecasts (realized).
    """
    grid = net.time_grid
    n = grid.n_steps
    dt_h = grid.dt_hours
    gens = net.generators
    buses = net.buses
    lines = net.lines
    renews = net.renewables
    G, B, L, R = len(gens), len(buses), len(lines), len(renews)
    bus_ix = net.bus_index()

    prog = conic.ConicProgram("elec_dispatch")

    p_lo = np.repeat([[g.p_min] for g in gens], n, axis=1).astype(float)
    p_hi = np.repeat([[g.p_max] for g in gens], n, axis=1).astype(float)
    if p_bounds is not None:
        p_lo = np.maximum(p_lo, p_bounds[0])
        p_hi = np.minimum(p_hi, p_bounds[1])
        if (p_lo > p_hi + 1e-9).any():
            raise ElecError("inconsistent real-time generation bounds")
    pg = prog.add_vars("p_gen", G * n, lb=p_lo.ravel(), ub=p_hi.ravel()).reshape(G, n)

    demand = np.array([b.demand_series for b in buses])
    pd = prog.add_vars("p_served", B * n, lb=0.0, ub=demand.ravel()).reshape(B, n)

    forecast = (np.array([r.forecast_series for r in renews]).reshape(R, n)
                if R else np.zeros((0, n)))
    if renewable_series is not None:
        forecast = np.asarray(renewable_series, dtype=float).reshape(R, n)
    pr = prog.add_vars("p_renew", R * n, lb=0.0, ub=forecast.ravel()).reshape(R, n)

    flim = (np.array([l.flow_limit for l in lines], dtype=float).reshape(L, 1)
            * np.ones((1, n)))
    pl = prog.add_vars("p_line", L * n, lb=(-flim).ravel(),
                       ub=flim.ravel()).reshape(L, n)

    # reference bus (lowest index) pinned to zero angle
    th_lo = np.full((B, n), -np.inf)
    th_hi = np.full((B, n), np.inf)
    th_lo[0, :] = th_hi[0, :] = 0.0
    th = prog.add_vars("theta", B * n, lb=th_lo.ravel(), ub=th_hi.ravel()).reshape(B, n)

    fu_hi = np.array([[g.frp_up_max] for g in gens]) * np.ones((1, n))
    fd_hi = np.array([[g.frp_dn_max] for g in gens]) * np.ones((1, n))
    ru = prog.add_vars("r_up", G * n, lb=0.0, ub=fu_hi.ravel()).reshape(G, n)
    rd = prog.add_vars("r_dn", G * n, lb=0.0, ub=fd_hi.ravel()).reshape(G, n)

    steps = np.arange(n)

    # nodal balance per (bus, step)
    rows, cols, vals = [], [], []
    for g_i, g in enumerate(gens):
        b = bus_ix[g.bus]
        rows.append(b * n + steps); cols.append(pg[g_i]); vals.append(np.ones(n))
    for r_i, r in enumerate(renews):
        b = bus_ix[r.bus]
        rows.append(b * n + steps); cols.append(pr[r_i]); vals.append(np.ones(n))
    for b in range(B):
        rows.append(b * n + steps); cols.append(pd[b]); vals.append(-np.ones(n))
    for l_i, l in enumerate(lines):
        b_fr, b_to = bus_ix[l.from_bus], bus_ix[l.to_bus]
        rows.append(b_fr * n + steps); cols.append(pl[l_i]); vals.append(-np.ones(n))
        rows.append(b_to * n + steps); cols.append(pl[l_i]); vals.append(np.ones(n))
    prog.add_chunk("balance", "eq", np.concatenate(rows), np.concatenate(cols),
                   np.concatenate(vals), np.zeros(B * n))

    # DC flow: x_l * p_l - theta_fr + theta_to = 0
    if L:
        rows, cols, vals = [], [], []
        for l_i, l in enumerate(lines):
            b_fr, b_to = bus_ix[l.from_bus], bus_ix[l.to_bus]
            rows += [l_i * n + steps] * 3
            cols += [pl[l_i], th[b_fr], th[b_to]]
            vals += [np.full(n, l.reactance), -np.ones(n), np.ones(n)]
        prog.add_chunk("dc_flow", "eq", np.concatenate(rows), np.concatenate(cols),
                       np.concatenate(vals), np.zeros(L * n))

    # system FRP requirements (sum over units >= R, written as <=)
    prog.add_chunk("frp_up", "ineq", np.tile(steps, G), ru.ravel(),
                   -np.ones(G * n), -np.asarray(frp.r_up, dtype=float))
    prog.add_chunk("frp_dn", "ineq", np.tile(steps, G), rd.ravel(),
                   -np.ones(G * n), -np.asarray(frp.r_dn, dtype=float))

    # headroom: p + r_up <= p_max ; -(p - r_dn) <= -p_min
    prog.add_chunk("headroom_up", "ineq",
                   np.tile(np.arange(G * n), 2),
                   np.concatenate([pg.ravel(), ru.ravel()]),
                   np.concatenate([np.ones(G * n), np.ones(G * n)]),
                   p_hi.ravel())
    prog.add_chunk("headroom_dn", "ineq",
                   np.tile(np.arange(G * n), 2),
                   np.concatenate([pg.ravel(), rd.ravel()]),
                   np.concatenate([-np.ones(G * n), np.ones(G * n)]),
                   -p_lo.ravel())

    # inter-step ramp limits
    if n > 1:
        m = G * (n - 1)
        r_rows = np.arange(m)
        c_next = pg[:, 1:].ravel()
        c_prev = pg[:, :-1].ravel()
        ramp = np.repeat([g.ramp_per_step for g in gens], n - 1)
        prog.add_chunk("ramp_up", "ineq", np.tile(r_rows, 2),
                       np.concatenate([c_next, c_prev]),
                       np.concatenate([np.ones(m), -np.ones(m)]), ramp)
        prog.add_chunk("ramp_dn", "ineq", np.tile(r_rows, 2),
                       np.concatenate([c_next, c_prev]),
                       np.concatenate([-np.ones(m), np.ones(m)]), ramp)

    # objective: generation cost + shed penalty (+ consensus terms)
    for g_i, g in enumerate(gens):
        a, b, c = g.cost_quad
        if a:
            prog.obj_square(pg[g_i], np.full(n, a * dt_h))
        prog.obj_linear(pg[g_i], np.full(n, b * dt_h))
        prog.obj_const += c * dt_h * n
    prog.obj_linear(pd.ravel(), np.full(B * n, -penalties.kappa_E * dt_h))
    prog.obj_const += penalties.kappa_E * dt_h * float(demand.sum())

    if consensus is not None:
        z, lam, rho = consensus
        gas_rows = [i for i, g in enumerate(gens) if g.is_gas_fired]
        z = np.asarray(z, dtype=float).reshape(len(gas_rows), n)
        lam = np.asarray(lam, dtype=float).reshape(len(gas_rows), n)
        for k, g_i in enumerate(gas_rows):
            # <lam, x-z> + rho/2 (x-z)^2, constants dropped
            prog.obj_linear(pg[g_i], lam[k] - rho * z[k])
            prog.obj_square(pg[g_i], np.full(n, rho / 2.0))
    return prog


def extract_decision(net: ElectricNetwork, sol: conic.Solution) -> ElecDecision:
    n = net.time_grid.n_steps
    G, B = len(net.generators), len(net.buses)
    L, R = len(net.lines), len(net.renewables)
    return ElecDecision(
        p_gen=sol.value("p_gen").reshape(G, n),
        p_served=sol.value("p_served").reshape(B, n),
        p_renew=sol.value("p_renew").reshape(R, n),
        p_line=sol.value("p_line").reshape(L, n),
        theta=sol.value("theta").reshape(B, n),
        r_up=sol.value("r_up").reshape(G, n),
        r_dn=sol.value("r_dn").reshape(G, n),
        objective=sol.objective,
        status=sol.status)


def solve_elec(net: ElectricNetwork, frp: FrpRequirement, penalties: PenaltyConfig,
               consensus=None, settings: conic.SolveSettings | None = None,
               p_bounds=None, renewable_series=None) -> ElecDecision:
    prog = build_elec_problem(net, frp, penalties, consensus=consensus,
                              p_bounds=p_bounds, renewable_series=renewable_series)
    sol = conic.solve(prog, settings or conic.SolveSettings())
    if not sol.ok:
        raise ElecError(f"electricity dispatch solve failed: {sol.status}")
    return extract_decision(net, sol)


def gas_fired_slice(net: ElectricNetwork, decision: ElecDecision) -> np.ndarray:
    """Dispatch matrix of the gas-fired units, the x of the consensus loop."""
    rows = [i for i, g in enumerate(net.generators) if g.is_gas_fired]
    return decision.p_gen[rows, :].copy()


def x_update(net: ElectricNetwork, frp: FrpRequirement, penalties: PenaltyConfig,
             z: np.ndarray, lam: np.ndarray, rho: float, tau: float,
             p_bounds=None, renewable_series=None):
    """One electricity-side minimization of the augmented Lagrangian."""
    settings = conic.SolveSettings(rel_gap_tolerance=conic.clamp_tolerance(tau))
    decision = solve_elec(net, frp, penalties, consensus=(z, lam, rho),
                          settings=settings, p_bounds=p_bounds,
                          renewable_series=renewable_series)
    return decision, gas_fired_slice(net, decision)


def write_dispatch_csv(net: ElectricNetwork, decision: ElecDecision, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "unit", "p_MW", "r_up_MW", "r_dn_MW"])
        for t in range(net.time_grid.n_steps):
            for g_i, g in enumerate(net.generators):
                w.writerow([t, g.id, f"{decision.p_gen[g_i, t]:.6f}",
                            f"{decision.r_up[g_i, t]:.6f}",
                            f"{decision.r_dn[g_i, t]:.6f}"])


def write_demand_csv(net: ElectricNetwork, decision: ElecDecision, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "bus", "demand_MW", "served_MW"])
        for t in range(net.time_grid.n_steps):
            for b_i, b in enumerate(net.buses):
                w.writerow([t, b.id, f"{b.demand_series[t]:.6f}",
                            f"{decision.p_served[b_i, t]:.6f}"])
