"""Gas-side tests: steady state, relaxation, tightening and duality."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexgas import conic, gas as gasmod
from flexgas.gas import (GasDecision, GasError, GasUnit, PipeGrid,
                         audit_tightness, fuel_caps, linepack,
                         mass_balance_residual, solve_response,
                         steady_state_init, z_update)
from flexgas.netmodel import PA_PER_BAR

from conftest import single_pipe_gas


def _steady_init(gas, fuel_j2=0.0):
    heat0 = np.array([0.0, gas.heat_loads[0].demand_series[0]])
    fuel0 = np.array([0.0, fuel_j2])
    return steady_state_init(gas, heat0, fuel0)


def test_steady_state_uniform_flow_and_momentum():
    gas = single_pipe_gas(pr_from=(30.0, 60.0), pr_to=(30.0, 60.0))
    init = _steady_init(gas)
    demand = gas.heat_loads[0].demand_series[0]
    assert np.allclose(init.f_nodes, demand, atol=1e-5)
    # junction pressures respect the bands
    for j, p in zip(gas.junctions, init.pi_junctions):
        assert j.pr_min - 1.0 <= p <= j.pr_max + 1.0


def test_steady_state_matches_marching_oracle():
    """Independent per-segment recursion reproduces the pressure profile.

    In steady state each segment obeys pi_b = pi_a - kg * f^2 / pi_a (bar).
    Starting from the solved inlet pressure, marching down the pipe must land
    on the same node pressures the program found.
    """
    gas = single_pipe_gas(pr_from=(30.0, 60.0), pr_to=(30.0, 60.0))
    init = _steady_init(gas)
    pipe = gas.pipes[0]
    c3b = pipe.c3 * PA_PER_BAR * PA_PER_BAR
    kg = pipe.dx / c3b
    f = init.f_nodes[0]
    pi = init.pi_nodes[0] / PA_PER_BAR
    for node in range(1, pipe.n_nodes):
        pi = pi - kg * f * f / pi
        assert init.pi_nodes[node] / PA_PER_BAR == pytest.approx(pi, abs=1e-4)


def test_steady_state_infeasible_demand():
    gas = single_pipe_gas(heat=(500.0, 500.0, 500.0), q_max=600.0)
    with pytest.raises(GasError):
        _steady_init(gas)


def test_fuel_caps_clips_negative_requests():
    units = [GasUnit("g1", "j2", 0.05), GasUnit("g2", "j2", 0.08)]
    x = np.array([[10.0, -5.0], [0.0, 20.0]])
    caps = fuel_caps(units, x)
    assert np.allclose(caps, [[0.5, 0.0], [0.0, 1.6]])


@given(hr=st.floats(min_value=1e-3, max_value=1.0),
       x=st.lists(st.floats(min_value=-50, max_value=200), min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_fuel_caps_property(hr, x):
    caps = fuel_caps([GasUnit("g", "j2", hr)], np.array([x]))
    assert (caps >= 0.0).all()
    assert np.allclose(caps[0], hr * np.maximum(np.asarray(x), 0.0))


def test_relaxed_response_serves_deliverable_request():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "j2", 0.05)]
    request = np.full((1, 3), 60.0)  # 3 kg/s of fuel on top of the heat load
    init = _steady_init(gas, fuel_j2=0.05 * 60.0)
    dec, sol, h, info = solve_response(gas, units, request, init, 1e4)
    caps = fuel_caps(units, request)
    assert np.allclose(dec.d_fuel, caps, atol=1e-5)
    assert mass_balance_residual(gas, dec, init) < 1e-6
    for j_i, j in enumerate(gas.junctions):
        assert (dec.pi_junction[j_i] >= j.pr_min - 1.0).all()
        assert (dec.pi_junction[j_i] <= j.pr_max + 1.0).all()


def test_tightening_closes_the_lift():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "j2", 0.05)]
    request = np.full((1, 3), 60.0)
    init = _steady_init(gas, fuel_j2=3.0)
    dec, sol, h, info = solve_response(gas, units, request, init, 1e4)
    rep = audit_tightness(gas, dec)
    assert rep.max_lift_error <= 1e-4
    assert rep.mean_ratio >= 5.0
    # the audited 2x2 matrices stay PSD: relaxation never violated
    assert rep.lam2.min() >= -1e-6


def test_strong_duality_band_holds():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "j2", 0.05)]
    request = np.full((1, 3), 60.0)
    init = _steady_init(gas, fuel_j2=3.0)
    dec, sol, h, info = solve_response(gas, units, request, init, 1e4)
    resid = gasmod.strong_duality_residual(sol, h, info)
    assert resid <= 1e-6 * (1.0 + abs(dec.cost))


def test_mechanical_dual_attains_primal_optimum():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "j2", 0.05)]
    request = np.full((1, 3), 60.0)
    init = _steady_init(gas, fuel_j2=3.0)
    prog, h = gasmod.build_primal_relaxed(gas, units, request, init, 1e4)
    primal = conic.solve(prog)
    dual = conic.solve(gasmod.build_dual(gas, units, request, init, 1e4))
    assert primal.ok and dual.ok
    assert dual.objective == pytest.approx(
        primal.objective, abs=1e-5 * (1.0 + abs(primal.objective)))


def test_restoration_keeps_linepack():
    gas = single_pipe_gas(heat=(16.0, 16.0, 16.0))
    init = _steady_init(gas)
    dec, sol, h, info = solve_response(gas, [], np.zeros((0, 3)), init, 1e4)
    lp0 = linepack(gas, init.pi_nodes)
    lp_end = linepack(gas, dec.pi_nodes[:, -1])
    assert lp_end >= lp0 - 1e-6 * lp0


def test_undeliverable_request_is_clipped():
    gas = single_pipe_gas(q_max=20.0)
    units = [GasUnit("gg", "j2", 0.05)]
    request = np.full((1, 3), 2000.0)  # 100 kg/s of fuel: beyond the pipe
    init = _steady_init(gas)
    dec, sol, h, info = solve_response(gas, units, request, init, 1e4)
    caps = fuel_caps(units, request)
    assert dec.d_fuel.sum() < caps.sum() - 1.0
    assert (dec.d_fuel >= -1e-7).all()


def test_z_update_consensus_pull():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "j2", 0.05)]
    request = np.full((1, 3), 40.0)
    init = _steady_init(gas, fuel_j2=2.0)
    lam = np.zeros((1, 3))
    dec, z, sol, h, info = z_update(gas, units, request, init, 1e4,
                                    lam, rho=1e5, tau=1e-9)
    assert np.allclose(z, 40.0, atol=1e-2)


def test_z_update_rejects_bad_shape():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "j2", 0.05)]
    init = _steady_init(gas)
    with pytest.raises(GasError, match="shape"):
        z_update(gas, units, np.zeros((2, 3)), init, 1e4,
                 np.zeros((1, 3)), 1.0, 1e-6)


def test_unknown_junction_rejected():
    gas = single_pipe_gas()
    units = [GasUnit("gg", "nowhere", 0.05)]
    init = _steady_init(gas)
    with pytest.raises(GasError, match="unknown junction"):
        gasmod.build_primal_relaxed(gas, units, np.zeros((1, 3)), init, 1e4)


def _synthetic_decision(gas, pi_bar, f_val, gamma_val):
    grid = PipeGrid.build(gas)
    n = gas.time_grid.n_steps
    return GasDecision(
        q_supply=np.zeros((1, n)),
        d_fuel=np.zeros((0, n)),
        pi_junction=np.full((2, n), pi_bar * PA_PER_BAR),
        pi_nodes=np.full((grid.n_nodes, n), pi_bar * PA_PER_BAR),
        f_nodes=np.full((grid.n_nodes, n), f_val),
        gamma=np.full((grid.n_segs, n - 1), gamma_val),
        cost=0.0, status="optimal")


def test_tightness_audit_eigen_oracle():
    """Frozen 2x2 eigen checks: [[4, 2], [2, 1]] is rank one, [[4, 0], [0, 1]]
    is not, and the lift error flags only the second case."""
    gas = single_pipe_gas()
    exact = _synthetic_decision(gas, pi_bar=4.0, f_val=2.0, gamma_val=1.0)
    rep = audit_tightness(gas, exact)
    assert rep.lam1 == pytest.approx(5.0)
    assert np.abs(rep.lam2).max() < 1e-9
    assert rep.max_lift_error < 1e-12

    loose = _synthetic_decision(gas, pi_bar=4.0, f_val=0.0, gamma_val=1.0)
    rep2 = audit_tightness(gas, loose)
    assert rep2.lam1 == pytest.approx(4.0)
    assert rep2.lam2 == pytest.approx(1.0)
    assert rep2.max_lift_error == pytest.approx(1.0)


def test_gamma_bar_oracle():
    gas = single_pipe_gas()
    grid = PipeGrid.build(gas)
    init = gasmod.GasInitialState(
        pi_nodes=np.array([40.0, 39.0, 38.0]) * PA_PER_BAR,
        f_nodes=np.array([10.0, 10.0, 10.0]),
        pi_junctions=np.array([40.0, 38.0]) * PA_PER_BAR)
    gbar = init.gamma_bar(grid, gas)
    assert gbar == pytest.approx([100.0 / 40.0, 100.0 / 39.0])


def test_linepack_change_identity():
    """dt * (supplied - delivered) equals the linepack change exactly."""
    gas = single_pipe_gas(heat=(12.0, 18.0, 15.0))
    init = _steady_init(gas)
    dec, sol, h, info = solve_response(gas, [], np.zeros((0, 3)), init, 1e4)
    assert mass_balance_residual(gas, dec, init) < 1e-7
