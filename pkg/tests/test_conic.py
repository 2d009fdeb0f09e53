"""Solver-layer tests: known-answer programs, dualization and tolerances."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexgas import conic
from flexgas.conic import (ConicError, ConicProgram, SolveSettings,
                           clamp_tolerance, dualize_conic, dualize_linear)


def _solve(prog, tol=1e-9):
    return conic.solve(prog, SolveSettings(rel_gap_tolerance=tol))


def test_lp_known_answer():
    # min x + 2y  s.t. x + y >= 3, 0 <= x <= 2, 0 <= y <= 5  ->  (2, 1), obj 4
    prog = ConicProgram("lp")
    x = prog.add_vars("x", 1, lb=0.0, ub=2.0)
    y = prog.add_vars("y", 1, lb=0.0, ub=5.0)
    prog.add_ineq("cover", np.concatenate([x, y]), [-1.0, -1.0], -3.0)
    prog.obj_linear(np.concatenate([x, y]), [1.0, 2.0])
    sol = _solve(prog)
    assert sol.ok
    assert sol.value("x")[0] == pytest.approx(2.0, abs=1e-6)
    assert sol.value("y")[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(4.0, abs=1e-6)
    # covering constraint is tight, its multiplier prices the marginal unit
    assert sol.dual("cover")[0] == pytest.approx(2.0, abs=1e-5)


def test_qp_known_answer():
    # min (x-3)^2 = x^2 - 6x + 9 over 0 <= x <= 2  ->  x = 2, obj 1
    prog = ConicProgram("qp")
    x = prog.add_vars("x", 1, lb=0.0, ub=2.0)
    prog.obj_square(x, [1.0])
    prog.obj_linear(x, [-6.0])
    prog.obj_const = 9.0
    sol = _solve(prog)
    assert sol.ok
    assert sol.value("x")[0] == pytest.approx(2.0, abs=1e-6)
    assert sol.objective == pytest.approx(1.0, abs=1e-6)


def test_soc_known_answer():
    # min t  s.t. ||(x - 3, y - 4)|| <= t, x = y = 0  ->  t = 5
    prog = ConicProgram("soc")
    t = prog.add_vars("t", 1, lb=0.0)
    x = prog.add_vars("x", 1, lb=0.0, ub=0.0)
    y = prog.add_vars("y", 1, lb=0.0, ub=0.0)
    prog.add_soc((t, [1.0], 0.0),
                 [(x, [1.0], -3.0), (y, [1.0], -4.0)])
    prog.obj_linear(t, [1.0])
    sol = _solve(prog)
    assert sol.ok
    assert sol.value("t")[0] == pytest.approx(5.0, abs=1e-6)


def test_infeasible_status():
    prog = ConicProgram("bad")
    x = prog.add_vars("x", 1, lb=0.0, ub=1.0)
    prog.add_ineq("force", x, [-1.0], -2.0)  # x >= 2 against ub 1
    sol = _solve(prog)
    assert not sol.ok
    assert sol.status == "infeasible"


def test_maximize_rejects_quadratic():
    prog = ConicProgram("max", maximize=True)
    x = prog.add_vars("x", 1, lb=0.0, ub=1.0)
    prog.obj_square(x, [1.0])
    with pytest.raises(ConicError):
        conic.solve(prog)


def test_negative_quadratic_coefficient_rejected():
    prog = ConicProgram()
    x = prog.add_vars("x", 1)
    with pytest.raises(ConicError):
        prog.obj_square(x, [-1.0])


def test_duplicate_block_rejected():
    prog = ConicProgram()
    prog.add_vars("x", 1)
    with pytest.raises(ConicError):
        prog.add_vars("x", 2)


def test_clamp_tolerance_bounds():
    assert clamp_tolerance(1e-30) == conic.TAU_MIN
    assert clamp_tolerance(10.0) == conic.TAU_MAX
    assert clamp_tolerance(1e-4) == 1e-4


def test_solve_settings_validation():
    with pytest.raises(ConicError):
        SolveSettings(rel_gap_tolerance=0.0)
    with pytest.raises(ConicError):
        SolveSettings(rel_gap_tolerance=2.0)


def _transport_lp():
    """2 plants -> 2 markets, supplies (4, 6), demands (5, 5)."""
    cost = np.array([1.0, 3.0, 2.0, 1.0])  # (p1m1, p1m2, p2m1, p2m2)
    prog = ConicProgram("transport")
    x = prog.add_vars("x", 4, lb=0.0)
    prog.add_ineq("supply_p1", x[:2], [1.0, 1.0], 4.0)
    prog.add_ineq("supply_p2", x[2:], [1.0, 1.0], 6.0)
    prog.add_ineq("demand_m1", [x[0], x[2]], [-1.0, -1.0], -5.0)
    prog.add_ineq("demand_m2", [x[1], x[3]], [-1.0, -1.0], -5.0)
    prog.obj_linear(x, cost)
    return prog, cost


def test_dualize_linear_matches_primal_and_hand_dual():
    prog, cost = _transport_lp()
    primal = _solve(prog)
    assert primal.ok
    # optimal plan: p1 ships 4 to m1, p2 ships 1 to m1 and 5 to m2 -> 11
    assert primal.objective == pytest.approx(11.0, abs=1e-6)

    auto = _solve(dualize_linear(prog))
    assert auto.ok

    # hand-coded dual of the same transport problem:
    # max 5 u1 + 5 u2 - 4 v1 - 6 v2  s.t.  u_m - v_p <= c_pm,  u, v >= 0
    hand = ConicProgram("hand_dual", maximize=True)
    u = hand.add_vars("u", 2, lb=0.0)
    v = hand.add_vars("v", 2, lb=0.0)
    for p in range(2):
        for m in range(2):
            hand.add_ineq("feas", [u[m], v[p]], [1.0, -1.0], cost[2 * p + m])
    hand.obj_linear(np.concatenate([u, v]), [5.0, 5.0, -4.0, -6.0])
    hand_sol = _solve(hand)
    assert hand_sol.ok

    # the mechanical dual governs; the hand dual cross-checks it
    assert auto.objective == pytest.approx(primal.objective, abs=1e-6)
    assert hand_sol.objective == pytest.approx(auto.objective, abs=1e-6)


def test_dualize_conic_strong_duality():
    # min x + y  s.t. ||(x - 2, y - 2)|| <= 1 via an SOC row with fixed t
    prog = ConicProgram("ball")
    t = prog.add_vars("t", 1, lb=1.0, ub=1.0)
    x = prog.add_vars("x", 1)
    y = prog.add_vars("y", 1)
    prog.add_soc((t, [1.0], 0.0), [(x, [1.0], -2.0), (y, [1.0], -2.0)])
    prog.obj_linear(np.concatenate([x, y]), [1.0, 1.0])
    primal = _solve(prog)
    dual = _solve(dualize_conic(prog))
    assert primal.ok and dual.ok
    assert primal.objective == pytest.approx(4.0 - np.sqrt(2.0), abs=1e-6)
    assert dual.objective == pytest.approx(primal.objective, abs=1e-6)


def test_append_dual_into_same_program():
    prog, _ = _transport_lp()
    opt = _solve(prog).objective
    info = conic.append_dual(prog, prog)
    cols, vals, const = info["objective"]
    # pin strong duality and re-solve; the primal part must stay optimal
    p_cols = np.arange(4)
    p_vals = np.array([1.0, 3.0, 2.0, 1.0])
    prog.add_ineq("strong_duality", np.concatenate([p_cols, cols]),
                  np.concatenate([p_vals, -vals]), const)
    prog.clear_objective()
    sol = _solve(prog)
    assert sol.ok
    assert float(p_vals @ sol.x[p_cols]) == pytest.approx(opt, abs=1e-5)


def test_dualize_rejects_quadratic_objective():
    prog = ConicProgram()
    x = prog.add_vars("x", 1, lb=0.0, ub=1.0)
    prog.obj_square(x, [1.0])
    with pytest.raises(ConicError):
        dualize_linear(prog)


def test_tolerance_monotonicity():
    """Looser duality-gap tolerances never give a better gap certificate."""
    gaps = []
    for tau in (1e-1, 1e-3, 1e-6):
        prog, _ = _transport_lp()
        sol = conic.solve(prog, SolveSettings(rel_gap_tolerance=tau))
        assert sol.ok
        assert sol.rel_gap <= tau * 1.01 + 1e-12
        gaps.append(sol.rel_gap)
    assert gaps[2] <= gaps[0] + 1e-12


@given(c=st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=6),
       width=st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=40, deadline=None)
def test_box_lp_analytic_optimum(c, width):
    """Box-constrained LP: each coordinate sits at its cheaper bound."""
    c = np.asarray(c)
    n = c.size
    lb, ub = -width * np.ones(n), width * np.ones(n)
    prog = ConicProgram("box")
    x = prog.add_vars("x", n, lb=lb, ub=ub)
    prog.obj_linear(x, c)
    sol = _solve(prog)
    assert sol.ok
    expected = float(np.where(c >= 0, c * lb, c * ub).sum())
    assert sol.objective == pytest.approx(expected, abs=1e-5 * (1 + abs(expected)))
