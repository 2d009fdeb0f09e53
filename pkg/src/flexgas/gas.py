"""Dynamic optimal gas flow with a tight second-order-cone relaxation.

The nonlinear friction term f^2/pi in the discretized momentum equation is
lifted into a variable gamma, relaxed by the rotated-cone inequality
gamma * pi >= f^2.  The relaxed problem is paired with its mechanical conic
dual and a primal-dual objective-equality row, so that minimizing the sum of
gamma over the optimal face drives the cone to its boundary and makes the
lifted solution recoverable.

Pressures are pascal at the module boundary but the programs are assembled
with pressure in bar (and gamma in f^2-per-bar units) to keep the 2x2
tightness matrices well scaled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import conic
from .netmodel import GasNetwork, PA_PER_BAR


class GasError(RuntimeError):
    pass


@dataclass(frozen=True)
class GasUnit:
    """A gas-fired generator as seen from the gas side."""
    id: str
    junction: str
    heat_rate: float  # kg/s per MW


@dataclass(frozen=True)
class PipeGrid:
    """Flattened spatial layout over all pipes."""
    node_offset: np.ndarray  # per pipe, start into node arrays
    seg_offset: np.ndarray
    n_nodes: int
    n_segs: int

    @classmethod
    def build(cls, gas: GasNetwork) -> "PipeGrid":
        counts = np.array([p.n_nodes for p in gas.pipes], dtype=int)
        segs = counts - 1
        return cls(node_offset=np.concatenate([[0], np.cumsum(counts)[:-1]]),
                   seg_offset=np.concatenate([[0], np.cumsum(segs)[:-1]]),
                   n_nodes=int(counts.sum()), n_segs=int(segs.sum()))


@dataclass(frozen=True)
class GasInitialState:
    """Pre-horizon pipe state: node pressures (Pa) and mass flows (kg/s)."""
    pi_nodes: np.ndarray  # (n_nodes,)
    f_nodes: np.ndarray   # (n_nodes,)
    pi_junctions: np.ndarray  # (J,) Pa

    def gamma_bar(self, grid: PipeGrid, gas: GasNetwork) -> np.ndarray:
        """Lift values f^2/pi (bar units) at the left node of each segment."""
        out = np.empty(grid.n_segs)
        for p_i, pipe in enumerate(gas.pipes):
            no, so = grid.node_offset[p_i], grid.seg_offset[p_i]
            f = self.f_nodes[no:no + pipe.n_segments]
            pi_b = self.pi_nodes[no:no + pipe.n_segments] / PA_PER_BAR
            out[so:so + pipe.n_segments] = f * f / np.maximum(pi_b, 1e-9)
        return out


@dataclass
class GasDecision:
    q_supply: np.ndarray    # (S, N) kg/s
    d_fuel: np.ndarray      # (U, N) kg/s served fuel
    pi_junction: np.ndarray  # (J, N) Pa
    pi_nodes: np.ndarray    # (n_nodes, N) Pa
    f_nodes: np.ndarray     # (n_nodes, N) kg/s
    gamma: np.ndarray       # (n_segs, N-1) bar-lift units, levels 1..N-1
    cost: float             # primal objective (2a-style) value, $
    status: str


@dataclass
class DualDecision:
    """Dual values grouped by the primal constraint family they price."""
    fuel_lb: np.ndarray     # served-fuel lower bound
    fuel_ub: np.ndarray     # served-fuel upper bound (fuel request)
    balance: np.ndarray     # nodal mass balance
    tie_to: np.ndarray
    tie_fr: np.ndarray
    comp_lo: np.ndarray
    comp_hi: np.ndarray
    pressure_lb: np.ndarray
    pressure_ub: np.ndarray
    supply_lb: np.ndarray
    supply_ub: np.ndarray
    restoration: np.ndarray
    continuity: np.ndarray
    momentum: np.ndarray


@dataclass
class TightnessReport:
    lam1: np.ndarray        # (n_segs, N-1) largest eigenvalue
    lam2: np.ndarray
    ratio: np.ndarray       # log10(lam1 / max(lam2, floor))
    lift_error: np.ndarray  # |gamma - f^2/pi| / max(gamma, 1e-9)
    mean_ratio: float
    min_ratio: float
    max_lift_error: float


LAM2_FLOOR = 1e-12
DUALITY_GAP_REL = 1e-7


def _scaled_coeffs(pipe):
    c1b = pipe.c1 * PA_PER_BAR
    c2b = pipe.c2 * PA_PER_BAR
    c3b = pipe.c3 * PA_PER_BAR * PA_PER_BAR
    return c1b, c2b, c3b


def fuel_caps(units, fuel_request: np.ndarray) -> np.ndarray:
    """Upper bounds on served fuel: heat_rate * requested dispatch, >= 0."""
    x = np.maximum(np.asarray(fuel_request, dtype=float), 0.0)
    hr = np.array([u.heat_rate for u in units]).reshape(-1, 1)
    return hr * x


def build_primal_relaxed(gas: GasNetwork, units, fuel_request: np.ndarray,
                         init: GasInitialState, kappa_S: float):
    """Relaxed dynamic OGF as a conic program (min cost objective).

    fuel_request is the (n_units, N) dispatch request in MW.  Returns
    (program, handles) where handles carries index arrays and the primal
    objective as an affine (cols, vals, const) triple.
    """
    n = gas.time_grid.n_steps
    dt = gas.time_grid.dt_seconds
    grid = PipeGrid.build(gas)
    S, J, U = len(gas.suppliers), len(gas.junctions), len(units)
    jix = gas.junction_index()
    comp_j = gas.compressor_junctions()

    caps = fuel_caps(units, fuel_request)
    if caps.shape != (U, n):
        raise GasError(f"fuel_request shape {np.shape(fuel_request)} "
                       f"does not match ({U}, {n})")

    prog = conic.ConicProgram("gas_ogf")

    q_lo = np.repeat([[s.q_min] for s in gas.suppliers], n, axis=1).astype(float)
    q_hi = np.repeat([[s.q_max] for s in gas.suppliers], n, axis=1).astype(float)
    q = prog.add_vars("q", S * n, lb=q_lo.ravel(), ub=q_hi.ravel()).reshape(S, n)
    dU = prog.add_vars("dU", U * n, lb=0.0, ub=caps.ravel()).reshape(U, n)

    pj_lo = np.repeat([[j.pr_min] for j in gas.junctions], n, axis=1) / PA_PER_BAR
    pj_hi = np.repeat([[j.pr_max] for j in gas.junctions], n, axis=1) / PA_PER_BAR
    piJ = prog.add_vars("piJ", J * n, lb=pj_lo.ravel(), ub=pj_hi.ravel()).reshape(J, n)

    pi = prog.add_vars("pi", grid.n_nodes * n, lb=0.0).reshape(grid.n_nodes, n)
    f = prog.add_vars("f", grid.n_nodes * n, lb=0.0).reshape(grid.n_nodes, n)
    n_gamma_cols = max(n - 1, 0)
    gamma = prog.add_vars("gamma", grid.n_segs * n_gamma_cols,
                          lb=0.0).reshape(grid.n_segs, n_gamma_cols)

    steps = np.arange(n)
    pi0_b = init.pi_nodes / PA_PER_BAR
    gamma0 = init.gamma_bar(grid, gas)

    # nodal mass balance per (junction, step)
    heat = np.zeros((J, n))
    for h in gas.heat_loads:
        heat[jix[h.junction]] += np.asarray(h.demand_series)
    rows, cols, vals = [], [], []
    for s_i, s in enumerate(gas.suppliers):
        rows.append(jix[s.junction] * n + steps); cols.append(q[s_i]); vals.append(np.ones(n))
    for u_i, u in enumerate(units):
        if u.junction not in jix:
            raise GasError(f"gas unit {u.id}: unknown junction '{u.junction}'")
        rows.append(jix[u.junction] * n + steps); cols.append(dU[u_i]); vals.append(-np.ones(n))
    for p_i, pipe in enumerate(gas.pipes):
        no = grid.node_offset[p_i]
        j_to, j_fr = jix[pipe.to_junction], jix[pipe.from_junction]
        rows.append(j_to * n + steps); cols.append(f[no + pipe.n_segments]); vals.append(np.ones(n))
        rows.append(j_fr * n + steps); cols.append(f[no]); vals.append(-np.ones(n))
    prog.add_chunk("balance", "eq", np.concatenate(rows), np.concatenate(cols),
                   np.concatenate(vals), heat.ravel())

    # boundary pressure identities and compressor bands
    tie_to_r, tie_to_c, tie_to_v, n_tie_to = [], [], [], 0
    tie_fr_r, tie_fr_c, tie_fr_v, n_tie_fr = [], [], [], 0
    comp_pairs = []
    for p_i, pipe in enumerate(gas.pipes):
        no = grid.node_offset[p_i]
        j_to, j_fr = jix[pipe.to_junction], jix[pipe.from_junction]
        tie_to_r += [n_tie_to * n + steps] * 2
        tie_to_c += [piJ[j_to], pi[no + pipe.n_segments]]
        tie_to_v += [np.ones(n), -np.ones(n)]
        n_tie_to += 1
        if pipe.from_junction in comp_j:
            comp_pairs.append((piJ[j_fr], pi[no]))
        else:
            tie_fr_r += [n_tie_fr * n + steps] * 2
            tie_fr_c += [piJ[j_fr], pi[no]]
            tie_fr_v += [np.ones(n), -np.ones(n)]
            n_tie_fr += 1
    if n_tie_to:
        prog.add_chunk("tie_to", "eq", np.concatenate(tie_to_r),
                       np.concatenate(tie_to_c), np.concatenate(tie_to_v),
                       np.zeros(n_tie_to * n))
    if n_tie_fr:
        prog.add_chunk("tie_fr", "eq", np.concatenate(tie_fr_r),
                       np.concatenate(tie_fr_c), np.concatenate(tie_fr_v),
                       np.zeros(n_tie_fr * n))
    boost = {c.junction_id: c.boost for c in gas.compressors}
    if comp_pairs:
        r_lo, c_lo, v_lo = [], [], []
        r_hi, c_hi, v_hi = [], [], []
        k = 0
        for p_i, pipe in enumerate(gas.pipes):
            if pipe.from_junction not in comp_j:
                continue
            no = grid.node_offset[p_i]
            j_fr = jix[pipe.from_junction]
            gam = boost[pipe.from_junction]
            # piJ - pi_in <= 0
            r_lo += [k * n + steps] * 2
            c_lo += [piJ[j_fr], pi[no]]
            v_lo += [np.ones(n), -np.ones(n)]
            # pi_in - Gamma * piJ <= 0
            r_hi += [k * n + steps] * 2
            c_hi += [pi[no], piJ[j_fr]]
            v_hi += [np.ones(n), -np.full(n, gam)]
            k += 1
        prog.add_chunk("comp_lo", "ineq", np.concatenate(r_lo), np.concatenate(c_lo),
                       np.concatenate(v_lo), np.zeros(k * n))
        prog.add_chunk("comp_hi", "ineq", np.concatenate(r_hi), np.concatenate(c_hi),
                       np.concatenate(v_hi), np.zeros(k * n))

    # finite-difference continuity and lifted momentum, rows for k = 0..n-1
    ct_r, ct_c, ct_v, ct_b = [], [], [], []
    mo_r, mo_c, mo_v, mo_b = [], [], [], []
    row = 0
    for p_i, pipe in enumerate(gas.pipes):
        c1b, c2b, c3b = _scaled_coeffs(pipe)
        dx = pipe.dx
        kf_ct = dt / (c1b * dx)
        kf_mo = dx / (c2b * dt)
        kg = dx / c3b
        no, so = grid.node_offset[p_i], grid.seg_offset[p_i]
        for s_l in range(pipe.n_segments):
            a, b = no + s_l, no + s_l + 1  # left/right node
            for k in range(n):
                r = row
                # continuity (row * dt, bar):
                # (pi_b^{k+1} - pi_b^k) + (pi_a^{k+1} - pi_a^k)
                #   + kf_ct * (f_b^{k+1} - f_a^{k+1}) = 0
                rhs_ct = 0.0
                cc = [pi[b, k], pi[a, k], f[b, k], f[a, k]]
                vv = [1.0, 1.0, kf_ct, -kf_ct]
                if k == 0:
                    rhs_ct += pi0_b[b] + pi0_b[a]
                else:
                    cc += [pi[b, k - 1], pi[a, k - 1]]
                    vv += [-1.0, -1.0]
                ct_r.append(np.full(len(cc), r)); ct_c.append(np.array(cc)); ct_v.append(np.array(vv))
                ct_b.append(rhs_ct)
                # momentum (row * dx, bar):
                # (pi_b^{k+1} - pi_a^{k+1}) + kf_mo*(f_b^{k+1} - f_b^k
                #   + f_a^{k+1} - f_a^k) + kg * gamma^k = 0
                rhs_mo = 0.0
                cc2 = [pi[b, k], pi[a, k], f[b, k], f[a, k]]
                vv2 = [1.0, -1.0, kf_mo, kf_mo]
                if k == 0:
                    rhs_mo += kf_mo * (init.f_nodes[b] + init.f_nodes[a])
                    rhs_mo -= kg * gamma0[so + s_l]
                else:
                    cc2 += [f[b, k - 1], f[a, k - 1], gamma[so + s_l, k - 1]]
                    vv2 += [-kf_mo, -kf_mo, kg]
                mo_r.append(np.full(len(cc2), r)); mo_c.append(np.array(cc2)); mo_v.append(np.array(vv2))
                mo_b.append(rhs_mo)
                row += 1
    prog.add_chunk("continuity", "eq", np.concatenate(ct_r), np.concatenate(ct_c),
                   np.concatenate(ct_v), np.array(ct_b))
    prog.add_chunk("momentum", "eq", np.concatenate(mo_r), np.concatenate(mo_c),
                   np.concatenate(mo_v), np.array(mo_b))

    # terminal linepack restoration: stored mass at the last level must not
    # fall below the initial stock (prevents financing the day by draining
    # the network)
    w = np.zeros(grid.n_nodes)
    for p_i, pipe in enumerate(gas.pipes):
        no = grid.node_offset[p_i]
        coef = pipe.c1 * pipe.dx * PA_PER_BAR
        w[no:no + pipe.n_segments] += coef
        w[no + 1:no + pipe.n_nodes] += coef
    lp0 = float(w @ (init.pi_nodes / PA_PER_BAR))
    prog.add_chunk("restoration", "ineq", np.zeros(grid.n_nodes, dtype=int),
                   pi[:, n - 1], -w, np.array([-lp0]))

    # cone rows: || (2 f, gamma - pi) || <= gamma + pi at segment left nodes,
    # levels 1..n-1
    for p_i, pipe in enumerate(gas.pipes):
        no, so = grid.node_offset[p_i], grid.seg_offset[p_i]
        for s_l in range(pipe.n_segments):
            a = no + s_l
            for k in range(n_gamma_cols):
                g_i, pi_i, f_i = gamma[so + s_l, k], pi[a, k], f[a, k]
                prog.add_soc(([g_i, pi_i], [1.0, 1.0], 0.0),
                             [([f_i], [2.0], 0.0),
                              ([g_i, pi_i], [1.0, -1.0], 0.0)])

    # objective (production cost plus shed penalty); keep a copy as handles
    price = np.repeat([s.price for s in gas.suppliers], n) * dt
    obj_cols = np.concatenate([q.ravel(), dU.ravel()])
    obj_vals = np.concatenate([price, np.full(U * n, -kappa_S)])
    obj_const = kappa_S * float(caps.sum())
    prog.obj_linear(obj_cols, obj_vals)
    prog.obj_const = obj_const

    handles = {"grid": grid, "q": q, "dU": dU, "piJ": piJ, "pi": pi, "f": f,
               "gamma": gamma, "caps": caps,
               "objective": (obj_cols, obj_vals, obj_const)}
    return prog, handles


def build_dual(gas: GasNetwork, units, fuel_request, init: GasInitialState,
               kappa_S: float) -> conic.ConicProgram:
    """Mechanical conic dual of the relaxed OGF (maximize form)."""
    prog, _ = build_primal_relaxed(gas, units, fuel_request, init, kappa_S)
    return conic.dualize_conic(prog)


def assemble_single_level(gas: GasNetwork, units, fuel_request,
                          init: GasInitialState, kappa_S: float,
                          consensus: tuple | None = None):
    """Primal + dual + strong-duality band, objective sum(gamma).

    The duality gap is bounded by DUALITY_GAP_REL relative to the relaxed
    optimum (found by a pre-solve) instead of pinned to exactly zero: the
    tightening step may pay a vanishing amount of real transport cost (for
    example a small repressurization flow) that an exact equality would
    otherwise convert into a large artificial lift.

    consensus: optional (x, lam, rho); appends the augmented-Lagrangian terms
    over z = dU / heat_rate against the incoming request x (MW).
    """
    prog, h = build_primal_relaxed(gas, units, fuel_request, init, kappa_S)
    p_cols, p_vals, p_const = h["objective"]
    base = conic.solve(prog)
    gap_tol = 0.0
    if base.ok:
        c_star = float(p_vals @ base.x[p_cols] + p_const)
        gap_tol = DUALITY_GAP_REL * (1.0 + abs(c_star))
    info = conic.append_dual(prog, prog)
    d_cols, d_vals, d_const = info["objective"]
    # weak duality already enforces d <= p, so one-sided suffices
    cat_cols = np.concatenate([p_cols, d_cols])
    cat_vals = np.concatenate([p_vals, -d_vals])
    prog.add_chunk("strong_duality", "ineq",
                   np.zeros(cat_cols.size, dtype=int), cat_cols, cat_vals,
                   np.array([d_const - p_const + gap_tol]))

    prog.clear_objective()
    gamma = h["gamma"]
    if gamma.size:
        prog.obj_linear(gamma.ravel(), np.ones(gamma.size))
    if consensus is not None:
        x, lam, rho = consensus
        dU = h["dU"]
        U, n = dU.shape
        x = np.asarray(x, dtype=float).reshape(U, n)
        lam = np.asarray(lam, dtype=float).reshape(U, n)
        hr = np.array([u.heat_rate for u in units]).reshape(U, 1)
        # <lam, x - z> + rho/2 (x - z)^2 with z = dU / hr, constants dropped
        prog.obj_linear(dU.ravel(), ((-lam - rho * x) / hr).ravel())
        prog.obj_square(dU.ravel(),
                        np.repeat(rho / 2.0 / (hr * hr).ravel(), n))
    return prog, h, info


def extract_decision(gas: GasNetwork, units, sol: conic.Solution,
                     handles: dict) -> GasDecision:
    n = gas.time_grid.n_steps
    grid = handles["grid"]
    S, J, U = len(gas.suppliers), len(gas.junctions), len(units)
    p_cols, p_vals, p_const = handles["objective"]
    cost = float(p_vals @ sol.x[p_cols] + p_const)
    return GasDecision(
        q_supply=sol.value("q").reshape(S, n),
        d_fuel=sol.value("dU").reshape(U, n),
        pi_junction=sol.value("piJ").reshape(J, n) * PA_PER_BAR,
        pi_nodes=sol.value("pi").reshape(grid.n_nodes, n) * PA_PER_BAR,
        f_nodes=sol.value("f").reshape(grid.n_nodes, n),
        gamma=sol.value("gamma").reshape(grid.n_segs, max(n - 1, 0)),
        cost=cost,
        status=sol.status)


def extract_duals(gas: GasNetwork, units, sol: conic.Solution) -> DualDecision:
    def _get(fam):
        try:
            return sol.dual(fam)
        except KeyError:
            return np.zeros(0)
    return DualDecision(
        fuel_lb=_get("_lb:dU"), fuel_ub=_get("_ub:dU"),
        balance=_get("balance"), tie_to=_get("tie_to"), tie_fr=_get("tie_fr"),
        comp_lo=_get("comp_lo"), comp_hi=_get("comp_hi"),
        pressure_lb=_get("_lb:piJ"), pressure_ub=_get("_ub:piJ"),
        supply_lb=_get("_lb:q"), supply_ub=_get("_ub:q"),
        restoration=_get("restoration"),
        continuity=_get("continuity"), momentum=_get("momentum"))


def strong_duality_residual(sol: conic.Solution, handles: dict, info: dict) -> float:
    p_cols, p_vals, p_const = handles["objective"]
    d_cols, d_vals, d_const = info["objective"]
    lhs = float(p_vals @ sol.x[p_cols] + p_const)
    rhs = float(d_vals @ sol.x[d_cols] + d_const)
    return abs(lhs - rhs)


def z_update(gas: GasNetwork, units, fuel_request, init: GasInitialState,
             kappa_S: float, lam: np.ndarray, rho: float, tau: float):
    """One gas-side minimization of the augmented Lagrangian.

    Returns (GasDecision, z) with z the served-generation matrix in MW.
    """
    prog, h, info = assemble_single_level(
        gas, units, fuel_request, init, kappa_S,
        consensus=(fuel_request, lam, rho))
    settings = conic.SolveSettings(rel_gap_tolerance=conic.clamp_tolerance(tau))
    sol = conic.solve(prog, settings)
    if not sol.ok:
        raise GasError(f"gas z-update solve failed: {sol.status}")
    dec = extract_decision(gas, units, sol, h)
    hr = np.array([u.heat_rate for u in units]).reshape(-1, 1)
    return dec, dec.d_fuel / hr, sol, h, info


def solve_response(gas: GasNetwork, units, fuel_request, init: GasInitialState,
                   kappa_S: float, tau: float = 1e-8):
    """Gas network's tightened optimal response to a dispatch request."""
    prog, h, info = assemble_single_level(gas, units, fuel_request, init, kappa_S)
    sol = conic.solve(prog, conic.SolveSettings(rel_gap_tolerance=conic.clamp_tolerance(tau)))
    if not sol.ok:
        raise GasError(f"gas response solve failed: {sol.status}")
    return extract_decision(gas, units, sol, h), sol, h, info


def audit_tightness(gas: GasNetwork, decision: GasDecision) -> TightnessReport:
    """Eigenvalue audit of [[pi, f], [f, gamma]] per (pipe, segment, level)."""
    grid = PipeGrid.build(gas)
    n = gas.time_grid.n_steps
    n_cols = max(n - 1, 0)
    pi_b = np.empty((grid.n_segs, n_cols))
    f_v = np.empty((grid.n_segs, n_cols))
    for p_i, pipe in enumerate(gas.pipes):
        no, so = grid.node_offset[p_i], grid.seg_offset[p_i]
        pi_b[so:so + pipe.n_segments] = decision.pi_nodes[no:no + pipe.n_segments, :n_cols] / PA_PER_BAR
        f_v[so:so + pipe.n_segments] = decision.f_nodes[no:no + pipe.n_segments, :n_cols]
    g = decision.gamma
    tr = pi_b + g
    disc = np.sqrt((pi_b - g) ** 2 + 4.0 * f_v ** 2)
    lam1 = 0.5 * (tr + disc)
    lam2 = 0.5 * (tr - disc)
    ratio = np.log10(np.maximum(lam1, LAM2_FLOOR) / np.maximum(lam2, LAM2_FLOOR))
    phys = f_v ** 2 / np.maximum(pi_b, 1e-12)
    lift = np.abs(g - phys) / np.maximum.reduce([g, phys, np.ones_like(g)])
    return TightnessReport(lam1=lam1, lam2=lam2, ratio=ratio, lift_error=lift,
                           mean_ratio=float(ratio.mean()) if ratio.size else 0.0,
                           min_ratio=float(ratio.min()) if ratio.size else 0.0,
                           max_lift_error=float(lift.max()) if lift.size else 0.0)


def linepack(gas: GasNetwork, pi_nodes: np.ndarray) -> float:
    """Stored-mass proxy c1 * dx * sum(pi_m + pi_{m+1}) over segments (SI).

    Chosen so that dt * sum(q - d) == linepack(end) - linepack(start) holds
    exactly under the finite-difference continuity rows.
    """
    grid = PipeGrid.build(gas)
    total = 0.0
    for p_i, pipe in enumerate(gas.pipes):
        no = grid.node_offset[p_i]
        seg = pi_nodes[no:no + pipe.n_segments] + pi_nodes[no + 1:no + pipe.n_nodes]
        total += pipe.c1 * pipe.dx * float(np.sum(seg))
    return total


def mass_balance_residual(gas: GasNetwork, decision: GasDecision,
                          init: GasInitialState) -> float:
    """Relative residual of supplied - delivered = linepack change."""
    n = gas.time_grid.n_steps
    dt = gas.time_grid.dt_seconds
    jix = gas.junction_index()
    heat = np.zeros(n)
    for h in gas.heat_loads:
        heat += np.asarray(h.demand_series)
    supplied = float(decision.q_supply.sum()) * dt
    delivered = (float(heat.sum()) + float(decision.d_fuel.sum())) * dt
    lp_end = linepack(gas, decision.pi_nodes[:, -1])
    lp_start = linepack(gas, init.pi_nodes)
    lhs = supplied - delivered
    rhs = lp_end - lp_start
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


def steady_state_init(gas: GasNetwork, heat0: np.ndarray,
                      fuel0: np.ndarray | None = None) -> GasInitialState:
    """Initial pipe state from the time-invariant flow equations.

    heat0 / fuel0 are per-junction withdrawals (kg/s).  Solved as a small
    tightened cone program: minimum-cost supply split, then minimum total
    lift with junction pressures anchored near their band midpoint.
    """
    grid = PipeGrid.build(gas)
    J, S, P = len(gas.junctions), len(gas.suppliers), len(gas.pipes)
    jix = gas.junction_index()
    comp_j = gas.compressor_junctions()
    heat0 = np.asarray(heat0, dtype=float)
    fuel0 = np.zeros(J) if fuel0 is None else np.asarray(fuel0, dtype=float)
    demand = heat0 + fuel0

    def _build():
        prog = conic.ConicProgram("gas_steady")
        # contractual minimum-take floors apply to operation, not to the
        # pre-horizon balance, so only the physical bounds are kept here
        q = prog.add_vars("q", S, lb=0.0,
                          ub=[s.q_max for s in gas.suppliers])
        piJ = prog.add_vars("piJ", J, lb=[j.pr_min / PA_PER_BAR for j in gas.junctions],
                            ub=[j.pr_max / PA_PER_BAR for j in gas.junctions])
        pi = prog.add_vars("pi", grid.n_nodes, lb=0.0)
        fp = prog.add_vars("fp", P, lb=0.0)  # uniform flow per pipe
        gam = prog.add_vars("gamma", grid.n_segs, lb=0.0)

        for j_i, j in enumerate(gas.junctions):
            cc, vv = [], []
            for s_i, s in enumerate(gas.suppliers):
                if jix[s.junction] == j_i:
                    cc.append(q[s_i]); vv.append(1.0)
            for p_i, pipe in enumerate(gas.pipes):
                if jix[pipe.to_junction] == j_i:
                    cc.append(fp[p_i]); vv.append(1.0)
                if jix[pipe.from_junction] == j_i:
                    cc.append(fp[p_i]); vv.append(-1.0)
            prog.add_eq("balance", cc, vv, float(demand[j_i]))

        for p_i, pipe in enumerate(gas.pipes):
            no, so = grid.node_offset[p_i], grid.seg_offset[p_i]
            j_to, j_fr = jix[pipe.to_junction], jix[pipe.from_junction]
            prog.add_eq("tie_to", [piJ[j_to], pi[no + pipe.n_segments]], [1.0, -1.0], 0.0)
            if pipe.from_junction in comp_j:
                gmax = {c.junction_id: c.boost for c in gas.compressors}[pipe.from_junction]
                prog.add_ineq("comp_lo", [piJ[j_fr], pi[no]], [1.0, -1.0], 0.0)
                prog.add_ineq("comp_hi", [pi[no], piJ[j_fr]], [1.0, -gmax], 0.0)
            else:
                prog.add_eq("tie_fr", [piJ[j_fr], pi[no]], [1.0, -1.0], 0.0)
            _, _, c3b = _scaled_coeffs(pipe)
            kg = pipe.dx / c3b
            for s_l in range(pipe.n_segments):
                a, b = no + s_l, no + s_l + 1
                prog.add_eq("momentum", [pi[b], pi[a], gam[so + s_l]],
                            [1.0, -1.0, kg], 0.0)
                prog.add_soc(([gam[so + s_l], pi[a]], [1.0, 1.0], 0.0),
                             [([fp[p_i]], [2.0], 0.0),
                              ([gam[so + s_l], pi[a]], [1.0, -1.0], 0.0)])
        return prog, q, piJ, pi, fp, gam

    prog, q, piJ, pi, fp, gam = _build()
    prices = np.array([s.price for s in gas.suppliers])
    prog.obj_linear(q, prices)
    sol = conic.solve(prog, conic.SolveSettings(rel_gap_tolerance=1e-8))
    if not sol.ok:
        raise GasError(f"steady-state init infeasible at t=0: {sol.status}")
    cost_star = sol.objective

    prog2, q2, piJ2, pi2, fp2, gam2 = _build()
    prog2.add_ineq("cost_pin", q2, prices, cost_star + 1e-6 * (1.0 + abs(cost_star)))
    prog2.obj_linear(gam2, np.ones(grid.n_segs))
    mid = np.array([(j.pr_min + j.pr_max) / 2.0 for j in gas.junctions]) / PA_PER_BAR
    prog2.obj_linear(piJ2, -2.0 * mid)
    prog2.obj_square(piJ2, np.ones(J))
    sol2 = conic.solve(prog2, conic.SolveSettings(rel_gap_tolerance=1e-9))
    if not sol2.ok:
        raise GasError(f"steady-state refinement failed: {sol2.status}")

    pi_nodes = sol2.value("pi") * PA_PER_BAR
    f_pipe = sol2.value("fp")
    f_nodes = np.empty(grid.n_nodes)
    for p_i, pipe in enumerate(gas.pipes):
        no = grid.node_offset[p_i]
        f_nodes[no:no + pipe.n_nodes] = f_pipe[p_i]
    return GasInitialState(pi_nodes=pi_nodes, f_nodes=f_nodes,
                           pi_junctions=sol2.value("piJ") * PA_PER_BAR)


def write_pressure_csv(gas: GasNetwork, decision: GasDecision, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "junction", "pressure_bar"])
        for t in range(gas.time_grid.n_steps):
            for j_i, j in enumerate(gas.junctions):
                w.writerow([t, j.id, f"{decision.pi_junction[j_i, t] / PA_PER_BAR:.6f}"])


def write_supply_csv(gas: GasNetwork, decision: GasDecision, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "supplier", "q_kgps"])
        for t in range(gas.time_grid.n_steps):
            for s_i, s in enumerate(gas.suppliers):
                w.writerow([t, s.id, f"{decision.q_supply[s_i, t]:.6f}"])


def write_fuel_csv(gas: GasNetwork, units, fuel_request, decision: GasDecision, path):
    caps = fuel_caps(units, fuel_request)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "unit", "fuel_requested_kgps", "fuel_served_kgps"])
        for t in range(gas.time_grid.n_steps):
            for u_i, u in enumerate(units):
                w.writerow([t, u.id, f"{caps[u_i, t]:.6f}",
                            f"{decision.d_fuel[u_i, t]:.6f}"])


def write_tightness_csv(report: TightnessReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        w.writerow(["mean_ratio", f"{report.mean_ratio:.6f}"])
        w.writerow(["min_ratio", f"{report.min_ratio:.6f}"])
        w.writerow(["max_lift_error", f"{report.max_lift_error:.3e}"])
