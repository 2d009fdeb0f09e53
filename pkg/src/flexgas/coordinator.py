"""Distributed coordination of the power and gas operators.

Consensus ADMM over the gas-fired dispatch: the power-side agent proposes a
dispatch x, the gas-side agent answers with the deliverable generation z, and
scaled prices lam reconcile the two.  Two modes are provided:

* "iv": inexact minimization (per-iteration solver tolerance decays as
  alpha * beta^-k) combined with a residual-balanced varying penalty.
* "classic": fixed penalty, every subproblem solved to tight tolerance.

Agents exchange only decision matrices, multipliers and scalar knobs; the
message log kept by the coordinator allows auditing that no cost or network
data crosses the interface.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import conic, elec, gas as gasmod
from .netmodel import ElectricNetwork, Fixture, GasNetwork, PenaltyConfig


class CoordinationError(RuntimeError):
    pass


DEGENERATE_MW = 1e-3
CLASSIC_TOLERANCE = 1e-8


@dataclass(frozen=True)
class AdmmParams:
    mode: str = "iv"
    rho0: float = 0.25
    epsilon: float = 0.02
    alpha: float = 0.1
    beta: float = 2.4
    delta: float = 2.0
    omega: float = 3.8
    max_iterations: int = 200

    def __post_init__(self):
        if self.mode not in ("iv", "classic"):
            raise ValueError(f"unknown mode '{self.mode}'")
        if self.rho0 <= 0 or self.epsilon <= 0:
            raise ValueError("rho0 and epsilon must be positive")
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta <= 1 or self.delta <= 1 or self.omega <= 1:
            raise ValueError("beta, delta and omega must exceed 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def tolerance_schedule(k: int, params: AdmmParams) -> float:
    """Subproblem tolerance at iteration k (0-based)."""
    if params.mode == "classic":
        return CLASSIC_TOLERANCE
    return conic.clamp_tolerance(params.alpha * params.beta ** (-k))


def residual_norms(x, z_new, z_old, rho):
    """Frobenius norms of the consensus residual and the dual residual."""
    r = float(np.linalg.norm(x - z_new))
    s = float(rho * np.linalg.norm(z_new - z_old))
    return r, s


def update_penalty(rho, r_norm, s_norm, params: AdmmParams) -> float:
    if params.mode == "classic":
        return rho
    if r_norm > params.omega * s_norm:
        return rho * params.delta
    if s_norm > params.omega * r_norm:
        return rho / params.delta
    return rho


def relative_errors(x, z):
    """Elementwise |x - z| / midpoint, with near-zero pairs marked converged."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    degenerate = (np.abs(x) < DEGENERATE_MW) & (np.abs(z) < DEGENERATE_MW)
    mid = np.abs(x + z) / 2.0
    err = np.abs(x - z) / np.maximum(mid, 1e-12)
    err[degenerate] = 0.0
    return err


def converged(x, z, epsilon: float) -> bool:
    err = relative_errors(x, z)
    return bool(err.size == 0 or err.max() <= epsilon)


@dataclass
class Message:
    k: int
    sender: str
    recipient: str
    payload: dict


ALLOWED_PAYLOADS = {
    "coordinator": {"lam", "rho", "tau"},
    "elec": {"x"},
    "gas": {"z"},
}


def audit_messages(log) -> list[str]:
    """Return schema violations in a coordination message log."""
    problems = []
    for m in log:
        allowed = ALLOWED_PAYLOADS.get(m.sender)
        if allowed is None:
            problems.append(f"k={m.k}: unknown sender '{m.sender}'")
            continue
        extra = set(m.payload) - allowed
        if extra:
            problems.append(f"k={m.k}: {m.sender} leaked fields {sorted(extra)}")
        for key, val in m.payload.items():
            if key in ("rho", "tau"):
                if not np.isscalar(val):
                    problems.append(f"k={m.k}: field '{key}' is not scalar")
            elif not isinstance(val, np.ndarray):
                problems.append(f"k={m.k}: field '{key}' is not an array")
    return problems


class ElectricAgent:
    """Wraps the power-side augmented-Lagrangian dispatch update."""

    def __init__(self, net: ElectricNetwork, frp: elec.FrpRequirement,
                 penalties: PenaltyConfig, p_bounds=None, renewable_series=None):
        self.net = net
        self.frp = frp
        self.penalties = penalties
        self.p_bounds = p_bounds
        self.renewable_series = renewable_series
        self.last_decision = None

    def solve(self, z, lam, rho, tau):
        dec, x = elec.x_update(self.net, self.frp, self.penalties, z, lam, rho,
                               tau, p_bounds=self.p_bounds,
                               renewable_series=self.renewable_series)
        self.last_decision = dec
        return x


class GasAgent:
    """Wraps the gas-side tightened single-level response update."""

    def __init__(self, gas: GasNetwork, units, init: gasmod.GasInitialState,
                 kappa_S: float):
        self.gas = gas
        self.units = units
        self.init = init
        self.kappa_S = kappa_S
        self.last_decision = None
        self.last_solution = None
        self.last_handles = None
        self.last_dual_info = None

    def solve(self, x, lam, rho, tau):
        dec, z, sol, h, info = gasmod.z_update(self.gas, self.units, x,
                                               self.init, self.kappa_S,
                                               lam, rho, tau)
        self.last_decision = dec
        self.last_solution = sol
        self.last_handles = h
        self.last_dual_info = info
        return z


@dataclass
class IterationRecord:
    k: int
    tau: float
    rho: float
    r_norm: float
    s_norm: float
    max_rel_err: float
    elapsed_s: float
    x: np.ndarray
    z: np.ndarray
    lam: np.ndarray


@dataclass
class CoordinationResult:
    converged: bool
    iterations: int
    x: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    rho: float
    wall_time_s: float
    history: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    elec_decision: elec.ElecDecision | None = None
    gas_decision: gasmod.GasDecision | None = None


def gas_units_from_fixture(fixture: Fixture) -> list[gasmod.GasUnit]:
    """Gas-side view of the coupling, ordered like the power-side units."""
    units = []
    for g in fixture.elec.gas_fired():
        if g.id not in fixture.coupling:
            raise CoordinationError(f"gas-fired unit {g.id} has no coupling entry")
        c = fixture.coupling[g.id]
        units.append(gasmod.GasUnit(id=g.id, junction=c.junction,
                                    heat_rate=c.heat_rate))
    return units


def run_coordination(elec_agent: ElectricAgent, gas_agent: GasAgent,
                     params: AdmmParams, keep_messages: bool = True
                     ) -> CoordinationResult:
    """Alternate power and gas updates until consensus (Algorithm: ADMM)."""
    net = elec_agent.net
    n = net.time_grid.n_steps
    n_units = len(net.gas_fired())
    if n_units != len(gas_agent.units):
        raise CoordinationError("power and gas sides disagree on unit count")

    z = np.zeros((n_units, n))
    lam = np.zeros((n_units, n))
    rho = params.rho0
    history, messages = [], []
    t0 = time.perf_counter()
    done = False
    x = z.copy()

    for k in range(params.max_iterations):
        tau = tolerance_schedule(k, params)
        if keep_messages:
            messages.append(Message(k, "coordinator", "elec",
                                    {"lam": lam.copy(), "rho": rho, "tau": tau}))
        x = elec_agent.solve(z, lam, rho, tau)
        if keep_messages:
            messages.append(Message(k, "elec", "gas", {"x": x.copy()}))
            messages.append(Message(k, "coordinator", "gas",
                                    {"lam": lam.copy(), "rho": rho, "tau": tau}))
        z_old = z
        z = gas_agent.solve(x, lam, rho, tau)
        if keep_messages:
            messages.append(Message(k, "gas", "elec", {"z": z.copy()}))

        lam = lam + rho * (x - z)
        r_norm, s_norm = residual_norms(x, z, z_old, rho)
        err = relative_errors(x, z)
        max_err = float(err.max()) if err.size else 0.0
        history.append(IterationRecord(
            k=k, tau=tau, rho=rho, r_norm=r_norm, s_norm=s_norm,
            max_rel_err=max_err, elapsed_s=time.perf_counter() - t0,
            x=x.copy(), z=z.copy(), lam=lam.copy()))
        if max_err <= params.epsilon:
            done = True
            break
        rho = update_penalty(rho, r_norm, s_norm, params)

    return CoordinationResult(
        converged=done, iterations=len(history), x=x, z=z, lam=lam, rho=rho,
        wall_time_s=time.perf_counter() - t0, history=history,
        messages=messages, elec_decision=elec_agent.last_decision,
        gas_decision=gas_agent.last_decision)


def write_iteration_csv(result: CoordinationResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "tau", "rho", "r_norm", "s_norm", "max_rel_err",
                    "elapsed_s"])
        for rec in result.history:
            w.writerow([rec.k, f"{rec.tau:.3e}", f"{rec.rho:.6f}",
                        f"{rec.r_norm:.6e}", f"{rec.s_norm:.6e}",
                        f"{rec.max_rel_err:.6e}", f"{rec.elapsed_s:.3f}"])
