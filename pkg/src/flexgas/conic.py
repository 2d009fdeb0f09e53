"""Generic convex program container with a Clarabel solve backend.

Programs hold linear equalities/inequalities (in named row families), simple
variable bounds, second-order-cone rows and a convex quadratic-plus-linear
objective.  The solve contract exposes a relative duality-gap tolerance so
callers can run deliberately inexact minimizations; feasibility tolerances
stay tight regardless of the gap setting.

The linear part of any program can be dualized mechanically, either as a
standalone program (`dualize_linear`) or emitted into another program
(`append_dual`) so primal and dual constraint sets can coexist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

import clarabel

TAU_MIN = 1e-9
TAU_MAX = 0.5


class ConicError(ValueError):
    pass


def clamp_tolerance(tau: float) -> float:
    return min(max(tau, TAU_MIN), TAU_MAX)


@dataclass(frozen=True)
class SolveSettings:
    rel_gap_tolerance: float = 1e-8
    max_iterations: int = 200
    feas_tolerance: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.rel_gap_tolerance < 1.0):
            raise ConicError("rel_gap_tolerance must lie in (0, 1)")


@dataclass
class _Chunk:
    family: str
    kind: str  # "eq" | "ineq"  (ineq rows read expr <= rhs)
    rows: np.ndarray  # local row index per triplet
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray


@dataclass
class _Cone:
    # ||u|| <= t with affine t and u rows; each row is (cols, vals, const)
    t_row: tuple
    u_rows: list


class ConicProgram:
    """Incrementally built convex program, minimized by default."""

    def __init__(self, name: str = "", maximize: bool = False):
        self.name = name
        self.maximize = maximize
        self._nvar = 0
        self._blocks: dict[str, slice] = {}
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._chunks: list[_Chunk] = []
        self._cones: list[_Cone] = []
        self._obj_lin_cols: list[np.ndarray] = []
        self._obj_lin_vals: list[np.ndarray] = []
        self._obj_quad_cols: list[np.ndarray] = []
        self._obj_quad_vals: list[np.ndarray] = []
        self.obj_const = 0.0

    # -- variables ---------------------------------------------------------

    def add_vars(self, name: str, n: int, lb=None, ub=None) -> np.ndarray:
        if name in self._blocks:
            raise ConicError(f"duplicate variable block '{name}'")
        if n < 0:
            raise ConicError("block size must be >= 0")
        idx = np.arange(self._nvar, self._nvar + n)
        self._blocks[name] = slice(self._nvar, self._nvar + n)
        self._nvar += n
        self._lb.append(np.broadcast_to(
            -np.inf if lb is None else np.asarray(lb, dtype=float), (n,)).copy())
        self._ub.append(np.broadcast_to(
            np.inf if ub is None else np.asarray(ub, dtype=float), (n,)).copy())
        return idx

    @property
    def n_vars(self) -> int:
        return self._nvar

    def block(self, name: str) -> slice:
        return self._blocks[name]

    def has_block(self, name: str) -> bool:
        return name in self._blocks

    # -- constraints -------------------------------------------------------

    def add_row(self, family: str, kind: str, cols, vals, rhs: float):
        cols = np.asarray(cols, dtype=int)
        self._chunks.append(_Chunk(family, kind, np.zeros(cols.size, dtype=int),
                                   cols, np.asarray(vals, dtype=float),
                                   np.array([float(rhs)])))

    def add_eq(self, family: str, cols, vals, rhs: float):
        self.add_row(family, "eq", cols, vals, rhs)

    def add_ineq(self, family: str, cols, vals, rhs: float):
        """expr <= rhs"""
        self.add_row(family, "ineq", cols, vals, rhs)

    def add_chunk(self, family: str, kind: str, rows, cols, vals, rhs):
        """Vectorized constraint block: triplets with local row indices."""
        rows = np.asarray(rows, dtype=int)
        rhs = np.asarray(rhs, dtype=float)
        if rows.size and rows.max() >= rhs.size:
            raise ConicError(f"chunk '{family}': row index beyond rhs length")
        self._chunks.append(_Chunk(family, kind, rows, np.asarray(cols, dtype=int),
                                   np.asarray(vals, dtype=float), rhs))

    def add_soc(self, t_row, u_rows):
        """Append ||u|| <= t; rows are (cols, vals, const) affine triples."""
        self._cones.append(_Cone(t_row, list(u_rows)))

    @property
    def n_cones(self) -> int:
        return len(self._cones)

    # -- objective ---------------------------------------------------------

    def obj_linear(self, cols, vals):
        self._obj_lin_cols.append(np.asarray(cols, dtype=int))
        self._obj_lin_vals.append(np.asarray(vals, dtype=float))

    def clear_objective(self):
        self._obj_lin_cols, self._obj_lin_vals = [], []
        self._obj_quad_cols, self._obj_quad_vals = [], []
        self.obj_const = 0.0

    def obj_square(self, cols, vals):
        """Add sum_i vals[i] * x[cols[i]]^2 (vals must be >= 0)."""
        vals = np.asarray(vals, dtype=float)
        if vals.size and vals.min() < 0:
            raise ConicError("quadratic objective coefficients must be >= 0")
        self._obj_quad_cols.append(np.asarray(cols, dtype=int))
        self._obj_quad_vals.append(vals)

    # -- assembly ----------------------------------------------------------

    def _bounds_rows(self):
        lb = np.concatenate(self._lb) if self._lb else np.empty(0)
        ub = np.concatenate(self._ub) if self._ub else np.empty(0)
        return lb, ub

    def linear_matrices(self):
        """(A_eq, b_eq, G_in, h_in, q, c0, eq_families, in_families).

        G_in includes the finite variable bounds as rows; family names for
        bounds are "_lb:<block>" / "_ub:<block>".  Families are lists of
        (name, start_row, n_rows) in row order.
        """
        n = self._nvar
        eq_r, eq_c, eq_v, eq_b = [], [], [], []
        in_r, in_c, in_v, in_b = [], [], [], []
        eq_fam, in_fam = [], []
        eq_n = in_n = 0
        for ch in self._chunks:
            m = ch.rhs.size
            if ch.kind == "eq":
                eq_fam.append((ch.family, eq_n, m))
                eq_r.append(ch.rows + eq_n)
                eq_c.append(ch.cols)
                eq_v.append(ch.vals)
                eq_b.append(ch.rhs)
                eq_n += m
            else:
                in_fam.append((ch.family, in_n, m))
                in_r.append(ch.rows + in_n)
                in_c.append(ch.cols)
                in_v.append(ch.vals)
                in_b.append(ch.rhs)
                in_n += m
        lb, ub = self._bounds_rows()
        for name, sl in self._blocks.items():
            fin = np.nonzero(np.isfinite(lb[sl]))[0]
            if fin.size:
                in_fam.append((f"_lb:{name}", in_n, fin.size))
                in_r.append(np.arange(in_n, in_n + fin.size))
                in_c.append(fin + sl.start)
                in_v.append(-np.ones(fin.size))
                in_b.append(-lb[sl][fin])
                in_n += fin.size
        for name, sl in self._blocks.items():
            fin = np.nonzero(np.isfinite(ub[sl]))[0]
            if fin.size:
                in_fam.append((f"_ub:{name}", in_n, fin.size))
                in_r.append(np.arange(in_n, in_n + fin.size))
                in_c.append(fin + sl.start)
                in_v.append(np.ones(fin.size))
                in_b.append(ub[sl][fin])
                in_n += fin.size

        def _mat(r, c, v, m):
            if r:
                return sparse.coo_matrix(
                    (np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
                    shape=(m, n)).tocsc()
            return sparse.csc_matrix((m, n))

        A_eq = _mat(eq_r, eq_c, eq_v, eq_n)
        b_eq = np.concatenate(eq_b) if eq_b else np.empty(0)
        G_in = _mat(in_r, in_c, in_v, in_n)
        h_in = np.concatenate(in_b) if in_b else np.empty(0)

        q = np.zeros(n)
        for c, v in zip(self._obj_lin_cols, self._obj_lin_vals):
            np.add.at(q, c, v)
        return A_eq, b_eq, G_in, h_in, q, self.obj_const, eq_fam, in_fam

    def _quad_diag(self):
        d = np.zeros(self._nvar)
        for c, v in zip(self._obj_quad_cols, self._obj_quad_vals):
            np.add.at(d, c, v)
        return d

    def objective_value(self, x: np.ndarray) -> float:
        _, _, _, _, q, c0, _, _ = self.linear_matrices()
        val = float(q @ x + self._quad_diag() @ (x * x) + c0)
        return val

    def write_debug(self, path):
        """Dump the program in a sparse triplet text form for inspection."""
        A_eq, b_eq, G_in, h_in, q, c0, eq_fam, in_fam = self.linear_matrices()
        with open(path, "w") as fh:
            fh.write(f"program {self.name or '<anonymous>'}\n")
            fh.write(f"vars {self._nvar} eq_rows {A_eq.shape[0]} "
                     f"ineq_rows {G_in.shape[0]} soc_cones {len(self._cones)}\n")
            fh.write(f"sense {'max' if self.maximize else 'min'} const {c0!r}\n")
            for name, sl in self._blocks.items():
                fh.write(f"block {name} {sl.start} {sl.stop}\n")
            for label, M, rhs, fams in (("eq", A_eq, b_eq, eq_fam),
                                        ("ineq", G_in, h_in, in_fam)):
                for fam, start, m in fams:
                    fh.write(f"family {label} {fam} {start} {m}\n")
                coo = M.tocoo()
                for r, c, v in zip(coo.row, coo.col, coo.data):
                    fh.write(f"{label} {r} {c} {v!r}\n")
                for r, v in enumerate(rhs):
                    fh.write(f"{label}_rhs {r} {v!r}\n")
            nz = np.nonzero(q)[0]
            for c in nz:
                fh.write(f"obj_lin {c} {q[c]!r}\n")
            d = self._quad_diag()
            for c in np.nonzero(d)[0]:
                fh.write(f"obj_quad {c} {d[c]!r}\n")
            for i, cone in enumerate(self._cones):
                fh.write(f"soc {i} dim {1 + len(cone.u_rows)}\n")


@dataclass
class Solution:
    status: str  # optimal | infeasible | unbounded | tolerance_reached | iteration_limit
    x: np.ndarray
    objective: float
    rel_gap: float
    primal_residual: float
    iterations: int
    solve_time: float
    _blocks: dict = field(default_factory=dict, repr=False)
    _eq_duals: dict = field(default_factory=dict, repr=False)
    _in_duals: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "tolerance_reached")

    def value(self, block: str) -> np.ndarray:
        return self.x[self._blocks[block]]

    def dual(self, family: str) -> np.ndarray:
        if family in self._eq_duals:
            return self._eq_duals[family]
        return self._in_duals[family]


_STATUS_MAP = {
    "Solved": "optimal",
    "AlmostSolved": "tolerance_reached",
    "MaxIterations": "iteration_limit",
    "MaxTime": "iteration_limit",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
    "InsufficientProgress": "iteration_limit",
}


def solve(program: ConicProgram, settings: SolveSettings = SolveSettings()) -> Solution:
    """Solve the program with Clarabel; deterministic for identical inputs."""
    A_eq, b_eq, G_in, h_in, q, c0, eq_fam, in_fam = program.linear_matrices()
    n = program.n_vars
    sign = -1.0 if program.maximize else 1.0
    d = program._quad_diag()
    if program.maximize and d.any():
        raise ConicError("maximize is only supported for linear objectives")

    mats = [A_eq, G_in]
    rhs = [b_eq, h_in]
    cones = []
    if A_eq.shape[0]:
        cones.append(clarabel.ZeroConeT(A_eq.shape[0]))
    if G_in.shape[0]:
        cones.append(clarabel.NonnegativeConeT(G_in.shape[0]))

    # SOC block: s = b - Ax must equal (t, u) of each cone
    soc_r, soc_c, soc_v, soc_b = [], [], [], []
    soc_n = 0
    for cone in program._cones:
        rows = [cone.t_row] + cone.u_rows
        for j, (cols, vals, const) in enumerate(rows):
            cols = np.asarray(cols, dtype=int)
            vals = np.asarray(vals, dtype=float)
            soc_r.append(np.full(cols.size, soc_n + j))
            soc_c.append(cols)
            soc_v.append(-vals)
            soc_b.append(float(const))
        cones.append(clarabel.SecondOrderConeT(len(rows)))
        soc_n += len(rows)
    if soc_n:
        mats.append(sparse.coo_matrix(
            (np.concatenate(soc_v), (np.concatenate(soc_r), np.concatenate(soc_c))),
            shape=(soc_n, n)).tocsc())
        rhs.append(np.asarray(soc_b))

    A = sparse.vstack(mats, format="csc") if mats else sparse.csc_matrix((0, n))
    b = np.concatenate(rhs)

    P = sparse.diags(2.0 * d, format="csc") if d.any() else sparse.csc_matrix((n, n))
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.max_iter = settings.max_iterations
    st.tol_gap_rel = clamp_tolerance(settings.rel_gap_tolerance)
    st.tol_gap_abs = 1e-12
    st.tol_feas = settings.feas_tolerance
    st.max_threads = 1
    solver = clarabel.DefaultSolver(P, sign * q, A, b, cones, st)
    res = solver.solve()

    status = _STATUS_MAP.get(str(res.status), "iteration_limit")
    x = np.asarray(res.x)
    obj = float(res.obj_val) * sign + c0
    obj_d = float(res.obj_val_dual) * sign + c0
    rel_gap = abs(obj - obj_d) / (1.0 + abs(obj))

    sol = Solution(status=status, x=x, objective=obj, rel_gap=rel_gap,
                   primal_residual=float(res.r_prim), iterations=int(res.iterations),
                   solve_time=float(res.solve_time),
                   _blocks=dict(program._blocks))
    z = np.asarray(res.z)
    n_eq = A_eq.shape[0]
    for fam, start, m in eq_fam:
        # accumulate: a family may span several chunks
        prev = sol._eq_duals.get(fam)
        vals = sign * z[start:start + m]
        sol._eq_duals[fam] = vals if prev is None else np.concatenate([prev, vals])
    for fam, start, m in in_fam:
        prev = sol._in_duals.get(fam)
        vals = sign * z[n_eq + start:n_eq + start + m]
        sol._in_duals[fam] = vals if prev is None else np.concatenate([prev, vals])
    return sol


def _check_dualizable(program: ConicProgram, allow_cones: bool):
    if program._cones and not allow_cones:
        raise ConicError("dualization requires a program without SOC constraints")
    if program._quad_diag().any():
        raise ConicError("dualization requires a linear objective")
    if program.maximize:
        raise ConicError("dualization expects a minimization program")


def dualize_linear(program: ConicProgram) -> ConicProgram:
    """Mechanical LP dual: max b'y - h'l s.t. A'y - G'l = q, l >= 0.

    Returned as a maximize-form ConicProgram whose optimum equals the primal
    optimum whenever the primal is feasible and bounded.  Dual variable blocks
    are named "y:<family>" and "l:<family>"; rejects programs with cones or
    quadratic objectives.
    """
    _check_dualizable(program, allow_cones=False)
    dual = ConicProgram(name=f"dual({program.name})", maximize=True)
    info = _emit_dual(program, dual, prefix="")
    cols, vals, c0 = info["objective"]
    dual.obj_linear(cols, vals)
    dual.obj_const = c0
    return dual


def dualize_conic(program: ConicProgram) -> ConicProgram:
    """Conic dual: like `dualize_linear` but SOC constraints get self-dual
    cone multipliers (block "z:soc")."""
    _check_dualizable(program, allow_cones=True)
    dual = ConicProgram(name=f"dual({program.name})", maximize=True)
    info = _emit_dual(program, dual, prefix="")
    cols, vals, c0 = info["objective"]
    dual.obj_linear(cols, vals)
    dual.obj_const = c0
    return dual


def append_dual(program: ConicProgram, target: ConicProgram,
                prefix: str = "dual") -> dict:
    """Emit the conic dual of `program` into `target`.

    `target` may be `program` itself, so primal and dual constraint sets can
    coexist in a single program.  Returns a dict with "objective" — the dual
    objective b'y - h'l - m'z + c0 as an affine (cols, vals, const) triple over
    target variables — plus index maps per dual family.
    """
    _check_dualizable(program, allow_cones=True)
    return _emit_dual(program, target, prefix=prefix)


def _emit_dual(program, target, prefix: str):
    """Dual of min q'x + c0 s.t. Ax=b (y), Gx<=h (l>=0), Mx+m in SOC (z in SOC):
    max b'y - h'l - m'z s.t. A'y - G'l + M'z = q."""
    A_eq, b_eq, G_in, h_in, q, c0, eq_fam, in_fam = program.linear_matrices()
    n_primal = program.n_vars
    cones = list(program._cones)

    def _name(kind, fam):
        return f"{prefix}:{kind}:{fam}" if prefix else f"{kind}:{fam}"

    def _fresh(nm, start):
        return f"{nm}#{start}" if target.has_block(nm) else nm

    blocks = {}
    y_idx = np.empty(A_eq.shape[0], dtype=int)
    for fam, start, m in eq_fam:
        nm = _fresh(_name("y", fam), start)
        y_idx[start:start + m] = target.add_vars(nm, m)
        blocks.setdefault(fam, []).append(nm)
    l_idx = np.empty(G_in.shape[0], dtype=int)
    for fam, start, m in in_fam:
        nm = _fresh(_name("l", fam), start)
        l_idx[start:start + m] = target.add_vars(nm, m, lb=0.0)
        blocks.setdefault(fam, []).append(nm)

    # SOC multipliers: one contiguous block, self-dual cone per primal cone
    soc_rows = sum(1 + len(c.u_rows) for c in cones)
    z_idx = np.empty(0, dtype=int)
    m_soc = np.empty(0)
    M_soc = sparse.csc_matrix((0, n_primal))
    if soc_rows:
        z_idx = target.add_vars(_fresh(_name("z", "soc"), 0), soc_rows)
        blocks.setdefault("soc", []).append(_name("z", "soc"))
        r_l, c_l, v_l, consts = [], [], [], []
        row = 0
        for cone in cones:
            rows = [cone.t_row] + cone.u_rows
            dim = len(rows)
            for j, (cols, vals, const) in enumerate(rows):
                cols = np.asarray(cols, dtype=int)
                r_l.append(np.full(cols.size, row + j))
                c_l.append(cols)
                v_l.append(np.asarray(vals, dtype=float))
                consts.append(float(const))
            zc = z_idx[row:row + dim]
            target.add_soc((zc[:1], [1.0], 0.0),
                           [(zc[k:k + 1], [1.0], 0.0) for k in range(1, dim)])
            row += dim
        M_soc = sparse.coo_matrix(
            (np.concatenate(v_l), (np.concatenate(r_l), np.concatenate(c_l))),
            shape=(soc_rows, n_primal)).tocsc()
        m_soc = np.asarray(consts)

    # dual feasibility: one equality row per primal variable
    At = A_eq.T.tocsr()
    Gt = G_in.T.tocsr()
    Mt = M_soc.T.tocsr()
    fam_feas = _name("feas", "primal_vars") if prefix else "dual_feasibility"
    for i in range(n_primal):
        a_sl = slice(At.indptr[i], At.indptr[i + 1])
        g_sl = slice(Gt.indptr[i], Gt.indptr[i + 1])
        m_sl = slice(Mt.indptr[i], Mt.indptr[i + 1])
        cols = np.concatenate([y_idx[At.indices[a_sl]], l_idx[Gt.indices[g_sl]],
                               z_idx[Mt.indices[m_sl]]])
        vals = np.concatenate([At.data[a_sl], -Gt.data[g_sl], Mt.data[m_sl]])
        target.add_eq(fam_feas, cols, vals, q[i])

    obj_cols = np.concatenate([y_idx, l_idx, z_idx])
    obj_vals = np.concatenate([b_eq, -h_in, -m_soc])
    return {"objective": (obj_cols, obj_vals, c0), "blocks": blocks,
            "y_idx": y_idx, "l_idx": l_idx, "z_idx": z_idx,
            "eq_families": eq_fam, "in_families": in_fam}
