"""Worst-case contingency search by interdiction.

The max-min problem (pick ``j`` components to fail, then the operator
minimizes shed) becomes a single MILP by replacing the inner LP with its
dual. The dual objective multiplies failure bits ``d`` by duals; each such
product ``v = u * b`` with ``u in [-U, 0]`` and binary ``b`` is replaced by

    v >= u - U (1 - b),    v >= -U b,    v <= u + U (1 - b),    v <= 0

which is exact for binary ``b``. The dual here is the dual of
:class:`nkeps.dcopf.PspTemplate`, angle-bound rows included.

Failing an unbuilt component changes nothing, so failure bits exist only
for built components. A size-``j`` set over all components then fails
between ``j - unbuilt`` and ``min(j, built)`` built ones; the range matters
because shed is not monotone in failures (losing a line also lifts its
Kirchhoff constraint). A short contingency is padded with unbuilt ids in
sorted order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from nkeps.dcopf import LossOfLoadSolver
from nkeps.errors import AuditError, SolverError
from nkeps.milp import LEAN_HEURISTICS, LinearProgram, ModelBuilder, Status, solve_lp, solve_milp
from nkeps.network import Contingency, ExpansionPlan, PowerSystem, total_demand
from nkeps.options import SolveOptions


@dataclass(frozen=True)
class OracleResult:
    contingency: Contingency
    worst_shed: float
    certified: bool
    milp_objective: float = float("nan")
    milp_bound: float = float("nan")
    seconds: float = 0.0


@dataclass(frozen=True)
class MpsipColumns:
    """Column indices of the interdiction MILP, grouped by family.

    ``d[i]`` is the failure bit of component position ``d_pos[i]``; products
    ``r*`` exist only where that bit does (``*_bit`` give the position in
    ``d``, ``*_at`` the line or generator index).
    """

    d: np.ndarray
    d_pos: np.ndarray
    alpha: np.ndarray
    beta_hat: np.ndarray
    beta_check: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    lam: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    r4: np.ndarray
    r5: np.ndarray
    line_at: np.ndarray
    gen_at: np.ndarray
    line_bit: np.ndarray
    gen_bit: np.ndarray


def default_dual_bound(sys: PowerSystem) -> float:
    return float(max(1.0, float(sys.big_m.max(initial=0.0))))


def build_mpsip(sys: PowerSystem, x, j: int, U: float | None = None) -> tuple[LinearProgram, MpsipColumns]:
    x = plan_vector(sys, x)
    if not 1 <= j <= sys.N:
        raise ValueError(f"interdiction budget j = {j} outside [1, {sys.N}]")
    U = default_dual_bound(sys) if U is None else float(U)
    if not U > 0.0:
        raise ValueError("dual bound U must be positive")

    b = ModelBuilder(maximize=True)
    bus_ids = [bus.id for bus in sys.buses]
    line_ids = [e.id for e in sys.lines]
    gen_ids = [g.id for g in sys.generators]
    bidx = sys.bus_index
    demand = np.array([bus.demand for bus in sys.buses])
    xl, xg = x[sys.line_pos], x[sys.gen_pos]
    M = sys.big_m
    line_caps = np.array([e.capacity for e in sys.lines])

    built = np.flatnonzero(x > 0.5)
    d = b.add_vars("d", [sys.component_ids[p] for p in built], lb=0.0, ub=1.0, integer=True)
    bit_of = {int(p): int(c) for p, c in zip(built, d)}
    line_at = np.array([n for n in range(len(line_ids)) if int(sys.line_pos[n]) in bit_of], dtype=int)
    gen_at = np.array([n for n in range(len(gen_ids)) if int(sys.gen_pos[n]) in bit_of], dtype=int)
    pos_in_d = {int(p): i for i, p in enumerate(built)}
    line_bit = np.array([pos_in_d[int(sys.line_pos[n])] for n in line_at], dtype=int)
    gen_bit = np.array([pos_in_d[int(sys.gen_pos[n])] for n in gen_at], dtype=int)
    alpha = b.add_vars("alpha", bus_ids, lb=-U, ub=U)
    beta_hat = b.add_vars("beta_hat", line_ids, lb=-U, ub=0.0)
    beta_check = b.add_vars("beta_check", line_ids, lb=-U, ub=0.0)
    delta = b.add_vars("delta", line_ids, lb=-U, ub=0.0)
    eta = b.add_vars("eta", line_ids, lb=-U, ub=0.0)
    zeta = b.add_vars("zeta", gen_ids, lb=-U, ub=0.0)
    lam = b.add_vars("lambda", bus_ids, lb=-U, ub=0.0)
    mu_plus = b.add_vars("mu_plus", bus_ids, lb=-U, ub=0.0)
    mu_minus = b.add_vars("mu_minus", bus_ids, lb=-U, ub=0.0)
    line_names = [line_ids[n] for n in line_at]
    r1 = b.add_vars("r1", line_names, lb=-U, ub=0.0)
    r2 = b.add_vars("r2", line_names, lb=-U, ub=0.0)
    r3 = b.add_vars("r3", line_names, lb=-U, ub=0.0)
    r4 = b.add_vars("r4", line_names, lb=-U, ub=0.0)
    r5 = b.add_vars("r5", [gen_ids[n] for n in gen_at], lb=-U, ub=0.0)

    # objective: the subproblem's dual objective with d-products linearized;
    # an unbuilt component has zero capacity and a slack Kirchhoff pair
    for i in range(len(bus_ids)):
        b.set_cost(alpha[i], demand[i])
        b.set_cost(lam[i], demand[i])
        b.set_cost(mu_plus[i], sys.theta_bound)
        b.set_cost(mu_minus[i], sys.theta_bound)
    for n in range(len(line_ids)):
        b.set_cost(delta[n], line_caps[n] * xl[n])
        b.set_cost(eta[n], line_caps[n] * xl[n])
        if xl[n] <= 0.5:
            b.set_cost(beta_hat[n], M[n])
            b.set_cost(beta_check[n], M[n])
    for i, n in enumerate(line_at):
        # kappa = d_e: the Kirchhoff pair binds unless the line fails
        b.set_cost(r1[i], M[n])
        b.set_cost(r2[i], M[n])
        b.set_cost(r3[i], -line_caps[n])
        b.set_cost(r4[i], -line_caps[n])
    for n, g in enumerate(sys.generators):
        b.set_cost(zeta[n], g.capacity * xg[n])
    for i, n in enumerate(gen_at):
        b.set_cost(r5[i], -sys.generators[n].capacity)

    hi, lo = min(j, len(built)), max(0, j - (sys.N - len(built)))
    if lo == hi:
        b.add_row("budget", {int(c): 1.0 for c in d}, "=", float(hi))
    else:
        b.add_row("budget", {int(c): 1.0 for c in d}, "<", float(hi))
        if lo > 0:
            b.add_row("budget_min", {int(c): 1.0 for c in d}, ">", float(lo))

    # dual feasibility, one row per primal column
    for n, e in enumerate(sys.lines):
        b.add_row(
            f"col_f[{e.id}]",
            [(alpha[bidx[e.head]], 1.0), (alpha[bidx[e.tail]], -1.0), (beta_hat[n], 1.0),
             (beta_check[n], -1.0), (delta[n], 1.0), (eta[n], -1.0)],
            "=", 0.0,
        )
    for n, g in enumerate(sys.generators):
        b.add_row(f"col_p[{g.id}]", {alpha[bidx[g.bus]]: 1.0, zeta[n]: 1.0}, "<", 0.0)
    for i, bus in enumerate(sys.buses):
        b.add_row(f"col_q[{bus.id}]", {alpha[i]: 1.0, lam[i]: 1.0}, "<", 1.0)
    theta_cols = [dict() for _ in sys.buses]
    for n, e in enumerate(sys.lines):
        t, h = bidx[e.tail], bidx[e.head]
        B = e.susceptance
        for bus_pos, sgn in ((t, 1.0), (h, -1.0)):
            col = theta_cols[bus_pos]
            col[beta_check[n]] = col.get(beta_check[n], 0.0) + sgn * B
            col[beta_hat[n]] = col.get(beta_hat[n], 0.0) - sgn * B
    for i, bus in enumerate(sys.buses):
        theta_cols[i][mu_plus[i]] = 1.0
        theta_cols[i][mu_minus[i]] = -1.0
        b.add_row(f"col_theta[{bus.id}]", theta_cols[i], "=", 0.0)

    def linearize(tag, v, u, bit):
        b.add_row(f"lin1_{tag}", {v: 1.0, u: -1.0, bit: -U}, ">", -U)
        b.add_row(f"lin2_{tag}", {v: 1.0, bit: U}, ">", 0.0)
        b.add_row(f"lin3_{tag}", {v: 1.0, u: -1.0, bit: U}, "<", U)

    for i, n in enumerate(line_at):
        bit = int(d[line_bit[i]])
        tag = line_ids[n]
        linearize(f"r1[{tag}]", r1[i], beta_hat[n], bit)
        linearize(f"r2[{tag}]", r2[i], beta_check[n], bit)
        linearize(f"r3[{tag}]", r3[i], delta[n], bit)
        linearize(f"r4[{tag}]", r4[i], eta[n], bit)
    for i, n in enumerate(gen_at):
        linearize(f"r5[{gen_ids[n]}]", r5[i], zeta[n], int(d[gen_bit[i]]))

    cols = MpsipColumns(d, built, alpha, beta_hat, beta_check, delta, eta, zeta, lam, mu_plus, mu_minus,
                        r1, r2, r3, r4, r5, line_at, gen_at, line_bit, gen_bit)
    return b.build(), cols


def plan_vector(sys: PowerSystem, plan) -> np.ndarray:
    if isinstance(plan, ExpansionPlan):
        return plan.x_vector(sys)
    return np.asarray(plan, dtype=float)


def bilinear_residual(sys: PowerSystem, cols: MpsipColumns, values: np.ndarray) -> float:
    """Largest |r - u * d| over the five linearized families at ``values``."""
    d = values[cols.d]
    dl, dg = d[cols.line_bit], d[cols.gen_bit]
    pairs = [(cols.r1, cols.beta_hat[cols.line_at], dl), (cols.r2, cols.beta_check[cols.line_at], dl),
             (cols.r3, cols.delta[cols.line_at], dl), (cols.r4, cols.eta[cols.line_at], dl),
             (cols.r5, cols.zeta[cols.gen_at], dg)]
    worst = 0.0
    for r, u, bit in pairs:
        if len(r):
            worst = max(worst, float(np.abs(values[r] - values[u] * bit).max()))
    return worst


def failure_vector(sys: PowerSystem, cols: MpsipColumns, bits, j: int) -> np.ndarray:
    """Full-length failure vector from the MILP bits, padded to size ``j``."""
    d = np.zeros(sys.N)
    d[cols.d_pos] = np.round(bits)
    built = set(int(p) for p in cols.d_pos)
    spare = [p for p in range(sys.N) if p not in built]
    for p in spare[: max(0, j - int(d.sum()))]:
        d[p] = 1.0
    return d


def worst_case_contingency(
    sys: PowerSystem,
    plan,
    j: int,
    options: SolveOptions | None = None,
    solver: LossOfLoadSolver | None = None,
) -> OracleResult:
    """Worst size-``j`` contingency for ``plan``, audited against the subproblem.

    The MILP's failure set ``d*`` is re-evaluated twice: by the boxed dual
    with ``d`` fixed (the reported value) and by the loss-of-load LP. If the
    two disagree beyond ``audit_tol * (1 + D)`` the box ``U`` clipped the
    dual and :class:`AuditError` is raised.
    """
    options = options or SolveOptions()
    x = plan_vector(sys, plan)
    D = total_demand(sys)
    t0 = time.perf_counter()
    lp, cols = build_mpsip(sys, x, j, options.dual_bound)
    sol = solve_milp(
        lp,
        gap=options.oracle_gap,
        abs_gap=options.oracle_gap * max(1.0, D),
        time_limit=options.time_limit_secs,
        engine=options.engine,
        highs_options=LEAN_HEURISTICS,
    )
    if sol.x is None:
        raise SolverError(sol.status, f"interdiction MILP ended with status {sol.status.value}")
    d = failure_vector(sys, cols, sol.x[cols.d], j)
    cont = Contingency.from_vector(sys, d)
    if cont.size != j:
        raise SolverError(Status.NUMERICAL, f"interdiction MILP returned {cont.size} failures for budget {j}")
    # Polish: with d fixed the model is the subproblem's boxed dual LP, free of
    # the integrality slack that U amplifies in the linearized products.
    lb, ub = lp.lb.copy(), lp.ub.copy()
    lb[cols.d] = ub[cols.d] = d[cols.d_pos]
    fixed = solve_lp(lp.with_bounds(lb, ub).relaxed(), engine=options.engine)
    if not fixed.ok:
        raise SolverError(fixed.status, f"polishing LP ended with status {fixed.status.value}")
    solver = solver or LossOfLoadSolver(sys, engine=options.engine)
    z = solver.value(x, d)
    if abs(z - fixed.objective) > options.audit_tol * (1.0 + D):
        raise AuditError(
            f"dual bound U too small: interdiction value {fixed.objective:.9g} but the "
            f"loss-of-load LP gives {z:.9g} for {cont}"
        )
    return OracleResult(
        contingency=cont,
        worst_shed=float(min(max(fixed.objective, 0.0), D)),
        certified=sol.status is Status.OPTIMAL,
        milp_objective=float(sol.objective),
        milp_bound=float(sol.bound),
        seconds=time.perf_counter() - t0,
    )
