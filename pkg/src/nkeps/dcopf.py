"""Loss-of-load DC power flow subproblem, its duals, and feasibility cuts.

For a fixed build vector ``x`` and failure vector ``d`` the subproblem is

    min  sum_i q_i
    s.t. (alpha_i)      sum_{g at i} p_g + sum_{e into i} f_e - sum_{e out of i} f_e + q_i = D_i
         (beta_hat_e)   -B_e (theta_tail - theta_head) + f_e <= M_e * kappa_e
         (beta_check_e)  B_e (theta_tail - theta_head) - f_e <= M_e * kappa_e
         (delta_e)       f_e <= F_e x_e (1 - d_e)
         (eta_e)        -f_e <= F_e x_e (1 - d_e)
         (zeta_g)        p_g <= Pmax_g x_g (1 - d_g)
         (lambda_i)      q_i <= D_i
         (mu_plus_i)     theta_i <= Theta
         (mu_minus_i)   -theta_i <= Theta
         p, q >= 0;  f, theta free

with ``kappa_e = min(1, 1 - x_e + d_e)``. Duals are read off the optimal
basis as derivatives of the objective with respect to each right-hand side,
so every inequality dual is <= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nkeps.errors import BadDualError, SolverError
from nkeps.milp import INF, LinearProgram, LPSession, ModelBuilder, Status, solve_lp
from nkeps.network import (
    Contingency,
    Dispatch,
    ExpansionPlan,
    NkEpsilonPolicy,
    PowerSystem,
    total_demand,
)

DUALITY_TOL = 1e-6


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    beta_hat: np.ndarray
    beta_check: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    lam: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    objective: float

    def sign_violation(self) -> float:
        """Largest positive entry among the families constrained to be <= 0."""
        parts = [self.beta_hat, self.beta_check, self.delta, self.eta, self.zeta,
                 self.lam, self.mu_plus, self.mu_minus]
        return max((float(p.max()) for p in parts if p.size), default=0.0)


@dataclass(frozen=True)
class FeasibilityCut:
    """``constant + coef . x <= rhs`` over the component-order build vector."""

    coef: np.ndarray
    constant: float
    rhs: float
    source: Contingency
    violation_at_source: float = 0.0
    component_ids: tuple[str, ...] = field(default=(), repr=False)

    def lhs(self, x) -> float:
        return float(self.constant + self.coef @ np.asarray(x, dtype=float))

    def violation(self, x) -> float:
        return self.lhs(x) - self.rhs

    def coefficients(self) -> dict[str, float]:
        return {cid: float(v) for cid, v in zip(self.component_ids, self.coef) if v != 0.0}

    def same_as(self, other: "FeasibilityCut", tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.abs(self.coef).max(initial=0.0)), abs(self.constant))
        return (
            self.source == other.source
            and abs(self.constant - other.constant) <= tol * scale
            and abs(self.rhs - other.rhs) <= tol * scale
            and bool(np.all(np.abs(self.coef - other.coef) <= tol * scale))
        )


class PspTemplate:
    """The subproblem's fixed structure for one system; only the rhs varies."""

    def __init__(self, sys: PowerSystem):
        self.sys = sys
        nb, nl, ng = len(sys.buses), len(sys.lines), len(sys.generators)
        bidx = sys.bus_index
        b = ModelBuilder()
        self.f = b.add_vars("f", [e.id for e in sys.lines], lb=-INF, ub=INF)
        self.p = b.add_vars("p", [g.id for g in sys.generators], lb=0.0, ub=INF)
        self.q = b.add_vars("q", [bus.id for bus in sys.buses], lb=0.0, ub=INF)
        self.theta = b.add_vars("theta", [bus.id for bus in sys.buses], lb=-INF, ub=INF)
        for j in self.q:
            b.set_cost(j, 1.0)

        balance = [dict() for _ in range(nb)]
        for n, g in enumerate(sys.generators):
            balance[bidx[g.bus]][self.p[n]] = 1.0
        for n, e in enumerate(sys.lines):
            t, h = bidx[e.tail], bidx[e.head]
            balance[h][self.f[n]] = balance[h].get(self.f[n], 0.0) + 1.0
            balance[t][self.f[n]] = balance[t].get(self.f[n], 0.0) - 1.0
        for i, bus in enumerate(sys.buses):
            balance[i][self.q[i]] = 1.0
            b.add_row(f"balance[{bus.id}]", balance[i], "=", 0.0)
        for n, e in enumerate(sys.lines):
            t, h = self.theta[bidx[e.tail]], self.theta[bidx[e.head]]
            b.add_row(f"kvl_hat[{e.id}]", {t: -e.susceptance, h: e.susceptance, self.f[n]: 1.0}, "<", 0.0)
        for n, e in enumerate(sys.lines):
            t, h = self.theta[bidx[e.tail]], self.theta[bidx[e.head]]
            b.add_row(f"kvl_check[{e.id}]", {t: e.susceptance, h: -e.susceptance, self.f[n]: -1.0}, "<", 0.0)
        for n, e in enumerate(sys.lines):
            b.add_row(f"flow_max[{e.id}]", {self.f[n]: 1.0}, "<", 0.0)
        for n, e in enumerate(sys.lines):
            b.add_row(f"flow_min[{e.id}]", {self.f[n]: -1.0}, "<", 0.0)
        for n, g in enumerate(sys.generators):
            b.add_row(f"gen_max[{g.id}]", {self.p[n]: 1.0}, "<", 0.0)
        for i, bus in enumerate(sys.buses):
            b.add_row(f"shed_max[{bus.id}]", {self.q[i]: 1.0}, "<", 0.0)
        for i, bus in enumerate(sys.buses):
            b.add_row(f"angle_max[{bus.id}]", {self.theta[i]: 1.0}, "<", 0.0)
        for i, bus in enumerate(sys.buses):
            b.add_row(f"angle_min[{bus.id}]", {self.theta[i]: -1.0}, "<", 0.0)

        offsets = np.cumsum([0, nb, nl, nl, nl, nl, ng, nb, nb, nb])
        names = ["balance", "kvl_hat", "kvl_check", "flow_max", "flow_min",
                 "gen_max", "shed_max", "angle_max", "angle_min"]
        self.rows = {nm: slice(offsets[k], offsets[k + 1]) for k, nm in enumerate(names)}
        self.lp = b.build()

        self.demand = np.array([bus.demand for bus in sys.buses], dtype=float)
        self.line_cap = np.array([e.capacity for e in sys.lines], dtype=float)
        self.gen_cap = np.array([g.capacity for g in sys.generators], dtype=float)
        self.big_m = sys.big_m
        self.D = total_demand(sys)

    def rhs(self, x, d) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        xl, dl = x[self.sys.line_pos], d[self.sys.line_pos]
        xg, dg = x[self.sys.gen_pos], d[self.sys.gen_pos]
        kappa = np.minimum(1.0, 1.0 - xl + dl)
        cap_l = self.line_cap * xl * (1.0 - dl)
        theta = np.full(len(self.sys.buses), self.sys.theta_bound)
        return np.concatenate([
            self.demand,
            self.big_m * kappa,
            self.big_m * kappa,
            cap_l,
            cap_l,
            self.gen_cap * xg * (1.0 - dg),
            self.demand,
            theta,
            theta,
        ])

    def build(self, x, d) -> LinearProgram:
        return self.lp.with_rhs(self.rhs(x, d))

    def unpack_duals(self, y: np.ndarray, objective: float) -> DualSolution:
        y = np.where(np.abs(y) < 1e-12, 0.0, y)
        r = self.rows
        return DualSolution(
            alpha=y[r["balance"]].copy(),
            beta_hat=y[r["kvl_hat"]].copy(),
            beta_check=y[r["kvl_check"]].copy(),
            delta=y[r["flow_max"]].copy(),
            eta=y[r["flow_min"]].copy(),
            zeta=y[r["gen_max"]].copy(),
            lam=y[r["shed_max"]].copy(),
            mu_plus=y[r["angle_max"]].copy(),
            mu_minus=y[r["angle_min"]].copy(),
            objective=float(objective),
        )


def build_psp(sys: PowerSystem, plan: ExpansionPlan | np.ndarray, cont: Contingency | np.ndarray) -> LinearProgram:
    tpl = PspTemplate(sys)
    return tpl.build(_x(sys, plan), _d(sys, cont))


def _x(sys, plan):
    return plan.x_vector(sys) if isinstance(plan, ExpansionPlan) else np.asarray(plan, dtype=float)


def _d(sys, cont):
    return cont.to_vector(sys) if isinstance(cont, Contingency) else np.asarray(cont, dtype=float)


def dual_objective(tpl: PspTemplate, dual: DualSolution, x, d) -> float:
    """Dual objective of ``dual`` at (x, d), i.e. rhs(x, d) . y."""
    rhs = tpl.rhs(x, d)
    r = tpl.rows
    y = np.zeros(tpl.lp.n_rows)
    y[r["balance"]] = dual.alpha
    y[r["kvl_hat"]] = dual.beta_hat
    y[r["kvl_check"]] = dual.beta_check
    y[r["flow_max"]] = dual.delta
    y[r["flow_min"]] = dual.eta
    y[r["gen_max"]] = dual.zeta
    y[r["shed_max"]] = dual.lam
    y[r["angle_max"]] = dual.mu_plus
    y[r["angle_min"]] = dual.mu_minus
    return float(rhs @ y)


class LossOfLoadSolver:
    """Repeatedly solves the subproblem for one system, warm starting each solve.

    Every solve is checked for strong duality; a violation raises
    :class:`BadDualError` rather than letting a bad dual reach a cut.
    """

    def __init__(self, sys: PowerSystem, engine: str = "highs"):
        self.sys = sys
        self.tpl = PspTemplate(sys)
        self.engine = engine
        self._session = LPSession(self.tpl.lp) if engine == "highs" else None
        self.solves = 0
        self.max_duality_gap = 0.0

    def solve(self, x, d) -> tuple[float, DualSolution]:
        rhs = self.tpl.rhs(x, d)
        if self._session is not None:
            sol = self._session.solve(rhs=rhs)
        else:
            sol = solve_lp(self.tpl.lp.with_rhs(rhs), engine=self.engine)
        if sol.status is not Status.OPTIMAL:
            raise SolverError(sol.status, f"loss-of-load LP ended with status {sol.status.value}")
        self.solves += 1
        dual = self.tpl.unpack_duals(sol.duals, float(rhs @ sol.duals))
        z = float(sol.objective)
        gap = abs(z - dual.objective)
        self.max_duality_gap = max(self.max_duality_gap, gap / (1.0 + abs(z)))
        if gap > DUALITY_TOL * (1.0 + abs(z)):
            raise BadDualError(f"strong duality violated: primal {z:.12g}, dual {dual.objective:.12g}")
        z = min(max(z, 0.0), self.tpl.D)
        return z, dual

    def value(self, x, d) -> float:
        return self.solve(x, d)[0]


def min_loss_of_load(
    sys: PowerSystem, plan: ExpansionPlan | np.ndarray, cont: Contingency | np.ndarray,
    engine: str = "highs",
) -> tuple[float, DualSolution]:
    return LossOfLoadSolver(sys, engine).solve(_x(sys, plan), _d(sys, cont))


def is_compliant(z: float, j: int, policy: NkEpsilonPolicy, demand: float, tol: float | None = None) -> bool:
    tol = violation_tol(demand) if tol is None else tol
    return z <= policy.epsilon[j] * demand + tol


def violation_tol(demand: float) -> float:
    return 1e-6 * demand


def cut_from_dual(
    sys: PowerSystem,
    cont: Contingency,
    dual: DualSolution,
    policy: NkEpsilonPolicy,
    x_source=None,
    z: float | None = None,
) -> FeasibilityCut:
    """Turn a subproblem dual into an inequality over the build vector.

    The cut is ``dual objective as an affine function of x <= eps_|s| * D``.
    When the spawning iterate ``x_source`` and its value ``z`` are given the
    cut must reproduce ``z`` there and be violated, else it is refused.
    """
    D = total_demand(sys)
    if cont.size > policy.k:
        raise ValueError(f"contingency of size {cont.size} exceeds k = {policy.k}")
    rhs = policy.epsilon[cont.size] * D
    d = cont.to_vector(sys)
    dl, dg = d[sys.line_pos], d[sys.gen_pos]
    cap_l = np.array([e.capacity for e in sys.lines], dtype=float)
    cap_g = np.array([g.capacity for g in sys.generators], dtype=float)
    beta = dual.beta_hat + dual.beta_check
    demand = np.array([b.demand for b in sys.buses], dtype=float)

    constant = (
        float(demand @ (dual.alpha + dual.lam))
        + float(sys.big_m @ beta)
        + sys.theta_bound * float(np.sum(dual.mu_plus + dual.mu_minus))
    )
    coef = np.zeros(sys.N)
    coef[sys.line_pos] = (1.0 - dl) * (-sys.big_m * beta + cap_l * (dual.delta + dual.eta))
    coef[sys.gen_pos] = (1.0 - dg) * cap_g * dual.zeta
    cut = FeasibilityCut(coef, constant, rhs, cont, component_ids=sys.component_ids)

    if x_source is not None:
        lhs = cut.lhs(x_source)
        z = dual.objective if z is None else z
        if abs(lhs - z) > DUALITY_TOL * (1.0 + abs(z)):
            raise BadDualError(f"cut reproduces {lhs:.12g} at its source, expected {z:.12g}")
        if not lhs > rhs:
            raise ValueError("subproblem value within the allowance; no cut to add")
        cut = FeasibilityCut(coef, constant, rhs, cont, lhs - rhs, sys.component_ids)
    return cut


def economic_dispatch(sys: PowerSystem, x, engine: str = "highs") -> tuple[Dispatch, float] | None:
    """Least-cost no-contingency dispatch for build vector ``x``; None when load cannot be met."""
    x = np.asarray(x, dtype=float)
    b = ModelBuilder()
    add_dispatch_block(b, sys, x_vars=None, x_fixed=x, tag="0", with_shed=False, cost_weight=1.0)
    lp = b.build()
    sol = solve_lp(lp, engine=engine)
    if sol.status is Status.INFEASIBLE:
        return None
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, f"dispatch LP ended with status {sol.status.value}")
    return _read_dispatch(sys, lp, sol.x, "0"), float(sol.objective)


def _read_dispatch(sys: PowerSystem, lp: LinearProgram, values, tag: str) -> Dispatch:
    def get(prefix, key):
        v = float(values[lp.var_index(f"{prefix}{tag}[{key}]")])
        return 0.0 if abs(v) < 1e-12 else v

    return Dispatch(
        flows={e.id: get("f", e.id) for e in sys.lines},
        outputs={g.id: get("p", g.id) for g in sys.generators},
        angles={bus.id: get("theta", bus.id) for bus in sys.buses},
    )


def add_dispatch_block(
    b: ModelBuilder,
    sys: PowerSystem,
    x_vars: np.ndarray | None,
    x_fixed=None,
    d=None,
    tag: str = "0",
    with_shed: bool = True,
    shed_limit: float | None = None,
    cost_weight: float = 0.0,
) -> dict:
    """Append one DC power flow block to ``b``.

    Build decisions come either from binary columns ``x_vars`` (component
    order) or a fixed vector ``x_fixed``. Failed components in ``d`` get
    zero capacity and a relaxed Kirchhoff pair. With ``with_shed`` the block
    has shed variables capped by ``shed_limit`` in aggregate. Generation is
    charged ``cost_weight * marginal_cost``.
    """
    N = sys.N
    d = np.zeros(N) if d is None else np.asarray(d, dtype=float)
    bidx = sys.bus_index
    f = b.add_vars(f"f{tag}", [e.id for e in sys.lines], lb=-INF, ub=INF)
    p = b.add_vars(f"p{tag}", [g.id for g in sys.generators], lb=0.0, ub=INF)
    theta = b.add_vars(f"theta{tag}", [bus.id for bus in sys.buses],
                       lb=-sys.theta_bound, ub=sys.theta_bound)
    for n, g in enumerate(sys.generators):
        b.set_cost(p[n], cost_weight * g.marginal_cost)
    q = None
    if with_shed:
        q = np.array([b.add_var(f"q{tag}[{bus.id}]", 0.0, bus.demand) for bus in sys.buses], dtype=int)

    balance = [dict() for _ in sys.buses]
    for n, g in enumerate(sys.generators):
        balance[bidx[g.bus]][p[n]] = 1.0
    for n, e in enumerate(sys.lines):
        balance[bidx[e.head]][f[n]] = balance[bidx[e.head]].get(f[n], 0.0) + 1.0
        balance[bidx[e.tail]][f[n]] = balance[bidx[e.tail]].get(f[n], 0.0) - 1.0
    for i, bus in enumerate(sys.buses):
        if q is not None:
            balance[i][q[i]] = 1.0
        b.add_row(f"balance{tag}[{bus.id}]", balance[i], "=", bus.demand)

    for n, e in enumerate(sys.lines):
        pos = sys.line_pos[n]
        t, h = theta[bidx[e.tail]], theta[bidx[e.head]]
        M = sys.big_m[n]
        if d[pos] > 0.5:
            # failed: no Kirchhoff coupling, no capacity
            b.add_row(f"flow_max{tag}[{e.id}]", {f[n]: 1.0}, "<", 0.0)
            b.add_row(f"flow_min{tag}[{e.id}]", {f[n]: -1.0}, "<", 0.0)
            continue
        kvl = {t: e.susceptance, h: -e.susceptance, f[n]: -1.0}
        if x_vars is not None:
            xv = x_vars[pos]
            # B(theta_t - theta_h) - f <= M (1 - x)   and   >= -M (1 - x)
            b.add_row(f"kvl_check{tag}[{e.id}]", {**kvl, xv: M}, "<", M)
            b.add_row(f"kvl_hat{tag}[{e.id}]", {**{k: -v for k, v in kvl.items()}, xv: M}, "<", M)
            b.add_row(f"flow_max{tag}[{e.id}]", {f[n]: 1.0, xv: -e.capacity}, "<", 0.0)
            b.add_row(f"flow_min{tag}[{e.id}]", {f[n]: -1.0, xv: -e.capacity}, "<", 0.0)
        else:
            built = x_fixed[pos] > 0.5
            slack = 0.0 if built else M
            b.add_row(f"kvl_check{tag}[{e.id}]", kvl, "<", slack)
            b.add_row(f"kvl_hat{tag}[{e.id}]", {k: -v for k, v in kvl.items()}, "<", slack)
            cap = e.capacity if built else 0.0
            b.add_row(f"flow_max{tag}[{e.id}]", {f[n]: 1.0}, "<", cap)
            b.add_row(f"flow_min{tag}[{e.id}]", {f[n]: -1.0}, "<", cap)

    for n, g in enumerate(sys.generators):
        pos = sys.gen_pos[n]
        if d[pos] > 0.5:
            b.add_row(f"gen_max{tag}[{g.id}]", {p[n]: 1.0}, "<", 0.0)
        elif x_vars is not None:
            b.add_row(f"gen_max{tag}[{g.id}]", {p[n]: 1.0, x_vars[pos]: -g.capacity}, "<", 0.0)
        else:
            cap = g.capacity if x_fixed[pos] > 0.5 else 0.0
            b.add_row(f"gen_max{tag}[{g.id}]", {p[n]: 1.0}, "<", cap)

    if q is not None and shed_limit is not None:
        b.add_row(f"shed_total{tag}", {j: 1.0 for j in q}, "<", shed_limit)
    return {"f": f, "p": p, "theta": theta, "q": q}


def plan_from_solution(sys: PowerSystem, x, engine: str = "highs") -> ExpansionPlan | None:
    """Round ``x``, re-solve the no-contingency dispatch exactly, and price the plan."""
    from nkeps.network import plan_from_vector

    x = np.round(np.asarray(x, dtype=float))
    x[sys.existing_mask()] = 1.0
    result = economic_dispatch(sys, x, engine=engine)
    if result is None:
        return None
    dispatch, op_cost = result
    invest = float(sys.invest_cost_vector() @ x)
    return plan_from_vector(
        sys, x, dispatch0=dispatch, invest_cost=invest, operating_cost=op_cost,
        total_objective=invest + sys.sigma * op_cost,
    )
