"""Restricted master problem and the explicit-enumeration Benders loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from nkeps.dcopf import (
    FeasibilityCut,
    LossOfLoadSolver,
    add_dispatch_block,
    cut_from_dual,
    plan_from_solution,
    violation_tol,
)
from nkeps.errors import SolverError, StallError
from nkeps.extensive import enumerate_contingencies
from nkeps.milp import LEAN_HEURISTICS, LinearProgram, ModelBuilder, Status, solve_milp
from nkeps.network import ExpansionPlan, NkEpsilonPolicy, PowerSystem, require_valid, total_demand
from nkeps.options import SolveOptions
from nkeps.record import RunRecord

__all__ = ["FeasibilityCut", "MasterState", "RestrictedMaster", "build_rmp", "run_benders"]


def build_rmp(sys: PowerSystem, policy: NkEpsilonPolicy, cuts=()) -> tuple[LinearProgram, np.ndarray]:
    """Design MILP over x with the no-contingency dispatch and every pooled cut."""
    b = ModelBuilder()
    existing = sys.existing_mask()
    cost = sys.invest_cost_vector()
    x = np.array(
        [
            b.add_var(f"x[{cid}]", lb=1.0 if existing[n] else 0.0, ub=1.0, cost=cost[n], integer=True)
            for n, cid in enumerate(sys.component_ids)
        ],
        dtype=int,
    )
    add_dispatch_block(b, sys, x, tag="0", with_shed=False, cost_weight=sys.sigma)
    for n, cut in enumerate(cuts):
        coefs = {int(x[pos]): float(v) for pos, v in enumerate(cut.coef) if v != 0.0}
        b.add_row(f"cut[{n}]", coefs, "<", cut.rhs - cut.constant)
    return b.build(), x


@dataclass
class MasterState:
    cuts: list[FeasibilityCut] = field(default_factory=list)
    t: int = 0
    incumbent: np.ndarray | None = None
    history: list[tuple[int, ...]] = field(default_factory=list)


class RestrictedMaster:
    """Owns the cut pool and solves the master MILP on demand."""

    def __init__(self, sys: PowerSystem, policy: NkEpsilonPolicy, options: SolveOptions, record: RunRecord):
        self.sys = sys
        self.policy = policy
        self.options = options
        self.record = record
        self.state = MasterState()

    def add_cut(self, cut: FeasibilityCut) -> bool:
        """Pool ``cut`` unless an identical one is already held."""
        if any(cut.same_as(old) for old in self.state.cuts):
            self.record.duplicate_cuts += 1
            return False
        self.state.cuts.append(cut)
        self.record.cuts += 1
        self.record.contingencies.append(cut.source)
        return True

    def solve(self, time_left: float | None) -> tuple[str, np.ndarray | None, ExpansionPlan | None]:
        t0 = time.perf_counter()
        lp, x_cols = build_rmp(self.sys, self.policy, self.state.cuts)
        sol = solve_milp(lp, gap=self.options.gap, time_limit=time_left, engine=self.options.engine,
                         highs_options=LEAN_HEURISTICS)
        self.record.tick("rmp", time.perf_counter() - t0)
        if sol.status is Status.INFEASIBLE:
            return "infeasible", None, None
        if sol.status is Status.TIME_LIMIT:
            return "time_limit", None, None
        if sol.status is not Status.OPTIMAL:
            raise SolverError(sol.status, f"master problem ended with status {sol.status.value}")
        self.record.bound = sol.bound
        self.record.master_objectives.append(float(sol.objective))
        x = np.round(sol.x[x_cols])
        key = tuple(int(v) for v in x)
        if key in self.state.history:
            raise StallError(f"master returned a repeated design at iteration {self.state.t}")
        self.state.history.append(key)
        self.state.incumbent = x
        plan = plan_from_solution(self.sys, x, engine=self.options.engine)
        if plan is None:
            raise SolverError(Status.NUMERICAL, "master design admits no no-contingency dispatch")
        return "optimal", x, plan


def _time_left(options: SolveOptions, start: float) -> float | None:
    if options.time_limit_secs is None:
        return None
    return max(0.0, options.time_limit_secs - (time.perf_counter() - start))


def run_benders(sys: PowerSystem, policy: NkEpsilonPolicy, options: SolveOptions | None = None):
    """Benders loop with a full sweep of every contingency state per iteration.

    Every violated state found in a sweep contributes a cut (multi-cut);
    cuts are committed in enumeration order. Returns ``(plan or None, RunRecord)``.
    """
    options = options or SolveOptions()
    require_valid(sys, policy)
    start = time.perf_counter()
    record = RunRecord(method="bd")
    universe = enumerate_contingencies(sys, policy.k, options.state_limit)
    record.m = universe.m
    D = total_demand(sys)
    tol = violation_tol(D)
    master = RestrictedMaster(sys, policy, options, record)
    solver = LossOfLoadSolver(sys, engine=options.engine)

    while True:
        if master.state.t >= options.max_iterations:
            record.message = f"stopped after {options.max_iterations} iterations"
            record.finish(None, time.perf_counter() - start, "iteration_limit")
            return None, record
        left = _time_left(options, start)
        if left is not None and left <= 0.0:
            record.finish(None, time.perf_counter() - start, "time_limit")
            return None, record
        record.iterations += 1
        status, x, plan = master.solve(left)
        if status != "optimal":
            record.finish(None, time.perf_counter() - start, status)
            return None, record

        added = violated = 0
        t_sweep = time.perf_counter()
        for cont, d in universe.vectors():
            z, dual = solver.solve(x, d)
            if z <= policy.epsilon[cont.size] * D + tol:
                continue
            violated += 1
            cut = cut_from_dual(sys, cont, dual, policy, x_source=x, z=z)
            added += master.add_cut(cut)
            if time.perf_counter() - start > (options.time_limit_secs or float("inf")):
                break
        record.tick("dsp", time.perf_counter() - t_sweep)
        record.subproblem_solves = solver.solves
        if violated == 0:
            record.finish(plan, time.perf_counter() - start, "optimal")
            return plan, record
        if added == 0:
            raise StallError("every violated state reproduced a cut already in the pool")
        master.state.t += 1
