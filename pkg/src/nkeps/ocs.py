"""Online contingency screening: master problem plus interdiction oracle.

Each outer iteration solves the master, then scans budgets j = 1..k with
the oracle. The first budget whose worst case exceeds its allowance yields
one feasibility cut and the loop restarts from the master; a full scan with
no violation proves the current design optimal.
"""

from __future__ import annotations

import time

from nkeps.benders import RestrictedMaster, _time_left
from nkeps.dcopf import LossOfLoadSolver, cut_from_dual, violation_tol
from nkeps.errors import StallError
from nkeps.extensive import count_states
from nkeps.network import NkEpsilonPolicy, PowerSystem, require_valid, total_demand
from nkeps.options import SolveOptions
from nkeps.oracle import worst_case_contingency
from nkeps.record import RunRecord


def run_ocs(sys: PowerSystem, policy: NkEpsilonPolicy, options: SolveOptions | None = None, log=None):
    """Returns ``(plan or None, RunRecord)``; ``log`` receives one line per iteration."""
    options = options or SolveOptions()
    require_valid(sys, policy)
    start = time.perf_counter()
    record = RunRecord(method="ocs")
    record.m = count_states(sys.N, policy.k)
    D = total_demand(sys)
    tol = violation_tol(D)
    master = RestrictedMaster(sys, policy, options, record)
    solver = LossOfLoadSolver(sys, engine=options.engine)

    while True:
        if master.state.t >= options.max_iterations or record.cuts >= options.max_cuts:
            record.message = f"stopped after {record.iterations} iterations and {record.cuts} cuts"
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

        violated = None
        for j in range(1, policy.k + 1):
            t0 = time.perf_counter()
            result = worst_case_contingency(sys, x, j, options, solver=solver)
            record.tick("oracle", time.perf_counter() - t0)
            record.oracle_calls += 1
            if result.worst_shed > policy.epsilon[j] * D + tol:
                violated = result
                break
        if log is not None:
            found = f"j={violated.contingency.size} {violated.contingency} shed={violated.worst_shed:.6g}" if violated else "none"
            log(f"iter {record.iterations}: cost={plan.total_objective:.6g} violation={found}")
        if violated is None:
            record.subproblem_solves = solver.solves
            record.finish(plan, time.perf_counter() - start, "optimal")
            return plan, record

        t0 = time.perf_counter()
        z, dual = solver.solve(x, violated.contingency.to_vector(sys))
        cut = cut_from_dual(sys, violated.contingency, dual, policy, x_source=x, z=z)
        record.tick("dsp", time.perf_counter() - t0)
        if not master.add_cut(cut):
            raise StallError(f"oracle reproduced an existing cut for {violated.contingency}")
        master.state.t += 1
