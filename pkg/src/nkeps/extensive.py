"""Extensive form: one DC power flow block per contingency state, solved as one MILP."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from nkeps.dcopf import add_dispatch_block, plan_from_solution
from nkeps.errors import SizeGuardError
from nkeps.milp import ModelBuilder, Status, solve_milp
from nkeps.network import Contingency, NkEpsilonPolicy, PowerSystem, require_valid, total_demand
from nkeps.options import SolveOptions
from nkeps.record import RunRecord

STATE_LIMIT = 1_000_000


def count_states(N: int, k: int) -> int:
    return sum(math.comb(N, j) for j in range(1, k + 1))


@dataclass(frozen=True)
class ContingencyUniverse:
    """All failure sets of size 1..k in lexicographic component order.

    The empty (no-contingency) state is implicit and not counted in ``m``.
    """

    sys: PowerSystem
    k: int

    @property
    def m(self) -> int:
        return count_states(self.sys.N, self.k)

    def __len__(self) -> int:
        return self.m

    def __iter__(self):
        ids = self.sys.component_ids
        for j in range(1, self.k + 1):
            for combo in itertools.combinations(ids, j):
                yield Contingency(frozenset(combo))

    def vectors(self):
        """Yield (contingency, failure vector) pairs in enumeration order."""
        N = self.sys.N
        for cont in self:
            d = np.zeros(N)
            for cid in cont.failed:
                d[self.sys.component_index[cid]] = 1.0
            yield cont, d


def enumerate_contingencies(sys: PowerSystem, k: int, limit: int = STATE_LIMIT) -> ContingencyUniverse:
    if not 0 <= k <= sys.N:
        raise ValueError(f"k = {k} outside [0, N = {sys.N}]")
    m = count_states(sys.N, k)
    if m > limit:
        raise SizeGuardError(
            f"contingency universe has m = {m} states (N = {sys.N}, k = {k}), "
            f"above the size guard of {limit}"
        )
    return ContingencyUniverse(sys, k)


def build_ef(sys: PowerSystem, policy: NkEpsilonPolicy, limit: int = STATE_LIMIT):
    """Return the extensive-form MILP and the positions of its build columns."""
    require_valid(sys, policy)
    universe = enumerate_contingencies(sys, policy.k, limit)
    D = total_demand(sys)
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
    add_dispatch_block(b, sys, x, tag="0", with_shed=True, shed_limit=policy.epsilon[0] * D,
                       cost_weight=sys.sigma)
    for s, (cont, d) in enumerate(universe.vectors(), start=1):
        add_dispatch_block(b, sys, x, d=d, tag=str(s), with_shed=True,
                           shed_limit=policy.epsilon[cont.size] * D)
    return b.build(), x, universe


def solve_ef(sys: PowerSystem, policy: NkEpsilonPolicy, options: SolveOptions | None = None):
    """Solve the extensive form; returns ``(plan or None, RunRecord)``."""
    options = options or SolveOptions()
    record = RunRecord(method="ef")
    t0 = time.perf_counter()
    lp, x_cols, universe = build_ef(sys, policy, options.state_limit)
    record.m = universe.m
    record.timers["build"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    sol = solve_milp(lp, gap=options.gap, time_limit=options.time_limit_secs, engine=options.engine)
    record.timers["milp"] = time.perf_counter() - t1
    record.iterations = 1
    record.status = sol.status.value
    if sol.status is Status.OPTIMAL or (sol.status is Status.TIME_LIMIT and sol.x is not None):
        plan = plan_from_solution(sys, sol.x[x_cols], engine=options.engine)
        record.bound = sol.bound
        record.finish(plan, time.perf_counter() - t0)
        return plan, record
    record.finish(None, time.perf_counter() - t0)
    return None, record
