"""Best-bound branch-and-bound over any LP backend."""

from __future__ import annotations

import heapq
import math
import time
from typing import Callable

import numpy as np

from nkeps.milp import simplex
from nkeps.milp.model import DEFAULT_GAP, INT_TOL, LinearProgram, Solution, Status


def _rel_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    return abs(incumbent - bound) / max(1e-10, abs(incumbent))


def solve_milp(
    lp: LinearProgram,
    gap: float = DEFAULT_GAP,
    time_limit: float | None = None,
    lp_solver: Callable[[LinearProgram], Solution] = simplex.solve_lp,
    max_nodes: int = 1_000_000,
) -> Solution:
    """Branch on the most fractional integer variable (ties: lowest index),
    exploring open nodes by best bound (ties: lowest node id)."""
    start = time.perf_counter()
    sign = -1.0 if lp.maximize else 1.0
    int_idx = np.flatnonzero(lp.integer)
    base = lp.relaxed()
    lb0 = lp.lb.copy()
    ub0 = lp.ub.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)

    incumbent_x = None
    incumbent = math.inf  # in minimization sense
    node_counter = 0
    heap: list = [(-math.inf, 0, lb0, ub0)]
    best_bound = -math.inf
    explored = 0
    unbounded_root = False

    while heap:
        if time_limit is not None and time.perf_counter() - start > time_limit:
            best_bound = heap[0][0]
            status = Status.TIME_LIMIT
            break
        if explored >= max_nodes:
            best_bound = heap[0][0]
            status = Status.TIME_LIMIT
            break
        parent_bound, node_id, lb, ub = heapq.heappop(heap)
        if parent_bound >= incumbent - _abs_tol(incumbent, gap):
            continue
        explored += 1
        sol = lp_solver(base.with_bounds(lb, ub))
        if sol.status is Status.INFEASIBLE:
            continue
        if sol.status is Status.UNBOUNDED:
            if node_id == 0:
                unbounded_root = True
                break
            continue
        if sol.status is not Status.OPTIMAL:
            return Solution(Status.NUMERICAL)
        value = sign * (sol.objective - lp.obj_constant)
        if value >= incumbent - _abs_tol(incumbent, gap):
            continue
        xv = sol.x
        frac = np.abs(xv[int_idx] - np.round(xv[int_idx]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            x_int = xv.copy()
            x_int[int_idx] = np.round(x_int[int_idx])
            incumbent, incumbent_x = value, x_int
            continue
        # most fractional; argmax returns the lowest index among ties
        distance = np.abs(frac - 0.5)
        pick = int(int_idx[int(np.argmin(np.round(distance, 12)))])
        down_ub = ub.copy()
        down_ub[pick] = math.floor(xv[pick])
        up_lb = lb.copy()
        up_lb[pick] = math.ceil(xv[pick])
        node_counter += 1
        heapq.heappush(heap, (value, node_counter, lb, down_ub))
        node_counter += 1
        heapq.heappush(heap, (value, node_counter, up_lb, ub))
    else:
        status = Status.OPTIMAL
        best_bound = incumbent

    if unbounded_root:
        return Solution(Status.UNBOUNDED, nodes=explored)
    if incumbent_x is None:
        if status is Status.OPTIMAL:
            return Solution(Status.INFEASIBLE, nodes=explored)
        return Solution(Status.TIME_LIMIT, nodes=explored)
    if status is Status.OPTIMAL:
        open_bounds = [h[0] for h in heap]
        best_bound = min([incumbent, *open_bounds])
    best_bound = min(best_bound, incumbent)
    obj = float(lp.c @ incumbent_x) + lp.obj_constant
    return Solution(
        status,
        x=incumbent_x,
        objective=obj,
        bound=sign * best_bound + lp.obj_constant,
        gap=_rel_gap(incumbent, best_bound),
        nodes=explored,
    )


def _abs_tol(incumbent: float, gap: float) -> float:
    if not math.isfinite(incumbent):
        return 0.0
    return gap * max(1e-10, abs(incumbent))
