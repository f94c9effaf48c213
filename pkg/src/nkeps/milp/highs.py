"""HiGHS backend (via highspy) for LP and MILP solves.

Maximization problems are negated into minimization so every dual and
reduced cost leaves here as a derivative of the caller's own objective.
"""

from __future__ import annotations

import math

import highspy
import numpy as np

from nkeps.milp.model import DEFAULT_GAP, FEAS_TOL, INT_TOL, LinearProgram, Solution, Status

_HINF = highspy.kHighsInf

# Big-M models (master, interdiction) have weak relaxations in which the
# sub-MIP heuristics burn most of the time without improving the incumbent.
LEAN_HEURISTICS = {
    "mip_heuristic_run_rins": False,
    "mip_heuristic_run_rens": False,
    "mip_heuristic_run_root_reduced_cost": False,
    "mip_heuristic_run_zi_round": False,
}


def _row_bounds(lp: LinearProgram, rhs=None):
    rhs = lp.rhs if rhs is None else rhs
    lower = np.where(lp.senses == "<", -_HINF, rhs)
    upper = np.where(lp.senses == ">", _HINF, rhs)
    return lower.astype(float), upper.astype(float)


def _clip_inf(v):
    return np.clip(v, -_HINF, _HINF)


def _make_highs(lp: LinearProgram, gap: float, time_limit: float | None, integer: bool,
                abs_gap: float = 1e-9, int_tol: float = INT_TOL, extra: dict | None = None):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("primal_feasibility_tolerance", FEAS_TOL)
    h.setOptionValue("dual_feasibility_tolerance", FEAS_TOL)
    h.setOptionValue("mip_feasibility_tolerance", float(int_tol))
    h.setOptionValue("mip_rel_gap", float(gap))
    h.setOptionValue("mip_abs_gap", float(abs_gap))
    if time_limit is not None and math.isfinite(time_limit):
        h.setOptionValue("time_limit", float(time_limit))
    for key, value in (extra or {}).items():
        h.setOptionValue(key, value)

    model = highspy.HighsLp()
    n, m = lp.n_vars, lp.n_rows
    model.num_col_ = n
    model.num_row_ = m
    sign = -1.0 if lp.maximize else 1.0
    model.col_cost_ = sign * lp.c
    model.col_lower_ = _clip_inf(lp.lb)
    model.col_upper_ = _clip_inf(lp.ub)
    lo, hi = _row_bounds(lp)
    model.row_lower_ = lo
    model.row_upper_ = hi
    A = lp.A.tocsc()
    A.sort_indices()
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = A.indptr.astype(np.int32)
    model.a_matrix_.index_ = A.indices.astype(np.int32)
    model.a_matrix_.value_ = A.data.astype(float)
    if integer and lp.is_mip:
        model.integrality_ = [
            highspy.HighsVarType.kInteger if flag else highspy.HighsVarType.kContinuous
            for flag in lp.integer
        ]
    h.passModel(model)
    return h


def _extract(h, lp: LinearProgram, mip: bool) -> Solution:
    status = h.getModelStatus()
    MS = highspy.HighsModelStatus
    sign = -1.0 if lp.maximize else 1.0
    info = h.getInfo()

    if status == MS.kOptimal:
        st = Status.OPTIMAL
    elif status == MS.kInfeasible:
        return Solution(Status.INFEASIBLE)
    elif status == MS.kUnbounded:
        return Solution(Status.UNBOUNDED)
    elif status == MS.kUnboundedOrInfeasible:
        return Solution(_disambiguate(lp))
    elif status in (MS.kTimeLimit, MS.kIterationLimit, MS.kSolutionLimit, MS.kInterrupt):
        st = Status.TIME_LIMIT
    else:
        return Solution(Status.NUMERICAL, extra={"highs_status": str(status)})

    sol = h.getSolution()
    has_primal = info.primal_solution_status == 2 or (mip and sol.value_valid)
    x = np.array(sol.col_value, dtype=float) if has_primal else None
    if st is Status.TIME_LIMIT and x is None:
        return Solution(Status.TIME_LIMIT, bound=sign * info.mip_dual_bound if mip else float("nan"))
    obj = float(lp.c @ x) + lp.obj_constant if x is not None else float("nan")
    out = Solution(st, x=x, objective=obj)
    if mip:
        out.bound = sign * float(info.mip_dual_bound) + lp.obj_constant
        out.gap = float(info.mip_gap)
        out.nodes = int(info.mip_node_count)
    else:
        out.duals = sign * np.array(sol.row_dual, dtype=float)
        out.reduced_costs = sign * np.array(sol.col_dual, dtype=float)
        out.bound = obj
        out.gap = 0.0
    return out


def _disambiguate(lp: LinearProgram) -> Status:
    feas = LinearProgram(
        c=np.zeros(lp.n_vars), A=lp.A, senses=lp.senses, rhs=lp.rhs, lb=lp.lb, ub=lp.ub,
        integer=lp.integer, var_names=lp.var_names, row_names=lp.row_names,
    )
    h = _make_highs(feas, DEFAULT_GAP, None, integer=True)
    h.setOptionValue("presolve", "off")
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        return Status.INFEASIBLE
    if status == highspy.HighsModelStatus.kOptimal:
        return Status.UNBOUNDED
    return Status.NUMERICAL


def solve_lp(lp: LinearProgram) -> Solution:
    h = _make_highs(lp, DEFAULT_GAP, None, integer=False)
    h.run()
    return _extract(h, lp, mip=False)


def solve_milp(
    lp: LinearProgram,
    gap: float = DEFAULT_GAP,
    time_limit: float | None = None,
    abs_gap: float = 1e-9,
    int_tol: float = INT_TOL,
    options: dict | None = None,
) -> Solution:
    """``int_tol`` is HiGHS's MIP feasibility tolerance (integrality and rows);
    ``options`` are passed to HiGHS verbatim."""
    if not lp.is_mip:
        return solve_lp(lp)
    h = _make_highs(lp, gap, time_limit, integer=True, abs_gap=abs_gap, int_tol=int_tol, extra=options)
    h.run()
    return _extract(h, lp, mip=True)


class LPSession:
    """A loaded LP whose right-hand side and bounds can be changed between solves.

    Re-solves warm start from the previous basis, which is what makes
    sweeping thousands of contingency subproblems affordable.
    """

    def __init__(self, lp: LinearProgram):
        if lp.is_mip:
            raise ValueError("LPSession holds continuous problems only")
        self.lp = lp
        self._h = _make_highs(lp, DEFAULT_GAP, None, integer=False)
        self._rows = np.arange(lp.n_rows, dtype=np.int32)
        self._cols = np.arange(lp.n_vars, dtype=np.int32)

    def solve(self, rhs=None, lb=None, ub=None) -> Solution:
        lp = self.lp
        if rhs is not None:
            rhs = np.asarray(rhs, dtype=float)
            lo, hi = _row_bounds(lp, rhs)
            self._h.changeRowsBounds(lp.n_rows, self._rows, lo, hi)
            lp = lp.with_rhs(rhs)
        if lb is not None or ub is not None:
            lp = lp.with_bounds(lb, ub)
            self._h.changeColsBounds(
                lp.n_vars, self._cols, _clip_inf(lp.lb), _clip_inf(lp.ub)
            )
        self.lp = lp
        self._h.run()
        sol = _extract(self._h, lp, mip=False)
        if sol.status is Status.NUMERICAL:
            # a stale basis occasionally trips HiGHS; retry cold before reporting failure
            self._h.clearSolver()
            self._h.run()
            sol = _extract(self._h, lp, mip=False)
        return sol
