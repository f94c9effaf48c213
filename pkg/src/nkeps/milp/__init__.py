"""LP/MILP solving behind one narrow interface.

Two engines are available: ``"highs"`` (default, via highspy) and
``"bundled"`` (dense simplex plus branch-and-bound in this package). Every
formulation elsewhere goes through :func:`solve_lp` / :func:`solve_milp`.
"""

from __future__ import annotations

from nkeps.milp import bnb, highs, simplex
from nkeps.milp.model import (
    DEFAULT_GAP,
    FEAS_TOL,
    INF,
    INT_TOL,
    LinearProgram,
    ModelBuilder,
    Solution,
    Status,
)

ENGINES = ("highs", "bundled")


def _check(lp: LinearProgram) -> None:
    problems = lp.validate()
    if problems:
        raise ValueError("malformed linear program: " + "; ".join(problems))


def solve_lp(lp: LinearProgram, engine: str = "highs") -> Solution:
    _check(lp)
    lp = lp.relaxed() if lp.is_mip else lp
    if engine == "highs":
        return highs.solve_lp(lp)
    if engine == "bundled":
        return simplex.solve_lp(lp)
    raise ValueError(f"unknown engine {engine!r}")


def solve_milp(
    lp: LinearProgram,
    gap: float = DEFAULT_GAP,
    time_limit: float | None = None,
    engine: str = "highs",
    abs_gap: float = 1e-9,
    int_tol: float = INT_TOL,
    highs_options: dict | None = None,
) -> Solution:
    _check(lp)
    if engine == "highs":
        return highs.solve_milp(lp, gap=gap, time_limit=time_limit, abs_gap=abs_gap, int_tol=int_tol,
                                options=highs_options)
    if engine == "bundled":
        return bnb.solve_milp(lp, gap=gap, time_limit=time_limit)
    raise ValueError(f"unknown engine {engine!r}")


LPSession = highs.LPSession
LEAN_HEURISTICS = highs.LEAN_HEURISTICS

__all__ = [
    "DEFAULT_GAP",
    "ENGINES",
    "FEAS_TOL",
    "INF",
    "INT_TOL",
    "LEAN_HEURISTICS",
    "LPSession",
    "LinearProgram",
    "ModelBuilder",
    "Solution",
    "Status",
    "solve_lp",
    "solve_milp",
]
