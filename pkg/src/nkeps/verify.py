"""Brute-force ground truth and compliance checking."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from nkeps.dcopf import LossOfLoadSolver
from nkeps.errors import SizeGuardError, ValidationError
from nkeps.network import (
    Contingency,
    ExpansionPlan,
    NkEpsilonPolicy,
    PowerSystem,
    check_plan,
    total_demand,
)

ENUMERATION_LIMIT = 100_000


def brute_force_worst(
    sys: PowerSystem,
    plan: ExpansionPlan | np.ndarray,
    j: int,
    limit: int = ENUMERATION_LIMIT,
    solver: LossOfLoadSolver | None = None,
) -> tuple[float, Contingency]:
    """Exact worst shed over every size-``j`` failure set.

    Ties resolve to the lexicographically smallest set in component order.
    """
    if not 0 <= j <= sys.N:
        raise ValueError(f"budget j = {j} outside [0, {sys.N}]")
    count = math.comb(sys.N, j)
    if count > limit:
        raise SizeGuardError(f"C({sys.N}, {j}) = {count} subsets exceeds the limit {limit}")
    solver = solver or LossOfLoadSolver(sys)
    x = plan.x_vector(sys) if isinstance(plan, ExpansionPlan) else np.asarray(plan, dtype=float)
    best, best_set = -math.inf, ()
    for combo in itertools.combinations(range(sys.N), j):
        d = np.zeros(sys.N)
        d[list(combo)] = 1.0
        z = solver.value(x, d)
        # strict improvement keeps the earliest (lexicographic) maximizer
        if z > best + 1e-9:
            best, best_set = z, combo
    failed = frozenset(sys.component_ids[n] for n in best_set)
    return best, Contingency(failed)


def shed_table(sys: PowerSystem, x, k: int, solver: LossOfLoadSolver | None = None) -> dict[tuple[int, ...], float]:
    """Shed for every failure set of size 0..k, keyed by sorted component positions."""
    solver = solver or LossOfLoadSolver(sys)
    x = np.asarray(x, dtype=float)
    table = {}
    for j in range(k + 1):
        for combo in itertools.combinations(range(sys.N), j):
            d = np.zeros(sys.N)
            d[list(combo)] = 1.0
            table[combo] = solver.value(x, d)
    return table


@dataclass
class BudgetCheck:
    j: int
    worst_shed: float
    allowed: float
    passed: bool
    contingency: Contingency
    oracle_shed: float | None = None


@dataclass
class ComplianceReport:
    mode: str
    checks: list[BudgetCheck] = field(default_factory=list)
    demand: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> BudgetCheck | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "total_demand": self.demand,
            "budgets": [
                {
                    "j": c.j,
                    "worst_shed": c.worst_shed,
                    "allowed": c.allowed,
                    "passed": c.passed,
                    "contingency": list(c.contingency.sorted_ids()),
                }
                for c in self.checks
            ],
        }


def check_plan_compliance(
    sys: PowerSystem,
    policy: NkEpsilonPolicy,
    plan: ExpansionPlan,
    mode: str = "enumerate",
    limit: int = ENUMERATION_LIMIT,
    oracle_options=None,
) -> ComplianceReport:
    """Worst shed per budget j = 0..k against the allowance eps_j * D.

    ``mode="enumerate"`` uses :func:`brute_force_worst`; ``mode="oracle"``
    uses the interdiction MILP. Either way j = 0 is the empty contingency.
    """
    from nkeps.dcopf import is_compliant

    if mode not in ("enumerate", "oracle"):
        raise ValueError(f"unknown compliance mode {mode!r}")
    problems = check_plan(sys, plan)
    if problems:
        raise ValidationError(problems)
    D = total_demand(sys)
    solver = LossOfLoadSolver(sys)
    x = plan.x_vector(sys)
    report = ComplianceReport(mode=mode, demand=D)
    for j in range(policy.k + 1):
        if j == 0:
            value, cont = solver.value(x, np.zeros(sys.N)), Contingency()
        elif mode == "enumerate":
            value, cont = brute_force_worst(sys, x, j, limit=limit, solver=solver)
        else:
            from nkeps.oracle import worst_case_contingency

            res = worst_case_contingency(sys, plan, j, oracle_options, solver=solver)
            value, cont = res.worst_shed, res.contingency
        allowed = policy.epsilon[j] * D
        report.checks.append(BudgetCheck(j, value, allowed, is_compliant(value, j, policy, D), cont))
    return report


def modes_agree(sys, policy, plan, tol_rel: float = 1e-6, oracle_options=None) -> tuple[bool, ComplianceReport, ComplianceReport]:
    a = check_plan_compliance(sys, policy, plan, "enumerate")
    b = check_plan_compliance(sys, policy, plan, "oracle", oracle_options=oracle_options)
    tol = tol_rel * (1.0 + total_demand(sys))
    ok = all(abs(x.worst_shed - y.worst_shed) <= tol for x, y in zip(a.checks, b.checks))
    ok = ok and a.passed == b.passed
    return ok, a, b
