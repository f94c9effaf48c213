"""Run records: what a solve did, how long each phase took, which cuts it made."""

from __future__ import annotations

from dataclasses import dataclass, field

from nkeps.network import Contingency, ExpansionPlan


@dataclass
class RunRecord:
    method: str
    status: str = "running"
    objective: float | None = None
    invest_cost: float | None = None
    operating_cost: float | None = None
    bound: float | None = None
    iterations: int = 0
    cuts: int = 0
    duplicate_cuts: int = 0
    m: int | None = None
    wall_time: float = 0.0
    timers: dict[str, float] = field(default_factory=dict)
    contingencies: list[Contingency] = field(default_factory=list)
    subproblem_solves: int = 0
    oracle_calls: int = 0
    master_objectives: list[float] = field(default_factory=list)
    plan: ExpansionPlan | None = None
    message: str = ""

    def tick(self, phase: str, seconds: float) -> None:
        self.timers[phase] = self.timers.get(phase, 0.0) + seconds

    def finish(self, plan: ExpansionPlan | None, wall: float, status: str | None = None) -> None:
        self.plan = plan
        self.wall_time = wall
        if status is not None:
            self.status = status
        if plan is not None:
            self.objective = plan.total_objective
            self.invest_cost = plan.invest_cost
            self.operating_cost = plan.operating_cost

    @property
    def spawning_contingencies(self) -> int:
        return len({c.failed for c in self.contingencies})

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "status": self.status,
            "objective": self.objective,
            "invest_cost": self.invest_cost,
            "operating_cost": self.operating_cost,
            "iterations": self.iterations,
            "cuts": self.cuts,
            "duplicate_cuts": self.duplicate_cuts,
            "m": self.m,
            "wall_time": self.wall_time,
            "phase_times": dict(self.timers),
            "contingencies": [list(c.sorted_ids()) for c in self.contingencies],
            "cont": self.spawning_contingencies,
            "subproblem_solves": self.subproblem_solves,
            "oracle_calls": self.oracle_calls,
        }
        if self.master_objectives:
            out["master_objectives"] = list(self.master_objectives)
        if self.bound is not None:
            out["bound"] = self.bound
        if self.message:
            out["message"] = self.message
        if self.plan is not None:
            out["built"] = self.plan.built_ids()
        return out
