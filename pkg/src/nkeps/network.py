"""Domain types for power systems, survivability policies, contingencies and plans.

All structural validation lives here. Quantities are in MW, MW/rad for
susceptance, and radians; nothing is converted internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from nkeps.errors import ValidationError


@dataclass(frozen=True)
class Bus:
    id: str
    demand: float = 0.0


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    capacity: float
    invest_cost: float = 0.0
    marginal_cost: float = 0.0
    existing: bool = False

    @property
    def effective_invest_cost(self) -> float:
        return 0.0 if self.existing else self.invest_cost


@dataclass(frozen=True)
class TransmissionElement:
    id: str
    tail: str
    head: str
    susceptance: float
    capacity: float
    invest_cost: float = 0.0
    existing: bool = False

    @property
    def effective_invest_cost(self) -> float:
        return 0.0 if self.existing else self.invest_cost


@dataclass(frozen=True)
class PowerSystem:
    """Immutable network description.

    Generators and transmission elements share one id namespace (a
    contingency may mix both), which is ordered lexicographically to give
    the canonical component order used by every vector representation.
    """

    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...]
    lines: tuple[TransmissionElement, ...]
    sigma: float = 1.0
    theta_bound: float = math.pi

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def N(self) -> int:
        return len(self.generators) + len(self.lines)

    @cached_property
    def component_ids(self) -> tuple[str, ...]:
        return tuple(sorted([g.id for g in self.generators] + [e.id for e in self.lines]))

    @cached_property
    def component_index(self) -> dict[str, int]:
        return {cid: n for n, cid in enumerate(self.component_ids)}

    @cached_property
    def bus_index(self) -> dict[str, int]:
        return {b.id: n for n, b in enumerate(self.buses)}

    @cached_property
    def generator_map(self) -> dict[str, Generator]:
        return {g.id: g for g in self.generators}

    @cached_property
    def line_map(self) -> dict[str, TransmissionElement]:
        return {e.id: e for e in self.lines}

    @cached_property
    def gen_pos(self) -> np.ndarray:
        """Component-order position of each generator, in generator order."""
        return np.array([self.component_index[g.id] for g in self.generators], dtype=int)

    @cached_property
    def line_pos(self) -> np.ndarray:
        return np.array([self.component_index[e.id] for e in self.lines], dtype=int)

    @cached_property
    def big_m(self) -> np.ndarray:
        """Per-line big-M, 2*B*theta_bound + F, valid whenever |theta| <= theta_bound."""
        return np.array(
            [2.0 * e.susceptance * self.theta_bound + e.capacity for e in self.lines], dtype=float
        )

    @property
    def total_demand(self) -> float:
        return total_demand(self)

    def is_component(self, cid: str) -> bool:
        return cid in self.component_index

    def existing_ids(self) -> list[str]:
        return [c.id for c in (*self.generators, *self.lines) if c.existing]

    def candidate_ids(self) -> list[str]:
        return [c.id for c in (*self.generators, *self.lines) if not c.existing]

    def invest_cost_vector(self) -> np.ndarray:
        cost = np.zeros(self.N)
        for c in (*self.generators, *self.lines):
            cost[self.component_index[c.id]] = c.effective_invest_cost
        return cost

    def existing_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        for cid in self.existing_ids():
            mask[self.component_index[cid]] = True
        return mask


@dataclass(frozen=True)
class NkEpsilonPolicy:
    """Contingency budget ``k`` and allowable shed fractions ``epsilon[0..k]``."""

    k: int
    epsilon: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "epsilon", tuple(float(e) for e in self.epsilon))

    def allowed_shed(self, j: int, demand: float) -> float:
        return self.epsilon[j] * demand

    @classmethod
    def strict(cls, k: int) -> "NkEpsilonPolicy":
        return cls(k, (0.0,) * (k + 1))


@dataclass(frozen=True)
class Contingency:
    """A set of simultaneously failed generators and/or lines."""

    failed: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "failed", frozenset(self.failed))

    @property
    def size(self) -> int:
        return len(self.failed)

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.failed))

    def to_vector(self, sys: PowerSystem) -> np.ndarray:
        d = np.zeros(sys.N)
        for cid in self.failed:
            if cid not in sys.component_index:
                raise KeyError(f"unknown component id {cid!r} in contingency")
            d[sys.component_index[cid]] = 1.0
        return d

    @classmethod
    def from_vector(cls, sys: PowerSystem, d: Iterable[float]) -> "Contingency":
        d = np.asarray(d, dtype=float)
        if d.shape != (sys.N,):
            raise ValueError(f"contingency vector has shape {d.shape}, expected ({sys.N},)")
        return cls(frozenset(sys.component_ids[n] for n in np.flatnonzero(d > 0.5)))

    def __str__(self) -> str:
        return "{" + ", ".join(self.sorted_ids()) + "}"


@dataclass(frozen=True)
class Dispatch:
    flows: Mapping[str, float] = field(default_factory=dict)
    outputs: Mapping[str, float] = field(default_factory=dict)
    angles: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ExpansionPlan:
    build: Mapping[str, int]
    dispatch0: Dispatch = field(default_factory=Dispatch)
    invest_cost: float = 0.0
    operating_cost: float = 0.0
    total_objective: float = 0.0

    def x_vector(self, sys: PowerSystem) -> np.ndarray:
        x = np.zeros(sys.N)
        for cid, bit in self.build.items():
            if cid not in sys.component_index:
                raise KeyError(f"unknown component id {cid!r} in plan")
            x[sys.component_index[cid]] = float(bit)
        return x

    def built_ids(self) -> list[str]:
        return sorted(cid for cid, bit in self.build.items() if bit)


def total_demand(sys: PowerSystem) -> float:
    return float(sum(b.demand for b in sys.buses))


def plan_from_vector(sys: PowerSystem, x: Iterable[float], **kwargs) -> ExpansionPlan:
    x = np.asarray(x, dtype=float)
    build = {cid: int(round(x[n])) for n, cid in enumerate(sys.component_ids)}
    return ExpansionPlan(build=build, **kwargs)


def build_all(sys: PowerSystem) -> ExpansionPlan:
    return plan_from_vector(sys, np.ones(sys.N))


def build_existing(sys: PowerSystem) -> ExpansionPlan:
    return plan_from_vector(sys, sys.existing_mask().astype(float))


def validate_system(sys: PowerSystem, policy: NkEpsilonPolicy | None = None) -> list[str]:
    """List every invariant violation of ``sys`` (and ``policy``); empty means valid."""
    report = []
    bus_ids = [b.id for b in sys.buses]
    seen = set()
    for b in sys.buses:
        if b.id in seen:
            report.append(f"duplicate bus id {b.id!r}")
        seen.add(b.id)
        if not (b.demand >= 0.0 and math.isfinite(b.demand)):
            report.append(f"bus {b.id!r}: demand must be finite and >= 0")
    known_buses = set(bus_ids)

    comp_seen = set()
    for g in sys.generators:
        if g.id in comp_seen:
            report.append(f"duplicate component id {g.id!r}")
        comp_seen.add(g.id)
        if g.bus not in known_buses:
            report.append(f"generator {g.id!r}: unknown bus {g.bus!r}")
        if not (g.capacity > 0.0 and math.isfinite(g.capacity)):
            report.append(f"generator {g.id!r}: capacity must be > 0")
        if not g.invest_cost >= 0.0:
            report.append(f"generator {g.id!r}: invest_cost must be >= 0")
        if not g.marginal_cost >= 0.0:
            report.append(f"generator {g.id!r}: marginal_cost must be >= 0")
    for e in sys.lines:
        if e.id in comp_seen:
            report.append(f"duplicate component id {e.id!r}")
        comp_seen.add(e.id)
        for end, ref in (("tail", e.tail), ("head", e.head)):
            if ref not in known_buses:
                report.append(f"line {e.id!r}: unknown {end} bus {ref!r}")
        if e.tail == e.head:
            report.append(f"line {e.id!r}: tail equals head")
        if not (e.susceptance > 0.0 and math.isfinite(e.susceptance)):
            report.append(f"line {e.id!r}: susceptance must be > 0")
        if not (e.capacity > 0.0 and math.isfinite(e.capacity)):
            report.append(f"line {e.id!r}: capacity must be > 0")
        if not e.invest_cost >= 0.0:
            report.append(f"line {e.id!r}: invest_cost must be >= 0")

    if sys.N < 1:
        report.append("system has no generators or lines (N = 0)")
    if not total_demand(sys) > 0.0:
        report.append("total demand must be > 0")
    if not sys.sigma >= 0.0:
        report.append("sigma must be >= 0")
    if not (sys.theta_bound > 0.0 and math.isfinite(sys.theta_bound)):
        report.append("theta_bound must be finite and > 0")

    if policy is not None:
        report.extend(validate_policy(policy, sys.N))
    return report


def validate_policy(policy: NkEpsilonPolicy, n_components: int | None = None) -> list[str]:
    report = []
    k, eps = policy.k, policy.epsilon
    if not isinstance(k, int) or k < 0:
        report.append(f"k must be a nonnegative integer, got {k!r}")
        return report
    if len(eps) != k + 1:
        report.append(f"epsilon length {len(eps)} does not equal k+1 = {k + 1}")
        return report
    if eps[0] != 0.0:
        report.append("epsilon_0 must be 0")
    if k >= 1 and eps[1] != 0.0:
        report.append("epsilon_1 must be 0")
    for j, e in enumerate(eps):
        if not 0.0 <= e < 1.0:
            report.append(f"epsilon_{j} = {e} outside [0, 1)")
    for j in range(1, len(eps)):
        if eps[j] < eps[j - 1]:
            report.append(f"epsilon not nondecreasing at j={j}")
    if n_components is not None and k > n_components:
        report.append(f"k = {k} exceeds N = {n_components}")
    return report


def check_plan(sys: PowerSystem, plan: ExpansionPlan) -> list[str]:
    """Cross-validate a plan against a system: ids, bits, existing elements."""
    report = []
    for cid, bit in plan.build.items():
        if cid not in sys.component_index:
            report.append(f"plan references unknown component {cid!r}")
        elif bit not in (0, 1):
            report.append(f"plan bit for {cid!r} is {bit!r}, expected 0 or 1")
    for cid in sys.existing_ids():
        if plan.build.get(cid, 0) != 1:
            report.append(f"existing component {cid!r} must be built")
    return report


def require_valid(sys: PowerSystem, policy: NkEpsilonPolicy | None = None) -> None:
    report = validate_system(sys, policy)
    if report:
        raise ValidationError(report)


def effective_capacity(
    sys: PowerSystem, plan: ExpansionPlan, cont: Contingency
) -> dict[str, float]:
    """Capacity left on each generator and line once ``cont`` fails under ``plan``."""
    for cid in cont.failed:
        if cid not in sys.component_index:
            raise KeyError(f"unknown component id {cid!r} in contingency")
    for cid in plan.build:
        if cid not in sys.component_index:
            raise KeyError(f"unknown component id {cid!r} in plan")
    caps = {}
    for c in (*sys.generators, *sys.lines):
        up = plan.build.get(c.id, 0) and c.id not in cont.failed
        caps[c.id] = c.capacity if up else 0.0
    return caps
