"""Case, plan and report files.

Everything is JSON. A case file looks like::

    {
      "schema_version": "1.0",
      "name": "optional label",
      "system": {
        "buses": [{"id": "A", "demand": 100.0}, ...],
        "generators": [{"id": "gA", "bus": "A", "capacity": 50.0, "invest_cost": 0.0,
                        "marginal_cost": 30.0, "existing": true}, ...],
        "lines": [{"id": "L1", "from": "B", "to": "A", "susceptance": 1000.0,
                   "capacity": 80.0, "invest_cost": 0.0, "existing": true}, ...],
        "sigma": 1.0,
        "theta_bound": 3.14159265358979
      },
      "policy": {"k": 1, "epsilon": [0.0, 0.0]},
      "solver": {"gap": 0.001, "time_limit_secs": null, "dual_bound": null}
    }

Unknown keys are rejected. Reals are written in shortest round-trip form
with keys sorted, so writing is exact and deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from nkeps.errors import CaseFormatError, ValidationError
from nkeps.network import (
    Bus,
    Dispatch,
    ExpansionPlan,
    Generator,
    NkEpsilonPolicy,
    PowerSystem,
    TransmissionElement,
    validate_system,
)
from nkeps.options import SolveOptions

SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class Case:
    system: PowerSystem
    policy: NkEpsilonPolicy
    options: SolveOptions
    name: str = ""


def _real(x: float) -> float:
    # shortest round-trip repr is exact; only fold -0.0 into 0.0
    return x + 0.0


def _canon(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite value {obj}")
        return _real(obj)
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if hasattr(obj, "item"):
        return _canon(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(_canon(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{what}: syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


class _Fields:
    """Typed access to one JSON object, reporting errors by field path."""

    def __init__(self, data, path: str, allowed: set[str]):
        if not isinstance(data, dict):
            raise CaseFormatError(f"{path}: expected an object, got {type(data).__name__}")
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise CaseFormatError(f"{path}: unknown field(s) {', '.join(map(repr, unknown))}")
        self.data = data
        self.path = path

    def _where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key) -> bool:
        return key in self.data and self.data[key] is not None

    def get(self, key, kind, default=...):
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise CaseFormatError(f"{self._where(key)}: required field missing")
            return default
        value = self.data[key]
        where = self._where(key)
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise CaseFormatError(f"{where}: expected a number, got {value!r}")
            if not math.isfinite(float(value)):
                raise CaseFormatError(f"{where}: must be finite")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise CaseFormatError(f"{where}: expected an integer, got {value!r}")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise CaseFormatError(f"{where}: expected true/false, got {value!r}")
            return value
        if kind is str:
            if not isinstance(value, str) or not value:
                raise CaseFormatError(f"{where}: expected a non-empty string, got {value!r}")
            return value
        if kind is list:
            if not isinstance(value, list):
                raise CaseFormatError(f"{where}: expected an array")
            return value
        if kind is dict:
            return value
        raise TypeError(kind)


def parse_case(text: str) -> Case:
    """Parse and fully validate a case document."""
    data = _load_json(text, "case")
    top = _Fields(data, "", {"schema_version", "name", "description", "system", "policy", "solver"})
    version = top.get("schema_version", str)
    if version != SCHEMA_VERSION:
        raise CaseFormatError(f"schema_version: unsupported version {version!r} (expected {SCHEMA_VERSION!r})")
    name = top.get("name", str, "")

    sysf = _Fields(top.get("system", dict), "system", {"buses", "generators", "lines", "sigma", "theta_bound"})
    buses = []
    seen = set()
    for n, raw in enumerate(sysf.get("buses", list)):
        f = _Fields(raw, f"system.buses[{n}]", {"id", "demand"})
        bus = Bus(f.get("id", str), f.get("demand", float, 0.0))
        if bus.id in seen:
            raise CaseFormatError(f"system.buses[{n}].id: duplicate bus id {bus.id!r}")
        seen.add(bus.id)
        buses.append(bus)
    gens = []
    for n, raw in enumerate(sysf.get("generators", list, [])):
        f = _Fields(raw, f"system.generators[{n}]",
                    {"id", "bus", "capacity", "invest_cost", "marginal_cost", "existing"})
        gens.append(Generator(
            id=f.get("id", str), bus=f.get("bus", str), capacity=f.get("capacity", float),
            invest_cost=f.get("invest_cost", float, 0.0), marginal_cost=f.get("marginal_cost", float, 0.0),
            existing=f.get("existing", bool, False),
        ))
    lines = []
    for n, raw in enumerate(sysf.get("lines", list, [])):
        f = _Fields(raw, f"system.lines[{n}]",
                    {"id", "from", "to", "susceptance", "capacity", "invest_cost", "existing"})
        lines.append(TransmissionElement(
            id=f.get("id", str), tail=f.get("from", str), head=f.get("to", str),
            susceptance=f.get("susceptance", float), capacity=f.get("capacity", float),
            invest_cost=f.get("invest_cost", float, 0.0), existing=f.get("existing", bool, False),
        ))
    system = PowerSystem(
        buses=tuple(buses), generators=tuple(gens), lines=tuple(lines),
        sigma=sysf.get("sigma", float, 1.0), theta_bound=sysf.get("theta_bound", float, math.pi),
    )

    pf = _Fields(top.get("policy", dict), "policy", {"k", "epsilon"})
    k = pf.get("k", int)
    eps_raw = pf.get("epsilon", list)
    eps = []
    for n, v in enumerate(eps_raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise CaseFormatError(f"policy.epsilon[{n}]: expected a number, got {v!r}")
        eps.append(float(v))
    if k >= 0 and len(eps) != k + 1:
        raise CaseFormatError(f"policy.epsilon: epsilon length {len(eps)} does not match k+1 = {k + 1}")
    policy = NkEpsilonPolicy(k, tuple(eps))

    options = SolveOptions()
    if top.has("solver"):
        sf = _Fields(top.get("solver", dict), "solver", {"gap", "time_limit_secs", "dual_bound"})
        gap = sf.get("gap", float, options.gap)
        if not 0.0 <= gap < 1.0:
            raise CaseFormatError("solver.gap: must lie in [0, 1)")
        limit = sf.get("time_limit_secs", float, None)
        if limit is not None and limit <= 0:
            raise CaseFormatError("solver.time_limit_secs: must be positive")
        U = sf.get("dual_bound", float, None)
        if U is not None and U <= 0:
            raise CaseFormatError("solver.dual_bound: must be positive")
        options = options.merged(gap=gap, time_limit_secs=limit, dual_bound=U)

    problems = validate_system(system, policy)
    if problems:
        raise ValidationError(problems)
    return Case(system, policy, options, name)


def read_case(path) -> Case:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseFormatError(f"{path}: {exc.strerror or exc}") from None
    try:
        return parse_case(text)
    except CaseFormatError as exc:
        raise CaseFormatError(f"{path}: {exc}") from None


def case_to_dict(case: Case) -> dict:
    sys, policy, opts = case.system, case.policy, case.options
    out = {
        "schema_version": SCHEMA_VERSION,
        "system": {
            "buses": [{"id": b.id, "demand": b.demand} for b in sys.buses],
            "generators": [
                {"id": g.id, "bus": g.bus, "capacity": g.capacity, "invest_cost": g.invest_cost,
                 "marginal_cost": g.marginal_cost, "existing": g.existing}
                for g in sys.generators
            ],
            "lines": [
                {"id": e.id, "from": e.tail, "to": e.head, "susceptance": e.susceptance,
                 "capacity": e.capacity, "invest_cost": e.invest_cost, "existing": e.existing}
                for e in sys.lines
            ],
            "sigma": sys.sigma,
            "theta_bound": sys.theta_bound,
        },
        "policy": {"k": policy.k, "epsilon": list(policy.epsilon)},
        "solver": {"gap": opts.gap, "time_limit_secs": opts.time_limit_secs, "dual_bound": opts.dual_bound},
    }
    if case.name:
        out["name"] = case.name
    return out


def write_case(case: Case, path=None) -> str:
    text = dumps(case_to_dict(case))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def plan_to_dict(plan: ExpansionPlan) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "plan",
        "build": {cid: int(bit) for cid, bit in sorted(plan.build.items())},
        "dispatch0": {
            "flows": dict(plan.dispatch0.flows),
            "outputs": dict(plan.dispatch0.outputs),
            "angles": dict(plan.dispatch0.angles),
        },
        "invest_cost": plan.invest_cost,
        "operating_cost": plan.operating_cost,
        "total_objective": plan.total_objective,
    }


def write_plan(plan: ExpansionPlan, path) -> None:
    Path(path).write_text(dumps(plan_to_dict(plan)), encoding="utf-8")


def parse_plan(text: str) -> ExpansionPlan:
    data = _load_json(text, "plan")
    top = _Fields(data, "", {"schema_version", "kind", "build", "dispatch0", "invest_cost",
                             "operating_cost", "total_objective"})
    if top.get("schema_version", str) != SCHEMA_VERSION:
        raise CaseFormatError("schema_version: unsupported plan version")
    if top.get("kind", str, "plan") != "plan":
        raise CaseFormatError("kind: expected 'plan'")
    build_raw = top.get("build", dict)
    if not isinstance(build_raw, dict):
        raise CaseFormatError("build: expected an object mapping ids to 0/1")
    build = {}
    for cid, bit in build_raw.items():
        if isinstance(bit, bool) or bit not in (0, 1):
            raise CaseFormatError(f"build.{cid}: expected 0 or 1, got {bit!r}")
        build[cid] = int(bit)
    dispatch = Dispatch()
    if top.has("dispatch0"):
        df = _Fields(top.get("dispatch0", dict), "dispatch0", {"flows", "outputs", "angles"})
        parts = {}
        for key in ("flows", "outputs", "angles"):
            raw = df.get(key, dict, {})
            if not isinstance(raw, dict):
                raise CaseFormatError(f"dispatch0.{key}: expected an object")
            parts[key] = {str(k): _Fields({"v": v}, f"dispatch0.{key}.{k}", {"v"}).get("v", float)
                          for k, v in raw.items()}
        dispatch = Dispatch(**parts)
    return ExpansionPlan(
        build=build,
        dispatch0=dispatch,
        invest_cost=top.get("invest_cost", float, 0.0),
        operating_cost=top.get("operating_cost", float, 0.0),
        total_objective=top.get("total_objective", float, 0.0),
    )


def read_plan(path) -> ExpansionPlan:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseFormatError(f"{path}: {exc.strerror or exc}") from None
    return parse_plan(text)


def report_to_dict(record, case_name: str = "") -> dict:
    out = {"schema_version": SCHEMA_VERSION, "kind": "report"}
    if case_name:
        out["case"] = case_name
    out.update(record.to_dict())
    return out


def write_report(record, path, case_name: str = "") -> None:
    Path(path).write_text(dumps(report_to_dict(record, case_name)), encoding="utf-8")


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")
