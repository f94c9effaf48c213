import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nkeps import cases
from nkeps.case_io import (
    Case,
    case_to_dict,
    dumps,
    parse_case,
    parse_plan,
    plan_to_dict,
    read_case,
    write_case,
    write_plan,
)
from nkeps.errors import CaseFormatError, ValidationError
from nkeps.network import NkEpsilonPolicy, build_all
from nkeps.options import SolveOptions
from nkeps.synth import random_system, two_bus

MINIMAL = {
    "schema_version": "1.0",
    "system": {
        "buses": [{"id": "A", "demand": 100}, {"id": "B", "demand": 0}],
        "generators": [
            {"id": "genA", "bus": "A", "capacity": 50, "existing": True},
            {"id": "genB", "bus": "B", "capacity": 150, "existing": True},
        ],
        "lines": [{"id": "line", "from": "B", "to": "A", "susceptance": 1000, "capacity": 80,
                   "existing": True}],
    },
    "policy": {"k": 1, "epsilon": [0, 0]},
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    for path, value in changes.items():
        node = d
        keys = path.split(".")
        for k in keys[:-1]:
            node = node[int(k)] if k.isdigit() else node[k]
        if value is None:
            del node[keys[-1]]
        else:
            node[keys[-1]] = value
    return json.dumps(d)


def test_minimal_case_defaults():
    case = parse_case(doc())
    assert case.system.N == 3
    assert case.system.theta_bound == pytest.approx(np.pi)
    assert case.system.sigma == 1.0
    assert case.options.gap == 0.001
    assert case.options.dual_bound is None
    assert case.policy == NkEpsilonPolicy(1, (0.0, 0.0))


def test_solver_block_is_applied():
    case = parse_case(doc(**{"solver": {"gap": 0.01, "time_limit_secs": 5, "dual_bound": 500}}))
    assert (case.options.gap, case.options.time_limit_secs, case.options.dual_bound) == (0.01, 5.0, 500.0)


def test_syntax_error_reports_position():
    with pytest.raises(CaseFormatError, match=r"line 1, column \d+"):
        parse_case('{"schema_version": "1.0",,}')


def test_duplicate_bus_names_the_id():
    text = doc(**{"system.buses": [{"id": "A", "demand": 1}, {"id": "A", "demand": 2}]})
    with pytest.raises(CaseFormatError, match="duplicate bus id 'A'"):
        parse_case(text)


def test_short_epsilon():
    with pytest.raises(CaseFormatError, match="epsilon length"):
        parse_case(doc(**{"policy.epsilon": [0]}))


def test_version_mismatch():
    with pytest.raises(CaseFormatError, match="schema_version"):
        parse_case(doc(schema_version="2.0"))


def test_unknown_field_has_path():
    with pytest.raises(CaseFormatError, match=r"system\.lines\[0\]"):
        parse_case(doc(**{"system.lines.0.colour": "red"}))


def test_wrong_type_has_path():
    with pytest.raises(CaseFormatError, match=r"system\.buses\[1\]\.demand"):
        parse_case(doc(**{"system.buses.1.demand": "lots"}))


def test_semantic_error_from_validation():
    with pytest.raises(ValidationError, match="unknown bus 'Q'"):
        parse_case(doc(**{"system.generators.0.bus": "Q"}))


def test_nonmonotone_epsilon_is_rejected():
    text = doc(**{"policy": {"k": 2, "epsilon": [0, 0.05, 0.02]}})
    with pytest.raises(ValidationError, match="epsilon not nondecreasing at j=2"):
        parse_case(text)


def test_bad_solver_values():
    with pytest.raises(CaseFormatError, match="solver.gap"):
        parse_case(doc(**{"solver": {"gap": 1.5}}))
    with pytest.raises(CaseFormatError, match="solver.dual_bound"):
        parse_case(doc(**{"solver": {"dual_bound": 0}}))


def test_missing_file(tmp_path):
    with pytest.raises(CaseFormatError):
        read_case(tmp_path / "absent.json")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2))
def test_case_round_trip(seed, k):
    sys = random_system(np.random.default_rng(seed))
    k = min(k, sys.N)
    case = Case(sys, NkEpsilonPolicy(k, (0.0,) * min(k + 1, 2) + (0.1,) * max(0, k - 1)),
                SolveOptions(gap=0.01), "rt")
    text = write_case(case)
    again = parse_case(text)
    assert again.system == sys
    assert again.policy == case.policy
    assert again.options.gap == 0.01
    assert write_case(again) == text


def test_dumps_is_canonical():
    assert dumps({"b": 1.0, "a": -0.0}) == dumps({"a": 0.0, "b": 1.0})
    assert json.loads(dumps({"a": np.pi}))["a"] == np.pi
    with pytest.raises(ValueError):
        dumps({"a": float("nan")})


def test_plan_round_trip(tmp_path, twobus):
    plan = build_all(twobus)
    write_plan(plan, tmp_path / "p.json")
    back = parse_plan((tmp_path / "p.json").read_text())
    assert back.build == plan.build
    assert plan_to_dict(back) == plan_to_dict(plan)


def test_plan_rejects_fractional_bits():
    with pytest.raises(CaseFormatError, match="build.x"):
        parse_plan(json.dumps({"schema_version": "1.0", "build": {"x": 0.5}}))


def test_every_shipped_case_loads():
    names = cases.names()
    assert len([n for n in names if n.startswith("small")]) >= 10
    for name in names:
        case = cases.load(name)
        assert case.system.N >= 1
        assert case_to_dict(case)["schema_version"] == "1.0"


def test_unknown_shipped_case():
    with pytest.raises(KeyError, match="no shipped case"):
        cases.path("nope")


def test_twobus_candidate_case_matches_builder():
    assert cases.load("twobus_candidate").system == two_bus(candidates=True)
