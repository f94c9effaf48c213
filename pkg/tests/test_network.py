import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nkeps.extensive import count_states
from nkeps.network import (
    Bus,
    Contingency,
    Generator,
    NkEpsilonPolicy,
    PowerSystem,
    TransmissionElement,
    build_all,
    build_existing,
    check_plan,
    effective_capacity,
    plan_from_vector,
    total_demand,
    validate_policy,
    validate_system,
)


def test_component_order_is_sorted_across_kinds(twobus):
    assert twobus.component_ids == ("genA", "genB", "line")
    assert twobus.N == 3
    assert list(twobus.gen_pos) == [0, 1]
    assert list(twobus.line_pos) == [2]


def test_big_m_per_element(twobus):
    e = twobus.lines[0]
    assert twobus.big_m[0] == pytest.approx(2 * e.susceptance * math.pi + e.capacity)


def test_total_demand(twobus):
    assert total_demand(twobus) == 100.0


def test_state_counts():
    assert count_states(152, 1) == 152
    assert count_states(5, 2) == 15
    assert count_states(152, 2) == 152 + math.comb(152, 2)


@pytest.mark.parametrize(
    "eps, message",
    [
        ((0.0, 0.05, 0.02), "epsilon not nondecreasing at j=2"),
        ((0.0, 0.05, 0.05), "epsilon_1 must be 0"),
        ((0.1, 0.1, 0.1), "epsilon_0 must be 0"),
        ((0.0, 0.0, 1.0), "outside [0, 1)"),
        ((0.0, 0.0), "epsilon length"),
    ],
)
def test_policy_violations(eps, message):
    report = validate_policy(NkEpsilonPolicy(2, eps), 10)
    assert any(message in r for r in report), report


def test_k_cannot_exceed_n(twobus):
    assert any("exceeds N" in r for r in validate_system(twobus, NkEpsilonPolicy.strict(4)))


def test_valid_policy_passes():
    assert validate_policy(NkEpsilonPolicy(4, (0, 0, 0.05, 0.1, 0.2)), 10) == []


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda s: PowerSystem(s.buses + (Bus("A", 1.0),), s.generators, s.lines), "duplicate bus id 'A'"),
        (lambda s: PowerSystem(s.buses, s.generators + (Generator("line", "A", 5.0),), s.lines),
         "duplicate component id 'line'"),
        (lambda s: PowerSystem(s.buses, (Generator("g", "Z", 5.0),), s.lines), "unknown bus 'Z'"),
        (lambda s: PowerSystem(s.buses, s.generators, (TransmissionElement("l", "A", "A", 1.0, 1.0),)),
         "tail equals head"),
        (lambda s: PowerSystem(s.buses, s.generators, (TransmissionElement("l", "A", "B", -1.0, 1.0),)),
         "susceptance must be > 0"),
        (lambda s: PowerSystem((Bus("A"), Bus("B")), s.generators, s.lines), "total demand must be > 0"),
        (lambda s: PowerSystem(s.buses, s.generators, s.lines, theta_bound=0.0), "theta_bound"),
    ],
)
def test_system_violations(twobus, mutate, message):
    report = validate_system(mutate(twobus))
    assert any(message in r for r in report), report


def test_plan_checks(twobus_cand):
    assert check_plan(twobus_cand, build_existing(twobus_cand)) == []
    bad = plan_from_vector(twobus_cand, np.zeros(twobus_cand.N))
    assert any("must be built" in r for r in check_plan(twobus_cand, bad))


def test_effective_capacity(twobus):
    caps = effective_capacity(twobus, build_all(twobus), Contingency({"genB"}))
    assert caps == {"genA": 50.0, "genB": 0.0, "line": 80.0}
    with pytest.raises(KeyError):
        effective_capacity(twobus, build_all(twobus), Contingency({"nope"}))


def test_unbuilt_candidate_has_no_capacity(twobus_cand):
    caps = effective_capacity(twobus_cand, build_existing(twobus_cand), Contingency())
    assert caps["candA"] == 0.0 and caps["line2"] == 0.0


def test_existing_cost_is_zero():
    g = Generator("g", "A", 10.0, invest_cost=99.0, existing=True)
    assert g.effective_invest_cost == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.booleans(), min_size=5, max_size=5))
def test_contingency_vector_round_trip(twobus_cand_bits):
    from nkeps.synth import two_bus

    sys = two_bus(candidates=True)
    d = np.array(twobus_cand_bits, dtype=float)
    cont = Contingency.from_vector(sys, d)
    assert cont.size == int(d.sum())
    assert np.array_equal(cont.to_vector(sys), d)


def test_contingency_str_is_sorted():
    assert str(Contingency({"b", "a"})) == "{a, b}"
