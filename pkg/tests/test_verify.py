import numpy as np
import pytest

import oracles
from nkeps.errors import SizeGuardError
from nkeps.network import Contingency, NkEpsilonPolicy, build_all, plan_from_vector, total_demand
from nkeps.synth import random_plan, random_system
from nkeps.verify import brute_force_worst, check_plan_compliance, modes_agree, shed_table


def test_j0_is_empty_contingency(twobus):
    assert brute_force_worst(twobus, np.ones(3), 0) == (0.0, Contingency())


def test_twobus_j1_tie_breaks_lexicographically(twobus):
    value, cont = brute_force_worst(twobus, np.ones(3), 1)
    assert value == pytest.approx(50.0)
    # genB and line both shed 50; genB sorts first
    assert cont == Contingency({"genB"})
    assert oracles.worst(twobus, np.ones(3), 1) == (pytest.approx(50.0), ("genB",))


def test_nothing_built_returns_demand_and_first_element(twobus_cand):
    value, cont = brute_force_worst(twobus_cand, np.zeros(twobus_cand.N), 1)
    assert value == pytest.approx(100.0)
    assert cont == Contingency({twobus_cand.component_ids[0]})


def test_limit(twobus):
    with pytest.raises(SizeGuardError, match="exceeds the limit"):
        brute_force_worst(twobus, np.ones(3), 1, limit=2)


def test_budget_out_of_range(twobus):
    with pytest.raises(ValueError):
        brute_force_worst(twobus, np.ones(3), 4)


def test_all_built_twobus_fails_n1(twobus, strict1):
    report = check_plan_compliance(twobus, strict1, build_all(twobus))
    assert not report.passed
    bad = report.first_failure()
    assert bad.j == 1 and bad.worst_shed == pytest.approx(50.0)


def test_k0_checks_only_the_empty_state(twobus):
    report = check_plan_compliance(twobus, NkEpsilonPolicy(0, (0.0,)), build_all(twobus))
    assert [c.j for c in report.checks] == [0]
    assert report.passed


def test_report_dict(twobus, strict1):
    d = check_plan_compliance(twobus, strict1, build_all(twobus)).to_dict()
    assert d["passed"] is False and d["budgets"][1]["contingency"] == ["genB"]


@pytest.mark.parametrize("seed", range(8))
def test_modes_agree_on_random_systems(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, max_components=9)
    plan = plan_from_vector(sys, random_plan(rng, sys))
    policy = NkEpsilonPolicy(2, (0.0, 0.0, 0.2))
    ok, a, b = modes_agree(sys, policy, plan)
    assert ok, (a.to_dict(), b.to_dict())


def test_worst_is_nondecreasing_in_j(rng):
    sys = random_system(rng, max_components=8)
    x = random_plan(rng, sys)
    values = [brute_force_worst(sys, x, j)[0] for j in range(sys.N + 1)]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(total_demand(sys))


def test_shed_table_covers_all_states(twobus):
    table = shed_table(twobus, np.ones(3), 2)
    assert len(table) == 1 + 3 + 3
    assert table[(0, 1)] == pytest.approx(100.0)
