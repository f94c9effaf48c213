import math

import numpy as np
import pytest

import oracles
from nkeps import cases
from nkeps.errors import SizeGuardError
from nkeps.extensive import ContingencyUniverse, build_ef, count_states, enumerate_contingencies, solve_ef
from nkeps.network import NkEpsilonPolicy
from nkeps.options import SolveOptions
from nkeps.synth import random_system


def test_universe_order_and_size(twobus):
    u = ContingencyUniverse(twobus, 2)
    assert u.m == 6 == count_states(3, 2)
    assert [c.sorted_ids() for c in u] == [
        ("genA",), ("genB",), ("line",), ("genA", "genB"), ("genA", "line"), ("genB", "line"),
    ]


def test_size_guard(twobus):
    with pytest.raises(SizeGuardError, match="size guard"):
        enumerate_contingencies(twobus, 2, limit=5)
    assert enumerate_contingencies(twobus, 2, limit=6).m == 6


def test_size_guard_on_large_case():
    case = cases.load("ieee30_k2")
    with pytest.raises(SizeGuardError):
        build_ef(case.system, case.policy, limit=10_000)
    assert count_states(case.system.N, 4) > 1_000_000
    with pytest.raises(SizeGuardError):
        build_ef(case.system, NkEpsilonPolicy(4, (0, 0, 0.05, 0.1, 0.2)))


def test_twobus_candidate_builds_the_generator(twobus_cand, strict1):
    plan, record = solve_ef(twobus_cand, strict1)
    assert record.status == "optimal"
    assert plan.built_ids() == ["candA", "genA", "genB", "line"]
    # invest 100; dispatch genB 80 at 10 and candA 20 at 20
    assert plan.total_objective == pytest.approx(100 + 800 + 400)


def test_k0_is_plain_expansion(twobus_cand):
    policy = NkEpsilonPolicy(0, (0.0,))
    plan, record = solve_ef(twobus_cand, policy)
    assert record.m == 0
    # candA pays for itself by displacing genA's dearer energy
    assert plan.total_objective == pytest.approx(oracles.best_plan(twobus_cand, policy)[0])
    assert plan.total_objective == pytest.approx(1300.0)


@pytest.mark.parametrize("seed", range(6))
def test_ef_matches_brute_force_planning(seed):
    rng = np.random.default_rng(100 + seed)
    sys = random_system(rng, max_components=8)
    policy = NkEpsilonPolicy(2, (0.0, 0.0, 0.3)) if sys.N >= 2 else NkEpsilonPolicy(1, (0.0, 0.0))
    plan, record = solve_ef(sys, policy, SolveOptions(gap=1e-9))
    expected = oracles.best_plan(sys, policy)
    if expected is None:
        assert plan is None and record.status == "infeasible"
    else:
        assert plan.total_objective == pytest.approx(expected[0], rel=1e-6)


def test_ef_record_has_phase_times(twobus_cand, strict1):
    _, record = solve_ef(twobus_cand, strict1)
    assert set(record.timers) == {"build", "milp"}
    assert record.m == twobus_cand.N
    assert math.isclose(record.objective, 1300.0)
