import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nkeps.dcopf import LossOfLoadSolver
from nkeps.errors import AuditError
from nkeps.milp import solve_milp
from nkeps.network import Contingency, build_all, total_demand
from nkeps.options import SolveOptions
from nkeps.oracle import (
    bilinear_residual,
    build_mpsip,
    default_dual_bound,
    failure_vector,
    worst_case_contingency,
)
from nkeps.synth import random_plan, random_system


@pytest.mark.parametrize("j, expected", [(1, 50.0), (2, 100.0), (3, 100.0)])
def test_twobus_worst(twobus, j, expected):
    res = worst_case_contingency(twobus, build_all(twobus), j)
    assert res.worst_shed == pytest.approx(expected, abs=1e-6)
    assert res.contingency.size == j
    assert res.certified


def test_nothing_built_sheds_demand(twobus_cand):
    res = worst_case_contingency(twobus_cand, np.zeros(twobus_cand.N), 1)
    assert res.worst_shed == pytest.approx(100.0)
    assert res.contingency.size == 1


def test_compliant_plan_has_zero_worst_shed(twobus_cand):
    x = np.ones(twobus_cand.N)
    res = worst_case_contingency(twobus_cand, x, 1)
    assert res.worst_shed == pytest.approx(0.0, abs=1e-6)


def test_budget_must_be_positive(twobus):
    with pytest.raises(ValueError):
        build_mpsip(twobus, np.ones(3), 0)


def test_budget_row_and_failure_bits(twobus_cand):
    x = twobus_cand.existing_mask().astype(float)
    lp, cols = build_mpsip(twobus_cand, x, 2)
    # failure bits exist only for built components
    assert [twobus_cand.component_ids[p] for p in cols.d_pos] == ["genA", "genB", "line"]
    assert lp.row_names[0] == "budget" and lp.rhs[0] == 2.0


def test_budget_spans_sets_padded_by_unbuilt(twobus_cand):
    # 3 built, 2 unbuilt: a size-3 set fails between 1 and 3 built components
    x = twobus_cand.existing_mask().astype(float)
    lp, cols = build_mpsip(twobus_cand, x, 3)
    rows = dict(zip(lp.row_names, zip(lp.senses, lp.rhs)))
    assert rows["budget"] == ("<", 3.0) and rows["budget_min"] == (">", 1.0)
    lp, _ = build_mpsip(twobus_cand, np.ones(twobus_cand.N), 2)
    assert "budget_min" not in lp.row_names and lp.senses[0] == "="


def test_padding_uses_unbuilt_components_only(twobus_cand):
    x = twobus_cand.existing_mask().astype(float)
    _, cols = build_mpsip(twobus_cand, x, 3)
    bits = np.zeros(len(cols.d_pos))
    bits[list(cols.d_pos).index(twobus_cand.component_index["line"])] = 1.0
    d = failure_vector(twobus_cand, cols, bits, 3)
    assert Contingency.from_vector(twobus_cand, d).sorted_ids() == ("candA", "line", "line2")


def test_linearization_is_exact_at_the_solution(twobus):
    lp, cols = build_mpsip(twobus, np.ones(3), 1)
    sol = solve_milp(lp, gap=0.0)
    assert bilinear_residual(twobus, cols, sol.x) <= 1e-6


def test_default_dual_bound(twobus):
    assert default_dual_bound(twobus) == pytest.approx(float(twobus.big_m.max()))


def test_small_dual_bound_is_caught(twobus):
    with pytest.raises(AuditError, match="dual bound U too small"):
        worst_case_contingency(twobus, np.ones(3), 1, SolveOptions(dual_bound=0.01))


def test_psp_duals_are_feasible_for_the_interdiction_model(twobus_cand):
    """Plugging the subproblem's dual (with r = u d) into the MILP reproduces its value."""
    sys = twobus_cand
    x = sys.existing_mask().astype(float)
    cont = Contingency({"genB"})
    d = cont.to_vector(sys)
    z, dual = LossOfLoadSolver(sys).solve(x, d)
    lp, cols = build_mpsip(sys, x, 1)
    v = np.zeros(lp.n_vars)
    v[cols.d] = d[cols.d_pos]
    for name in ("alpha", "beta_hat", "beta_check", "delta", "eta", "zeta", "lam", "mu_plus", "mu_minus"):
        v[getattr(cols, name)] = getattr(dual, name)
    bits = v[cols.d]
    v[cols.r1] = dual.beta_hat[cols.line_at] * bits[cols.line_bit]
    v[cols.r2] = dual.beta_check[cols.line_at] * bits[cols.line_bit]
    v[cols.r3] = dual.delta[cols.line_at] * bits[cols.line_bit]
    v[cols.r4] = dual.eta[cols.line_at] * bits[cols.line_bit]
    v[cols.r5] = dual.zeta[cols.gen_at] * bits[cols.gen_bit]
    lhs = lp.A @ v
    tol = 1e-6
    for sense, l, r in zip(lp.senses, lhs, lp.rhs):
        assert {"<": l <= r + tol, ">": l >= r - tol, "=": abs(l - r) <= tol}[sense]
    assert float(lp.c @ v) == pytest.approx(z, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_oracle_matches_brute_force(seed, j):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, max_components=9)
    j = min(j, sys.N)
    x = random_plan(rng, sys)
    res = worst_case_contingency(sys, x, j)
    expected, _ = oracles.worst(sys, x, j)
    assert res.worst_shed == pytest.approx(expected, abs=1e-6 * (1 + total_demand(sys)))


def test_bundled_engine_oracle(twobus):
    res = worst_case_contingency(twobus, np.ones(3), 1, SolveOptions(engine="bundled"))
    assert res.worst_shed == pytest.approx(50.0, abs=1e-6)
