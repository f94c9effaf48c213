"""Independent reference computations for the tests.

Nothing here uses the package's formulations or solvers (``random_milp``
borrows ``ModelBuilder`` only to produce inputs). Loss of load is written
in its physical form (inactive elements removed, Kirchhoff's law as an
equality on active lines) and solved with ``scipy.optimize.linprog``;
MILPs are solved by enumerating every integer assignment.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def _active(sys, x, failed):
    ids = sorted([g.id for g in sys.generators] + [e.id for e in sys.lines])
    built = {cid for cid, bit in zip(ids, x) if bit > 0.5}
    gens = [g for g in sys.generators if g.id in built and g.id not in failed]
    lines = [e for e in sys.lines if e.id in built and e.id not in failed]
    return gens, lines


def _dc_lp(sys, x, failed, shed: bool):
    """Columns: f (active lines), p (active gens), q (buses, if shed), theta (buses)."""
    gens, lines = _active(sys, x, failed)
    buses = [b.id for b in sys.buses]
    bi = {b: i for i, b in enumerate(buses)}
    nb, nl, ng = len(buses), len(lines), len(gens)
    nq = nb if shed else 0
    n = nl + ng + nq + nb
    A_eq, b_eq = [], []
    for i, bus in enumerate(sys.buses):
        row = np.zeros(n)
        for k, e in enumerate(lines):
            if bi[e.head] == i:
                row[k] += 1.0
            if bi[e.tail] == i:
                row[k] -= 1.0
        for k, g in enumerate(gens):
            if bi[g.bus] == i:
                row[nl + k] = 1.0
        if shed:
            row[nl + ng + i] = 1.0
        A_eq.append(row)
        b_eq.append(bus.demand)
    for k, e in enumerate(lines):
        row = np.zeros(n)
        row[k] = 1.0
        row[nl + ng + nq + bi[e.tail]] -= e.susceptance
        row[nl + ng + nq + bi[e.head]] += e.susceptance
        A_eq.append(row)
        b_eq.append(0.0)
    bounds = ([(-e.capacity, e.capacity) for e in lines] + [(0.0, g.capacity) for g in gens]
              + [(0.0, b.demand) for b in sys.buses][:nq]
              + [(-sys.theta_bound, sys.theta_bound)] * nb)
    return gens, lines, np.array(A_eq), np.array(b_eq), bounds, n


def shed(sys, x, failed=()) -> float:
    """Minimum loss of load with components ``failed`` out of service."""
    gens, lines, A, b, bounds, n = _dc_lp(sys, x, set(failed), shed=True)
    c = np.zeros(n)
    c[len(lines) + len(gens): len(lines) + len(gens) + len(sys.buses)] = 1.0
    res = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def dispatch_cost(sys, x) -> float | None:
    """Cheapest no-contingency dispatch serving all demand, or None."""
    gens, lines, A, b, bounds, n = _dc_lp(sys, x, set(), shed=False)
    c = np.zeros(n)
    for k, g in enumerate(gens):
        c[len(lines) + k] = g.marginal_cost
    res = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs")
    return float(res.fun) if res.status == 0 else None


def component_ids(sys):
    return sorted([g.id for g in sys.generators] + [e.id for e in sys.lines])


def worst(sys, x, j) -> tuple[float, tuple[str, ...]]:
    """Largest shed over all size-j failure sets; first such set in sorted order."""
    best, arg = -1.0, ()
    for failed in itertools.combinations(component_ids(sys), j):
        z = shed(sys, x, failed)
        if z > best + 1e-9:
            best, arg = z, failed
    return best, arg


def best_plan(sys, policy) -> tuple[float, tuple[int, ...]] | None:
    """Cheapest compliant design by enumerating every candidate subset."""
    ids = component_ids(sys)
    existing = {g.id for g in sys.generators if g.existing} | {e.id for e in sys.lines if e.existing}
    cost = {g.id: g.invest_cost for g in sys.generators} | {e.id: e.invest_cost for e in sys.lines}
    cands = [cid for cid in ids if cid not in existing]
    D = sum(b.demand for b in sys.buses)
    best = None
    for bits in itertools.product((0, 1), repeat=len(cands)):
        chosen = existing | {c for c, bit in zip(cands, bits) if bit}
        x = tuple(1 if cid in chosen else 0 for cid in ids)
        op = dispatch_cost(sys, x)
        if op is None:
            continue
        total = sum(cost[c] for c in chosen) + sys.sigma * op
        if best is not None and total >= best[0]:
            continue
        ok = all(
            worst(sys, x, j)[0] <= policy.epsilon[j] * D + 1e-6 * D
            for j in range(1, policy.k + 1)
        )
        if ok:
            best = (total, x)
    return best


def enumerate_milp(lp) -> float | None:
    """Optimal objective of a LinearProgram by trying every integer assignment.

    Integer variables must have finite bounds; continuous ones are handled
    by ``linprog`` for each assignment.
    """
    A = lp.A.toarray()
    ints = np.flatnonzero(lp.integer)
    conts = np.flatnonzero(~lp.integer)
    sign = -1.0 if lp.maximize else 1.0
    ranges = [range(int(np.ceil(lp.lb[i])), int(np.floor(lp.ub[i])) + 1) for i in ints]
    if len(conts) == 0:
        return _enumerate_pure(lp, A, ranges)
    best = None
    for values in itertools.product(*ranges):
        vals = np.array(values, dtype=float)
        fixed = lp.rhs - (A[:, ints] @ vals if len(ints) else 0.0)
        Ac = A[:, conts]
        obj_fixed = float(lp.c[ints] @ vals) if len(ints) else 0.0
        le, ge, eq = lp.senses == "<", lp.senses == ">", lp.senses == "="
        A_ub = np.vstack([Ac[le], -Ac[ge]])
        b_ub = np.concatenate([fixed[le], -fixed[ge]])
        res = linprog(
            sign * lp.c[conts],
            A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
            A_eq=Ac[eq] if eq.any() else None, b_eq=fixed[eq] if eq.any() else None,
            bounds=list(zip(lp.lb[conts], lp.ub[conts])), method="highs",
        )
        if res.status != 0:
            continue
        val = obj_fixed + sign * float(res.fun)
        val += lp.obj_constant
        if best is None or (val > best if lp.maximize else val < best):
            best = val
    return best


def _enumerate_pure(lp, A, ranges):
    grid = np.array(list(itertools.product(*ranges)), dtype=float)
    lhs = grid @ A.T
    ok = np.ones(len(grid), dtype=bool)
    for r, (sense, rhs) in enumerate(zip(lp.senses, lp.rhs)):
        if sense == "<":
            ok &= lhs[:, r] <= rhs + 1e-9
        elif sense == ">":
            ok &= lhs[:, r] >= rhs - 1e-9
        else:
            ok &= np.abs(lhs[:, r] - rhs) <= 1e-9
    if not ok.any():
        return None
    vals = grid[ok] @ lp.c + lp.obj_constant
    return float(vals.max() if lp.maximize else vals.min())


def random_milp(rng, n_int=None, n_cont=None, general=False):
    """A small random MILP with finite bounds; may be infeasible."""
    from nkeps.milp import ModelBuilder

    n_int = int(rng.integers(1, 13)) if n_int is None else n_int
    n_cont = int(rng.integers(0, 3)) if n_cont is None else n_cont
    b = ModelBuilder(maximize=bool(rng.integers(0, 2)))
    cols = []
    for i in range(n_int):
        ub = float(rng.integers(1, 4)) if general else 1.0
        cols.append(b.add_var(f"y{i}", 0.0, ub, float(rng.integers(-9, 10)), integer=True))
    for i in range(n_cont):
        cols.append(b.add_var(f"w{i}", 0.0, float(rng.integers(1, 10)), float(rng.normal() * 5)))
    for r in range(int(rng.integers(1, 5))):
        coefs = {c: float(rng.integers(-4, 8)) for c in cols if rng.random() < 0.7}
        sense = rng.choice(["<", "<", "<", ">", "="])
        rhs = float(rng.integers(0, 15)) if sense != "=" else float(rng.integers(0, 4))
        b.add_row(f"r{r}", coefs, str(sense), rhs)
    return b.build()
