"""Regenerate the shipped cases under src/nkeps/data/cases.

Small cases come from seeded random systems, kept only when the extensive
form finds them feasible with a nontrivial build.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from nkeps.case_io import Case, write_case
from nkeps.extensive import solve_ef
from nkeps.network import NkEpsilonPolicy
from nkeps.options import SolveOptions
from nkeps.verify import check_plan_compliance
from nkeps.synth import graded_policy, ieee30_augmented, random_system, two_bus

OUT = Path(__file__).resolve().parents[1] / "src" / "nkeps" / "data" / "cases"

# (name, k, epsilon, bus range, max components)
SMALL = [
    ("small01", 1, (0.0, 0.0), (2, 4), 8),
    ("small02", 1, (0.0, 0.0), (3, 5), 10),
    ("small03", 1, (0.0, 0.0), (3, 6), 12),
    ("small04", 2, (0.0, 0.0, 0.1), (3, 5), 12),
    ("small05", 2, (0.0, 0.0, 0.2), (3, 6), 14),
    ("small06", 2, (0.0, 0.0, 0.25), (4, 7), 16),
    ("small07", 1, (0.0, 0.0), (5, 8), 18),
    ("small08", 2, (0.0, 0.0, 0.3), (4, 8), 18),
    ("small09", 2, (0.0, 0.0, 0.2), (5, 8), 20),
    ("small10", 1, (0.0, 0.0), (6, 9), 20),
]


def find_small(seed_base: int, k, eps, bus_range, max_components, shed_at=()):
    """First seed whose EF optimum builds something and sheds load at every j in ``shed_at``."""
    policy = NkEpsilonPolicy(k, eps)
    for seed in range(seed_base, seed_base + 3000):
        rng = np.random.default_rng(seed)
        sys = random_system(rng, n_buses=int(rng.integers(*bus_range)), max_components=max_components)
        plan, record = solve_ef(sys, policy)
        if plan is None or len(plan.built_ids()) == len(sys.existing_ids()):
            continue
        if shed_at:
            report = check_plan_compliance(sys, policy, plan)
            if any(report.checks[j].worst_shed <= 1e-6 for j in shed_at):
                continue
        return sys, policy, seed
    raise RuntimeError("no feasible seed found")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_case(Case(two_bus(candidates=True), NkEpsilonPolicy(1, (0.0, 0.0)), SolveOptions(), "twobus_candidate"),
               OUT / "twobus_candidate.json")
    for n, (name, k, eps, bus_range, comps) in enumerate(SMALL):
        sys, policy, seed = find_small(1000 * (n + 1), k, eps, bus_range, comps)
        write_case(Case(sys, policy, SolveOptions(), f"{name} (seed {seed})"), OUT / f"{name}.json")
        print(name, "seed", seed, "N", sys.N, "k", k)
    sys, policy, seed = find_small(50_000, 4, (0.0, 0.0, 0.05, 0.10, 0.20), (3, 6), 12, shed_at=(4,))
    write_case(Case(sys, policy, SolveOptions(), f"eps_k4 (seed {seed})"), OUT / "eps_k4.json")
    print("eps_k4 seed", seed, "N", sys.N)
    for k in (1, 2):
        write_case(Case(ieee30_augmented(), graded_policy(k), SolveOptions(), f"ieee30 augmented, k={k}"),
                   OUT / f"ieee30_k{k}.json")


if __name__ == "__main__":
    main()
