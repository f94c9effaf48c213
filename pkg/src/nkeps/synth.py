"""Test systems: hand-built toys, random small systems, and an augmented 30-bus case."""

from __future__ import annotations

import math

import numpy as np

from nkeps.network import Bus, Generator, NkEpsilonPolicy, PowerSystem, TransmissionElement


def two_bus(candidates: bool = False) -> PowerSystem:
    """Demand 100 at A; 150 MW at B and 50 MW at A; one 80 MW line B->A.

    With ``candidates`` it also offers a 60 MW generator at A (cost 100)
    and a second 40 MW line (cost 50).
    """
    gens = [
        Generator("genA", "A", 50.0, marginal_cost=30.0, existing=True),
        Generator("genB", "B", 150.0, marginal_cost=10.0, existing=True),
    ]
    lines = [TransmissionElement("line", "B", "A", 1000.0, 80.0, existing=True)]
    if candidates:
        gens.append(Generator("candA", "A", 60.0, invest_cost=100.0, marginal_cost=20.0))
        lines.append(TransmissionElement("line2", "B", "A", 1000.0, 40.0, invest_cost=50.0))
    return PowerSystem(
        buses=(Bus("A", 100.0), Bus("B", 0.0)),
        generators=tuple(gens),
        lines=tuple(lines),
        sigma=1.0,
    )


def random_system(
    rng: np.random.Generator,
    n_buses: int | None = None,
    max_components: int = 12,
    candidate_share: float = 0.5,
) -> PowerSystem:
    """A small connected system with a mix of existing and candidate components.

    Existing elements form a spanning tree plus generation at one or two
    buses; candidates are extra lines (parallel or new corridors) and
    generators. ``N`` never exceeds ``max_components``.
    """
    n_buses = n_buses or int(rng.integers(2, 6))
    n_buses = max(2, n_buses)
    buses = []
    for i in range(n_buses):
        demand = float(rng.choice([0.0, rng.uniform(10, 80)], p=[0.25, 0.75]))
        buses.append(Bus(f"b{i}", round(demand, 1)))
    if sum(b.demand for b in buses) <= 0:
        buses[-1] = Bus(buses[-1].id, 40.0)
    D = sum(b.demand for b in buses)

    lines, gens = [], []
    for i in range(1, n_buses):
        j = int(rng.integers(0, i))
        lines.append(_line(rng, f"e{len(lines)}", f"b{j}", f"b{i}", existing=True, D=D))
    n_existing_gens = int(rng.integers(1, 3))
    for n in range(n_existing_gens):
        bus = f"b{int(rng.integers(0, n_buses))}"
        cap = float(round(rng.uniform(0.6, 1.2) * D / n_existing_gens + 10, 1))
        gens.append(Generator(f"g{len(gens)}", bus, cap, marginal_cost=float(round(rng.uniform(5, 40), 1)),
                              existing=True))

    budget = max_components - len(lines) - len(gens)
    n_candidates = max(1, min(budget, int(round(candidate_share * max_components))))
    for _ in range(n_candidates):
        if rng.random() < 0.5:
            a, b = rng.choice(n_buses, size=2, replace=False)
            lines.append(_line(rng, f"e{len(lines)}", f"b{int(a)}", f"b{int(b)}", existing=False, D=D))
        else:
            bus = f"b{int(rng.integers(0, n_buses))}"
            cap = float(round(rng.uniform(0.3, 0.9) * D + 5, 1))
            gens.append(Generator(
                f"g{len(gens)}", bus, cap, invest_cost=float(round(rng.uniform(50, 300), 1)),
                marginal_cost=float(round(rng.uniform(5, 40), 1)),
            ))
    return PowerSystem(tuple(buses), tuple(gens), tuple(lines), sigma=float(round(rng.uniform(0.5, 2.0), 2)))


def _line(rng, lid, a, b, existing, D):
    x_pu = float(rng.uniform(0.05, 0.4))
    cap = float(round(rng.uniform(0.4, 1.1) * D + 5, 1))
    cost = 0.0 if existing else float(round(rng.uniform(20, 200), 1))
    return TransmissionElement(lid, a, b, round(100.0 / x_pu, 3), cap, invest_cost=cost, existing=existing)


def random_plan(rng: np.random.Generator, sys: PowerSystem) -> np.ndarray:
    """A random build vector with every existing component built."""
    x = (rng.random(sys.N) < 0.5).astype(float)
    x[sys.existing_mask()] = 1.0
    return x


# Branch list of the IEEE 30-bus test system: (from, to, reactance pu, rating MW).
IEEE30_BRANCHES = [
    (1, 2, 0.0575, 130), (1, 3, 0.1652, 130), (2, 4, 0.1737, 65), (3, 4, 0.0379, 130),
    (2, 5, 0.1983, 130), (2, 6, 0.1763, 65), (4, 6, 0.0414, 90), (5, 7, 0.1160, 70),
    (6, 7, 0.0820, 130), (6, 8, 0.0420, 32), (6, 9, 0.2080, 65), (6, 10, 0.5560, 32),
    (9, 11, 0.2080, 65), (9, 10, 0.1100, 65), (4, 12, 0.2560, 65), (12, 13, 0.1400, 65),
    (12, 14, 0.2559, 32), (12, 15, 0.1304, 32), (12, 16, 0.1987, 32), (14, 15, 0.1997, 16),
    (16, 17, 0.1923, 16), (15, 18, 0.2185, 16), (18, 19, 0.1292, 16), (19, 20, 0.0680, 32),
    (10, 20, 0.2090, 32), (10, 17, 0.0845, 32), (10, 21, 0.0749, 32), (10, 22, 0.1499, 32),
    (21, 22, 0.0236, 32), (15, 23, 0.2020, 16), (22, 24, 0.1790, 16), (23, 24, 0.2700, 16),
    (24, 25, 0.3292, 16), (25, 26, 0.3800, 16), (25, 27, 0.2087, 16), (28, 27, 0.3960, 65),
    (27, 29, 0.4153, 16), (27, 30, 0.6027, 16), (29, 30, 0.4533, 16), (8, 28, 0.2000, 32),
    (6, 28, 0.0599, 32),
]

IEEE30_LOADS = {
    2: 21.7, 3: 2.4, 4: 7.6, 5: 94.2, 7: 22.8, 8: 30.0, 10: 5.8, 12: 11.2, 14: 6.2, 15: 8.2,
    16: 3.5, 17: 9.0, 18: 3.2, 19: 9.5, 20: 2.2, 21: 17.5, 23: 3.2, 24: 8.7, 26: 3.5, 29: 2.4,
    30: 10.6,
}

# (bus, capacity MW, marginal cost $/MWh)
IEEE30_GENERATORS = [(1, 80.0, 2.0), (2, 80.0, 1.75), (22, 50.0, 1.0), (27, 55.0, 3.25),
                     (23, 30.0, 3.0), (13, 40.0, 3.0)]

# load buses offered a brand-new candidate unit, largest loads first
IEEE30_NEW_UNIT_BUSES = [5, 8, 7, 2, 21, 30, 19, 17, 24, 12, 15]


def ieee30_augmented(base_mva: float = 100.0) -> PowerSystem:
    """IEEE 30-bus network with 105 candidates, N = 152.

    Every line and unit is replicated twice as a candidate (the second copy
    costs 20% more), and each of eleven large load buses is offered a new
    unit. Susceptances are ``base_mva / x`` in MW/rad.
    """
    buses = tuple(Bus(f"bus{i:02d}", IEEE30_LOADS.get(i, 0.0)) for i in range(1, 31))
    lines = []
    for n, (a, b, x, rating) in enumerate(IEEE30_BRANCHES, start=1):
        B = round(base_mva / x, 6)
        lines.append(TransmissionElement(f"L{n:02d}", f"bus{a:02d}", f"bus{b:02d}", B, float(rating), existing=True))
        cost = round(40.0 + 600.0 * x, 2)
        for copy, scale in (("a", 1.0), ("b", 1.2)):
            lines.append(TransmissionElement(f"L{n:02d}{copy}", f"bus{a:02d}", f"bus{b:02d}", B, float(rating),
                                             invest_cost=round(cost * scale, 2)))
    gens = []
    for n, (bus, cap, mc) in enumerate(IEEE30_GENERATORS, start=1):
        gens.append(Generator(f"G{n:02d}", f"bus{bus:02d}", cap, marginal_cost=mc, existing=True))
        cost = round(8.0 * cap, 2)
        for copy, scale in (("a", 1.0), ("b", 1.2)):
            gens.append(Generator(f"G{n:02d}{copy}", f"bus{bus:02d}", cap, invest_cost=round(cost * scale, 2),
                                  marginal_cost=mc))
    for n, bus in enumerate(IEEE30_NEW_UNIT_BUSES, start=1):
        cap = float(max(20.0, math.ceil(IEEE30_LOADS[bus] / 5.0) * 5.0))
        gens.append(Generator(f"N{n:02d}", f"bus{bus:02d}", cap, invest_cost=round(10.0 * cap + 50.0, 2),
                              marginal_cost=4.0))
    return PowerSystem(buses, tuple(gens), tuple(lines), sigma=1.0)


GRADED_EPSILON = (0.0, 0.0, 0.05, 0.10, 0.20)


def graded_policy(k: int) -> NkEpsilonPolicy:
    """Policy with allowances that loosen as the budget grows: 0, 0, 5%, 10%, 20%."""
    return NkEpsilonPolicy(k, GRADED_EPSILON[: k + 1])
