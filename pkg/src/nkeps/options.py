from __future__ import annotations

from dataclasses import dataclass, replace

from nkeps.milp import DEFAULT_GAP


@dataclass(frozen=True)
class SolveOptions:
    """Solver settings shared by every method.

    ``dual_bound`` is the interdiction oracle's bound U on dual variables;
    ``None`` means the per-system default ``max(1, max_e M_e)``. The oracle
    runs at its own, much tighter, relative gap ``oracle_gap`` so that its
    worst-case value is exact to within about 1e-6 of total demand.
    """

    gap: float = DEFAULT_GAP
    time_limit_secs: float | None = None
    dual_bound: float | None = None
    engine: str = "highs"
    state_limit: int = 1_000_000
    max_iterations: int = 10_000
    max_cuts: int = 500
    audit_tol: float = 1e-6
    oracle_gap: float = 1e-7

    def merged(self, **overrides) -> "SolveOptions":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})
