"""Solver-neutral LP/MILP container and the solution record."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy import sparse

INF = float("inf")

FEAS_TOL = 1e-7
INT_TOL = 1e-6
DEFAULT_GAP = 1e-3


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time_limit"
    NUMERICAL = "numerical_failure"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min|max c.x  s.t.  A x (<=,=,>=) rhs,  lb <= x <= ub``.

    ``senses`` holds one of ``"<"``, ``"="``, ``">"`` per row. Rows and
    variables carry names so models can be inspected and dumped.
    """

    c: np.ndarray
    A: sparse.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    maximize: bool = False
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()
    obj_constant: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def is_mip(self) -> bool:
        return bool(np.any(self.integer))

    def var_index(self, name: str) -> int:
        return self._var_lookup[name]

    @property
    def _var_lookup(self) -> dict[str, int]:
        lookup = self.__dict__.get("_vl")
        if lookup is None:
            lookup = {n: i for i, n in enumerate(self.var_names)}
            object.__setattr__(self, "_vl", lookup)
        return lookup

    def with_rhs(self, rhs) -> "LinearProgram":
        return replace(self, rhs=np.asarray(rhs, dtype=float))

    def with_bounds(self, lb=None, ub=None) -> "LinearProgram":
        return replace(
            self,
            lb=self.lb if lb is None else np.asarray(lb, dtype=float),
            ub=self.ub if ub is None else np.asarray(ub, dtype=float),
        )

    def relaxed(self) -> "LinearProgram":
        return replace(self, integer=np.zeros(self.n_vars, dtype=bool))

    def validate(self) -> list[str]:
        problems = []
        if np.any(self.lb > self.ub):
            bad = int(np.flatnonzero(self.lb > self.ub)[0])
            problems.append(f"variable {self._vname(bad)} has lower bound above upper bound")
        if not np.all(np.isfinite(self.c)):
            problems.append("non-finite objective coefficient")
        if not np.all(np.isfinite(self.A.data)):
            problems.append("non-finite constraint coefficient")
        if not np.all(np.isfinite(self.rhs)):
            problems.append("non-finite right-hand side")
        if len(set(self.var_names)) != len(self.var_names):
            problems.append("duplicate variable names")
        if len(set(self.row_names)) != len(self.row_names):
            problems.append("duplicate row names")
        if not set(np.unique(self.senses)) <= {"<", "=", ">"}:
            problems.append("unknown row sense")
        return problems

    def _vname(self, j: int) -> str:
        return self.var_names[j] if self.var_names else f"x{j}"

    def _rname(self, i: int) -> str:
        return self.row_names[i] if self.row_names else f"r{i}"

    def dump(self) -> str:
        """Algebraic text form, one constraint per line, for debugging."""
        lines = []

        def term_str(coefs):
            parts = []
            for j, v in coefs:
                sign = "-" if v < 0 else "+"
                parts.append(f"{sign} {abs(v):.12g} {self._vname(j)}")
            text = " ".join(parts) or "0"
            return text[2:] if text.startswith("+ ") else text

        obj = [(j, v) for j, v in enumerate(self.c) if v != 0.0]
        lines.append(("maximize" if self.maximize else "minimize") + " " + term_str(obj))
        if self.obj_constant:
            lines[-1] += f" + {self.obj_constant:.12g}"
        lines.append("subject to")
        A = self.A.tocsr()
        op = {"<": "<=", "=": "=", ">": ">="}
        for i in range(self.n_rows):
            row = A.getrow(i)
            coefs = sorted(zip(row.indices.tolist(), row.data.tolist()))
            lines.append(f"  {self._rname(i)}: {term_str(coefs)} {op[self.senses[i]]} {self.rhs[i]:.12g}")
        lines.append("bounds")
        for j in range(self.n_vars):
            kind = " integer" if self.integer[j] else ""
            lines.append(f"  {self.lb[j]:.12g} <= {self._vname(j)} <= {self.ub[j]:.12g}{kind}")
        return "\n".join(lines) + "\n"


@dataclass
class Solution:
    status: Status
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    bound: float = float("nan")
    gap: float = float("nan")
    nodes: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def dual_objective(self, lp: LinearProgram) -> float:
        """``rhs.y + sum of finite bounds times reduced costs``, for LP duality checks."""
        total = float(self.duals @ lp.rhs)
        rc = self.reduced_costs
        lo = np.where(np.isfinite(lp.lb), lp.lb, 0.0)
        hi = np.where(np.isfinite(lp.ub), lp.ub, 0.0)
        at_lo = np.where(rc * (-1 if lp.maximize else 1) > 0, rc, 0.0)
        at_hi = rc - at_lo
        return total + float(at_lo @ lo + at_hi @ hi) + lp.obj_constant


class ModelBuilder:
    """Incrementally assemble a :class:`LinearProgram` by name."""

    def __init__(self, maximize: bool = False):
        self.maximize = maximize
        self._names: list[str] = []
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._rows_i: list[int] = []
        self._rows_j: list[int] = []
        self._rows_v: list[float] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []
        self.obj_constant = 0.0

    def add_var(self, name, lb=0.0, ub=INF, cost=0.0, integer=False) -> int:
        self._names.append(name)
        self._c.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._int.append(bool(integer))
        return len(self._names) - 1

    def add_vars(self, prefix, keys, lb=0.0, ub=INF, cost=0.0, integer=False) -> np.ndarray:
        return np.array(
            [self.add_var(f"{prefix}[{k}]", lb, ub, cost, integer) for k in keys], dtype=int
        )

    def add_row(self, name, coefs: Mapping[int, float] | list, sense: str, rhs: float) -> int:
        i = len(self._rhs)
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        for j, v in items:
            if v != 0.0:
                self._rows_i.append(i)
                self._rows_j.append(int(j))
                self._rows_v.append(float(v))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name)
        return i

    def set_cost(self, j: int, cost: float) -> None:
        self._c[j] = float(cost)

    @property
    def n_vars(self) -> int:
        return len(self._names)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    def build(self) -> LinearProgram:
        A = sparse.csr_matrix(
            (self._rows_v, (self._rows_i, self._rows_j)), shape=(self.n_rows, self.n_vars)
        )
        A.sum_duplicates()
        return LinearProgram(
            c=np.array(self._c, dtype=float),
            A=A,
            senses=np.array(self._senses, dtype="<U1"),
            rhs=np.array(self._rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            integer=np.array(self._int, dtype=bool),
            maximize=self.maximize,
            var_names=tuple(self._names),
            row_names=tuple(self._row_names),
            obj_constant=self.obj_constant,
        )
