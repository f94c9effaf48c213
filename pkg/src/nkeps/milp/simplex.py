"""Bundled dense bounded-variable primal simplex.

Meant for small problems and as an independent cross-check on the HiGHS
backend; it refactorizes the basis every iteration and makes no attempt at
sparse performance. Dantzig pricing falls back to Bland's rule after a run
of degenerate pivots, which rules out cycling.
"""

from __future__ import annotations

import numpy as np

from nkeps.milp.model import LinearProgram, Solution, Status

_PIVOT_TOL = 1e-9
_OPT_TOL = 1e-9
_BLAND_AFTER = 50


class _Tableau:
    def __init__(self, A, b, lo, hi, x, basis):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.x = x
        self.basis = basis
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[basis] = True

    def refresh(self):
        B = self.A[:, self.basis]
        nonbasic = ~self.is_basic
        resid = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.Binv = np.linalg.inv(B)
        self.x[self.basis] = self.Binv @ resid

    def run(self, cost, max_iter):
        """Minimize ``cost.x`` from the current basis. Returns a Status."""
        degenerate_run = 0
        for _ in range(max_iter):
            self.refresh()
            y = self.Binv.T @ cost[self.basis]
            d = cost - self.A.T @ y
            entering, direction = self._price(d, bland=degenerate_run >= _BLAND_AFTER)
            if entering is None:
                self.y = y
                self.d = d
                return Status.OPTIMAL
            w = self.Binv @ self.A[:, entering]
            step, leave_pos, leave_to = self._ratio(entering, direction, w)
            if step == np.inf:
                return Status.UNBOUNDED
            degenerate_run = degenerate_run + 1 if step <= _PIVOT_TOL else 0
            self.x[entering] += direction * step
            self.x[self.basis] -= direction * step * w
            if leave_pos is None:
                # entering variable flipped to its opposite bound
                self.x[entering] = self.hi[entering] if direction > 0 else self.lo[entering]
                continue
            leaving = self.basis[leave_pos]
            self.x[leaving] = leave_to
            self.is_basic[leaving] = False
            self.is_basic[entering] = True
            self.basis[leave_pos] = entering
        return Status.NUMERICAL

    def _price(self, d, bland):
        best, best_dir, best_score = None, 0, 0.0
        for j in np.flatnonzero(~self.is_basic):
            if self.lo[j] == self.hi[j]:
                continue
            at_lo = self.x[j] <= self.lo[j]
            at_hi = self.x[j] >= self.hi[j]
            if d[j] < -_OPT_TOL and not at_hi:
                direction = 1
            elif d[j] > _OPT_TOL and not at_lo:
                direction = -1
            else:
                continue
            if bland:
                return j, direction
            if abs(d[j]) > best_score:
                best, best_dir, best_score = j, direction, abs(d[j])
        return best, best_dir

    def _ratio(self, entering, direction, w):
        step = self.hi[entering] - self.lo[entering]
        leave_pos, leave_to = None, None
        for pos, var in enumerate(self.basis):
            rate = -direction * w[pos]
            if rate < -_PIVOT_TOL and np.isfinite(self.lo[var]):
                t, bound = (self.x[var] - self.lo[var]) / -rate, self.lo[var]
            elif rate > _PIVOT_TOL and np.isfinite(self.hi[var]):
                t, bound = (self.hi[var] - self.x[var]) / rate, self.hi[var]
            else:
                continue
            t = max(t, 0.0)
            if t < step - 1e-12 or (
                leave_pos is not None and abs(t - step) <= 1e-12 and var < self.basis[leave_pos]
            ):
                step, leave_pos, leave_to = t, pos, bound
        return step, leave_pos, leave_to


def solve_lp(lp: LinearProgram, max_iter: int = 100_000) -> Solution:
    A = lp.A.toarray()
    m, n = A.shape
    sign = -1.0 if lp.maximize else 1.0
    cost = sign * lp.c

    slack_lo = np.where(lp.senses == ">", -np.inf, 0.0)
    slack_hi = np.where(lp.senses == "<", np.inf, 0.0)
    lo = np.concatenate([lp.lb, slack_lo])
    hi = np.concatenate([lp.ub, slack_hi])
    x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    A_full = np.hstack([A, np.eye(m)])

    resid = lp.rhs - A_full @ x
    art_sign = np.where(resid >= 0.0, 1.0, -1.0)
    A_full = np.hstack([A_full, np.diag(art_sign)])
    lo = np.concatenate([lo, np.zeros(m)])
    hi = np.concatenate([hi, np.full(m, np.inf)])
    x = np.concatenate([x, np.abs(resid)])
    n_real = n + m
    tab = _Tableau(A_full, lp.rhs.astype(float), lo, hi, x, list(range(n_real, n_real + m)))

    phase1 = np.concatenate([np.zeros(n_real), np.ones(m)])
    status = tab.run(phase1, max_iter)
    if status is not Status.OPTIMAL:
        return Solution(Status.NUMERICAL)
    infeas = float(tab.x[n_real:].sum())
    if infeas > 1e-7 * (1.0 + float(np.abs(lp.rhs).max(initial=0.0))):
        return Solution(Status.INFEASIBLE)

    _drive_out_artificials(tab, n_real)
    tab.hi[n_real:] = 0.0
    tab.x[n_real:] = np.minimum(tab.x[n_real:], 0.0)

    phase2 = np.concatenate([cost, np.zeros(m), np.zeros(m)])
    status = tab.run(phase2, max_iter)
    if status is Status.UNBOUNDED:
        return Solution(Status.UNBOUNDED)
    if status is not Status.OPTIMAL:
        return Solution(Status.NUMERICAL)

    xs = tab.x[:n].copy()
    duals = sign * tab.y
    reduced = sign * tab.d[:n]
    obj = float(lp.c @ xs) + lp.obj_constant
    return Solution(Status.OPTIMAL, x=xs, objective=obj, duals=duals, reduced_costs=reduced,
                    bound=obj, gap=0.0)


def _drive_out_artificials(tab: _Tableau, n_real: int) -> None:
    tab.refresh()
    for pos in range(len(tab.basis)):
        if tab.basis[pos] < n_real:
            continue
        row = tab.Binv[pos] @ tab.A[:, :n_real]
        for j in np.flatnonzero(np.abs(row) > 1e-7):
            if not tab.is_basic[j]:
                old = tab.basis[pos]
                tab.is_basic[old] = False
                tab.is_basic[j] = True
                tab.basis[pos] = j
                tab.x[old] = 0.0
                tab.refresh()
                break
