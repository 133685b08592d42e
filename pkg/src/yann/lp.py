"""Small dense linear programming over half-space constraint sets.

Two-phase primal simplex on a dense tableau. Problems in this package are
tiny (a handful of free variables, at most a few hundred rows), and what
matters is exact status classification (Optimal / Infeasible / Unbounded)
and bitwise determinism, not asymptotics. Bland's anti-cycling rule is the
default pivot choice; Dantzig pivoting is available behind a flag.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .pwa import Halfspace

# Documented feasibility tolerance: an Optimal point satisfies every
# constraint to within this absolute slack.
FEASIBILITY_TOL = 1e-8
_PIVOT_TOL = 1e-9


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    """Maximize ``objective . x`` subject to ``A x <= b`` with x free."""

    objective: np.ndarray
    constraints: list[Halfspace]

    def __post_init__(self):
        self.objective = np.atleast_1d(np.asarray(self.objective, dtype=float))
        if not self.constraints:
            raise ValueError("LP needs at least one constraint")
        n = self.objective.shape[0]
        if any(h.dim != n for h in self.constraints):
            raise ValueError("constraint dimension mismatch with objective")


@dataclass
class LpResult:
    status: LpStatus
    value: float | None = None
    point: np.ndarray | None = None


class LpIterationError(RuntimeError):
    """Pivot count exceeded the iteration cap."""


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _entering(T: np.ndarray, allowed: int, rule: str) -> int | None:
    costs = T[-1, :allowed]
    if rule == "dantzig":
        j = int(np.argmin(costs))
        return j if costs[j] < -_PIVOT_TOL else None
    neg = np.flatnonzero(costs < -_PIVOT_TOL)
    return int(neg[0]) if neg.size else None


def _leaving(T: np.ndarray, basis: np.ndarray, col: int) -> int | None:
    column = T[:-1, col]
    rhs = T[:-1, -1]
    eligible = np.flatnonzero(column > _PIVOT_TOL)
    if eligible.size == 0:
        return None
    ratios = rhs[eligible] / column[eligible]
    best = ratios.min()
    ties = eligible[ratios <= best + _PIVOT_TOL]
    # smallest basic-variable index among ties: Bland's anti-cycling choice
    return int(ties[np.argmin(basis[ties])])


def _run_simplex(T, basis, allowed, rule, cap, context):
    for it in range(cap):
        col = _entering(T, allowed, rule)
        if col is None:
            return
        row = _leaving(T, basis, col)
        if row is None:
            raise _UnboundedPivot()
        _pivot(T, basis, row, col)
    raise LpIterationError(
        f"simplex exceeded {cap} iterations during {context} "
        f"(rows={T.shape[0] - 1}, cols={T.shape[1] - 1})")


class _UnboundedPivot(Exception):
    pass


def solve_lp(prob: LpProblem, pivot_rule: str = "bland",
             max_iter: int | None = None) -> LpResult:
    """Solve a small dense LP exactly enough to trust the status.

    Free variables are split into positive and negative parts; rows with
    negative right-hand sides get artificial variables and a phase-1
    feasibility solve precedes the phase-2 optimization. The iteration cap
    defaults to ``10 * (n + rows)`` per phase.
    """
    if pivot_rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    c = prob.objective
    n = c.shape[0]
    A = np.array([h.coeffs for h in prob.constraints], dtype=float)
    b = np.array([h.offset for h in prob.constraints], dtype=float)
    rows = A.shape[0]
    cap = max_iter if max_iter is not None else 10 * (n + rows)

    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.where(flip, -b, b)
    slack_sign = np.where(flip, -1.0, 1.0)

    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size
    n_struct = 2 * n + rows          # x+ columns, x- columns, slack columns
    n_cols = n_struct + n_art

    T = np.zeros((rows + 1, n_cols + 1))
    T[:rows, :n] = A
    T[:rows, n:2 * n] = -A
    T[:rows, 2 * n:n_struct] = np.diag(slack_sign)
    T[:rows, -1] = b
    basis = np.empty(rows, dtype=int)
    basis[:] = 2 * n + np.arange(rows)
    for k, i in enumerate(art_rows):
        T[i, n_struct + k] = 1.0
        basis[i] = n_struct + k

    if n_art:
        # phase 1: minimize the sum of artificials
        T[-1, n_struct:n_cols] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        try:
            _run_simplex(T, basis, n_cols, pivot_rule, cap, "phase 1")
        except _UnboundedPivot:  # pragma: no cover - phase 1 is bounded below
            raise LpIterationError("phase 1 reported unbounded")
        if -T[-1, -1] > FEASIBILITY_TOL:
            return LpResult(LpStatus.INFEASIBLE)
        # drive any artificial still basic (at zero level) out of the basis
        drop = []
        for i in range(rows):
            if basis[i] >= n_struct:
                pivots = np.flatnonzero(np.abs(T[i, :n_struct]) > _PIVOT_TOL)
                if pivots.size:
                    _pivot(T, basis, i, int(pivots[0]))
                else:
                    drop.append(i)  # redundant row
        if drop:
            keep = [i for i in range(rows) if i not in drop]
            T = np.vstack([T[keep], T[-1:]])
            basis = basis[keep]
            rows = len(keep)
        T = np.hstack([T[:, :n_struct], T[:, -1:]])

    # phase 2: minimize -c.x expressed on the split variables
    T[-1, :] = 0.0
    T[-1, :n] = -c
    T[-1, n:2 * n] = c
    for i in range(rows):
        coef = T[-1, basis[i]]
        if coef != 0.0:
            T[-1] -= coef * T[i]
    try:
        _run_simplex(T, basis, n_struct, pivot_rule, cap, "phase 2")
    except _UnboundedPivot:
        return LpResult(LpStatus.UNBOUNDED)

    x = np.zeros(n)
    for i in range(rows):
        j = basis[i]
        if j < n:
            x[j] += T[i, -1]
        elif j < 2 * n:
            x[j - n] -= T[i, -1]
    return LpResult(LpStatus.OPTIMAL, float(c @ x), x)


def is_empty(halfspaces: list[Halfspace], max_iter: int | None = None) -> bool:
    """True iff the polytope ``{x : A x <= b}`` has no feasible point."""
    n = halfspaces[0].dim
    res = solve_lp(LpProblem(np.zeros(n), halfspaces), max_iter=max_iter)
    return res.status is LpStatus.INFEASIBLE


def chebyshev_center(halfspaces: list[Halfspace],
                     r_cap: float = 1e6) -> tuple[np.ndarray, float] | None:
    """Largest inscribed ball: returns (center, radius), or None if empty.

    The radius is capped so the LP stays bounded on unbounded polyhedra.
    A strictly positive radius certifies a full-dimensional interior,
    which is what the pairwise overlap check looks for.
    """
    n = halfspaces[0].dim
    rows = []
    for h in halfspaces:
        rows.append(Halfspace(np.append(h.coeffs, np.linalg.norm(h.coeffs)),
                              h.offset))
    cap_row = np.zeros(n + 1)
    cap_row[-1] = 1.0
    rows.append(Halfspace(cap_row, r_cap))
    obj = np.zeros(n + 1)
    obj[-1] = 1.0
    res = solve_lp(LpProblem(obj, rows))
    if res.status is not LpStatus.OPTIMAL:
        return None
    radius = float(res.point[-1])
    if radius < 0.0:
        # the lifted LP is feasible for any polytope; a negative optimal
        # radius is the emptiness certificate
        return None
    return res.point[:n], radius
