"""Dense two-phase simplex for small linear programs.

Solves::

    minimize    c^T v
    subject to  A_ub v <= b_ub
                A_eq v == b_eq
                lo <= v <= hi          (infinite bounds allowed)

Bland's rule is used for both the entering and the leaving variable, which
rules out cycling and makes the pivot sequence a deterministic function of
the program.  Everything is dense; intended for programs with at most a few
thousand rows and columns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.blas import dger

from .exceptions import InputError, LpSolverError

__all__ = ["LinearProgram", "LpSolution", "LpStatus", "solve"]

PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-9
MAX_PIVOTS = 10**6
REINVERT_EVERY = 50
SMALL_PIVOT = 1e-6


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        if n == 0:
            raise InputError("program has no variables")

        def rows(A, b, name):
            if A is None:
                return np.zeros((0, n)), np.zeros(0)
            A = np.atleast_2d(np.asarray(A, dtype=np.float64))
            b = np.asarray(b, dtype=np.float64).ravel()
            if A.shape != (b.size, n):
                raise InputError(f"{name} has shape {A.shape}, expected ({b.size}, {n})")
            if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
                raise InputError(f"{name} contains non-finite entries")
            return A, b

        self.A_ub, self.b_ub = rows(self.A_ub, self.b_ub, "A_ub")
        self.A_eq, self.b_eq = rows(self.A_eq, self.b_eq, "A_eq")
        self.lo = np.zeros(n) if self.lo is None else np.broadcast_to(np.asarray(self.lo, dtype=np.float64), (n,)).copy()
        self.hi = np.full(n, np.inf) if self.hi is None else np.broadcast_to(np.asarray(self.hi, dtype=np.float64), (n,)).copy()
        if not np.all(np.isfinite(self.c)):
            raise InputError("objective contains non-finite entries")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)) or np.any(self.lo == np.inf) or np.any(self.hi == -np.inf):
            raise InputError("invalid bounds")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    """Result of :func:`solve`.

    ``duals_ub`` and ``duals_eq`` are Lagrange multipliers with the sign
    convention ``c = A_ub^T duals_ub + A_eq^T duals_eq + reduced_costs``, so
    ``duals_ub <= 0`` at optimality.  ``dual_objective`` is the Lagrangian
    dual bound evaluated at those multipliers.
    """

    status: LpStatus
    values: np.ndarray | None = None
    objective_value: float = np.nan
    duals_ub: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    dual_objective: float = np.nan
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _StandardForm:
    """``min cs^T x  s.t.  As x (<=|==) bs, x >= 0`` together with the map back to ``v``."""

    def __init__(self, lp: LinearProgram):
        n = lp.n
        cols = []  # (original var, sign) per standard column
        offset = np.zeros(n)
        bound_rows = []
        for j in range(n):
            lo, hi = lp.lo[j], lp.hi[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    bound_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        N = len(cols)
        T = np.zeros((n, N))
        for k, (j, sign) in enumerate(cols):
            T[j, k] = sign
        self.T, self.offset = T, offset

        A_ub = lp.A_ub @ T
        b_ub = lp.b_ub - lp.A_ub @ offset
        B = np.zeros((len(bound_rows), N))
        for r, (k, width) in enumerate(bound_rows):
            B[r, k] = 1.0
        self.A_in = np.vstack([A_ub, B])
        self.b_in = np.concatenate([b_ub, [w for _, w in bound_rows]])
        self.A_eq = lp.A_eq @ T
        self.b_eq = lp.b_eq - lp.A_eq @ offset
        self.c = lp.c @ T
        self.n_ub = lp.A_ub.shape[0]
        self.N = N


def _pivot(tab, obj, basis, r, e):
    # tab is Fortran-ordered so the rank-1 update runs in place in BLAS
    piv = tab[r] / tab[r, e]
    col = tab[:, e].copy()
    col[r] = 0.0
    dger(-1.0, col, piv, a=tab, overwrite_a=1)
    tab[r] = piv
    obj -= obj[e] * piv
    basis[r] = e


def _reinvert(tab, obj, basis, A0, b0, cost):
    """Rebuild the tableau and cost row from the original rows and the current basis."""
    try:
        lu = lu_factor(A0[:, basis], check_finite=False)
    except LinAlgError as exc:  # pragma: no cover - only on a numerically singular basis
        raise LpSolverError("basis became numerically singular") from exc
    tab[:, :-1] = lu_solve(lu, A0, check_finite=False)
    tab[:, -1] = lu_solve(lu, b0, check_finite=False)
    obj[:-1] = cost - cost[basis] @ tab[:, :-1]
    obj[-1] = -(cost[basis] @ tab[:, -1])


def _bland_loop(tab, obj, basis, allowed, count, A0, b0, cost):
    """Pivot until optimal; returns ('optimal'|'unbounded', pivots used).

    Pivot choice is pure Bland.  To keep that choice honest on nearly
    dependent rows, the tableau is rebuilt from ``A0``/``b0`` every
    ``REINVERT_EVERY`` pivots, before acting on a pivot that is small relative
    to its column (the choice is then redone on fresh numbers), and right
    after such a pivot.
    """
    rhs = tab.shape[1] - 1
    since = 0
    while True:
        if since >= REINVERT_EVERY:
            _reinvert(tab, obj, basis, A0, b0, cost)
            since = 0
        candidates = np.flatnonzero((obj[:rhs] < -PIVOT_TOL) & allowed)
        if candidates.size == 0:
            if since:
                since = REINVERT_EVERY  # confirm optimality on a fresh tableau
                continue
            return "optimal", count
        e = int(candidates[0])
        column = tab[:, e]
        eligible = np.flatnonzero(column > PIVOT_TOL)
        if eligible.size == 0:
            if since:
                since = REINVERT_EVERY
                continue
            return "unbounded", count
        ratios = np.maximum(tab[eligible, rhs], 0.0) / column[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        small = column[r] < SMALL_PIVOT * np.abs(column).max()
        if small and since:
            since = REINVERT_EVERY
            continue
        _pivot(tab, obj, basis, r, e)
        count += 1
        since = REINVERT_EVERY if small else since + 1
        if count >= MAX_PIVOTS:
            raise LpSolverError(f"simplex exceeded {MAX_PIVOTS} pivots")


def solve(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` with the two-phase simplex method."""
    sf = _StandardForm(lp)
    n_in, n_eq, N = sf.A_in.shape[0], sf.A_eq.shape[0], sf.N
    n_rows = n_in + n_eq

    # columns: structural | slacks for inequality rows | artificials
    A = np.zeros((n_rows, N + n_in))
    A[:n_in, :N] = sf.A_in
    A[:n_in, N:] = np.eye(n_in)
    A[n_in:, :N] = sf.A_eq
    b = np.concatenate([sf.b_in, sf.b_eq])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    basis = np.empty(n_rows, dtype=np.int64)
    need_art = []
    for i in range(n_rows):
        if i < n_in and not flip[i]:
            basis[i] = N + i
        else:
            need_art.append(i)
    n_art = len(need_art)
    n_cols = N + n_in + n_art
    tab = np.zeros((n_rows, n_cols + 1), order="F")
    tab[:, : N + n_in] = A
    tab[:, -1] = b
    for k, i in enumerate(need_art):
        tab[i, N + n_in + k] = 1.0
        basis[i] = N + n_in + k
    is_art = np.zeros(n_cols, dtype=bool)
    is_art[N + n_in :] = True

    A0 = np.array(tab[:, :-1])
    b0 = b.copy()
    pivots = 0
    if n_art:
        cost1 = is_art.astype(np.float64)
        obj = np.concatenate([cost1, [0.0]])
        for i in need_art:
            obj -= tab[i]
        status, pivots = _bland_loop(tab, obj, basis, np.ones(n_cols, dtype=bool), pivots, A0, b0, cost1)
        if -obj[-1] > FEASIBILITY_TOL:
            return LpSolution(LpStatus.INFEASIBLE, pivots=pivots)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = np.ones(n_rows, dtype=bool)
        for i in range(n_rows):
            if not is_art[basis[i]]:
                continue
            row = np.abs(tab[i, : N + n_in])
            cand = np.flatnonzero(row > PIVOT_TOL)
            if cand.size:
                _pivot(tab, obj, basis, i, int(cand[0]))
                pivots += 1
            else:
                keep[i] = False
        tab = np.asfortranarray(tab[keep])
        basis = basis[keep]
        rows_kept = np.flatnonzero(keep)
        A0, b0 = A0[keep], b0[keep]
    else:
        rows_kept = np.arange(n_rows)

    cost = np.zeros(n_cols)
    cost[:N] = sf.c
    obj = np.concatenate([cost, [0.0]])
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            obj -= cost[j] * tab[i]
    status, pivots = _bland_loop(tab, obj, basis, ~is_art, pivots, A0, b0, cost)
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, pivots=pivots)

    x = np.zeros(n_cols)
    x[basis] = tab[:, -1]
    v = sf.offset + sf.T @ x[:N]
    objective = float(lp.c @ v)

    # multipliers of the standard-form rows from B^T y = c_B
    y_rows = np.zeros(n_rows)
    if len(basis):
        y_rows[rows_kept] = np.linalg.solve(A[rows_kept][:, basis].T, cost[basis])
    y_rows[flip] *= -1.0
    duals_ub = y_rows[: sf.n_ub]
    duals_eq = y_rows[n_in:]
    reduced = lp.c - lp.A_ub.T @ duals_ub - lp.A_eq.T @ duals_eq
    dual_obj = _dual_bound(lp, duals_ub, duals_eq, reduced)
    return LpSolution(LpStatus.OPTIMAL, v, objective, duals_ub, duals_eq, reduced, dual_obj, pivots)


def _dual_bound(lp, duals_ub, duals_eq, reduced, tol=1e-11) -> float:
    """Lagrangian dual ``b_ub.y_ub + b_eq.y_eq + sum_j min_{lo<=v<=hi} r_j v``."""
    total = float(lp.b_ub @ duals_ub + lp.b_eq @ duals_eq)
    for r, lo, hi in zip(reduced, lp.lo, lp.hi):
        if abs(r) <= tol:
            continue
        bound = lo if r > 0 else hi
        if not np.isfinite(bound):
            return -np.inf
        total += r * bound
    return total
