"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c @ x  s.t.  D @ x <= b,  lower <= x <= upper`` where bounds may be
infinite. Pivoting is fully deterministic: Dantzig's most-negative reduced cost, with
Bland's lowest-index rule during runs of degenerate pivots, and ratio-test
ties going to the lowest basic variable index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dger

from .mdp import ValidationError

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"
# consecutive degenerate pivots before falling back to Bland's rule
BLAND_AFTER = 20
# pivots between rebuilds of the tableau from the original rows
REINVERT_EVERY = 50
# smallest admissible pivot element; tinier ones give near-singular bases
PIVOT_TOL = 1e-7
DRIFT_TOL = 1e-10


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        D = np.asarray(self.constraint_matrix, dtype=float).reshape(-1, n)
        b = np.asarray(self.rhs, dtype=float).ravel()
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if b.size != D.shape[0]:
            raise ValidationError("rhs length must equal the number of constraint rows")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValidationError("bounds must satisfy lower <= upper")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(D)) and np.all(np.isfinite(b))):
            raise ValidationError("objective and constraints must be finite")
        for name, val in (("objective", c), ("constraint_matrix", D), ("rhs", b),
                          ("lower", lo), ("upper", hi)):
            object.__setattr__(self, name, val)

    @property
    def n_variables(self) -> int:
        return self.objective.size

    @property
    def n_constraints(self) -> int:
        return self.rhs.size

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        viol = [0.0]
        if self.n_constraints:
            viol.append(float(np.max(self.constraint_matrix @ x - self.rhs)))
        viol.append(float(np.max(self.lower - x)))
        viol.append(float(np.max(x - self.upper)))
        return max(viol)


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective_value: float = float("nan")
    iterations: int = 0

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _to_standard_form(p: LpProblem):
    """Map ``x`` to non-negative ``y`` with ``x = offset + T @ y`` and rows ``A y <= b``."""
    n = p.n_variables
    cols, offset = [], np.zeros(n)
    extra_rows, extra_rhs = [], []
    for j in range(n):
        lo, hi = p.lower[j], p.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append(len(cols) - 1)
                extra_rhs.append(hi - lo)
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    k = len(cols)
    T = np.zeros((n, k))
    for i, (j, sign) in enumerate(cols):
        T[j, i] = sign
    A = p.constraint_matrix @ T
    b = p.rhs - p.constraint_matrix @ offset
    if extra_rows:
        bound_rows = np.zeros((len(extra_rows), k))
        bound_rows[np.arange(len(extra_rows)), extra_rows] = 1.0
        A = np.vstack([A, bound_rows])
        b = np.concatenate([b, extra_rhs])
    c = T.T @ p.objective
    return A, b, c, T, offset


class _Tableau:
    """Dense tableau: rows ``0..m-1`` are constraints, the last row holds reduced costs, the last column the rhs.

    ``rows`` and ``cost`` keep the untouched constraint rows and the phase
    objective so the tableau can be rebuilt from the current basis, which
    wipes out round-off gathered over long pivot sequences.
    """

    def __init__(self, rows, cost, basis, tol):
        self.rows = np.ascontiguousarray(rows)
        self.cost = np.asarray(cost, dtype=float)
        self.basis = np.asarray(basis)
        self.tol = tol
        self.iterations = 0
        self.t = np.empty((self.rows.shape[0] + 1, self.rows.shape[1]))
        self._probe = np.random.default_rng(0).uniform(-1.0, 1.0, self.rows.shape[1])
        self.reinvert()

    @property
    def m(self):
        return self.t.shape[0] - 1

    def reinvert(self):
        t = self.t
        if self.m:
            t[:-1] = np.linalg.solve(self.rows[:, self.basis], self.rows)
            t[:-1, self.basis] = np.eye(self.m)
        t[-1] = self.cost - self.cost[self.basis] @ t[:-1]
        t[-1, self.basis] = 0.0

    def pivot(self, r, j):
        t = self.t
        t[r] /= t[r, j]
        col = t[:, j].copy()
        col[r] = 0.0
        # rank-one update in place; t.T is a Fortran-ordered view of t
        dger(-1.0, t[r].copy(), col, a=t.T, overwrite_a=True)
        self.basis[r] = j
        self.iterations += 1
        if self.iterations % REINVERT_EVERY == 0 and self.drift() > DRIFT_TOL:
            self.reinvert()

    def drift(self) -> float:
        """Relative residual of ``B @ tableau`` against the original rows, probed
        with a fixed random combination of columns."""
        if not self.m:
            return 0.0
        w = self._probe
        lhs = self.rows[:, self.basis] @ (self.t[:-1] @ w)
        ref = self.rows @ w
        return float(np.abs(lhs - ref).max()) / max(1.0, float(np.abs(ref).max()))

    def run(self, allowed, max_iter):
        """Simplex iterations on columns where ``allowed`` is True.

        The entering column is the most negative reduced cost (lowest index on
        ties). After ``BLAND_AFTER`` consecutive degenerate pivots the rule
        switches to Bland's until the objective moves again, which rules out
        cycling while keeping the pivot count low.
        """
        t, tol = self.t, self.tol
        stalled = 0
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError("simplex iteration limit reached")
            red = t[-1, :-1]
            cand = np.flatnonzero((red < -tol) & allowed)
            if cand.size == 0:
                return OPTIMAL
            j = cand[0] if stalled >= BLAND_AFTER else cand[np.argmin(red[cand])]
            col = t[:-1, j]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return UNBOUNDED
            # round-off can leave rhs entries at -1e-15; a negative step would break feasibility
            ratios = np.maximum(t[pos, -1], 0.0) / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * max(1.0, abs(best))]
            if stalled >= BLAND_AFTER:
                r = ties[np.argmin(self.basis[ties])]
            else:
                # largest pivot element keeps the tableau well conditioned
                r = ties[np.argmax(col[ties])]
            stalled = stalled + 1 if best <= tol else 0
            self.pivot(r, j)


def solve_lp(problem: LpProblem, tol: float = 1e-9, max_iter: int | None = None) -> LpSolution:
    """Minimise ``problem.objective @ x``; statuses ``optimal``/``infeasible``/``unbounded``."""
    A, b, c, T, offset = _to_standard_form(problem)
    m, k = A.shape
    if max_iter is None:
        max_iter = 50 * (m + k) + 1000
    neg = b < 0
    n_art = int(neg.sum())
    # columns: y (k) | slacks (m) | artificials (n_art) | rhs
    width = k + m + n_art
    body = np.zeros((m + 1, width + 1))
    sign = np.where(neg, -1.0, 1.0)
    body[:m, :k] = A * sign[:, None]
    body[np.arange(m), k + np.arange(m)] = sign
    body[:m, -1] = b * sign
    basis = k + np.arange(m)
    art_rows = np.flatnonzero(neg)
    art_cols = k + m + np.arange(n_art)
    body[art_rows, art_cols] = 1.0
    basis[art_rows] = art_cols
    if n_art:
        # phase 1: minimise the sum of artificials
        cost = np.zeros(width + 1)
        cost[art_cols] = 1.0
        tab = _Tableau(body[:m], cost, basis, tol)
        tab.run(np.ones(width, dtype=bool), max_iter)
        tab.reinvert()
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -tab.t[-1, -1] > tol * scale * 10:
            return LpSolution(INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis; [A | I] has full row
        # rank, so a pivot column always exists
        for r in range(m):
            if tab.basis[r] >= k + m:
                row = tab.t[r, : k + m]
                tab.pivot(r, int(np.argmax(np.abs(row))))
        iters = tab.iterations
        rows = np.delete(body[:m], art_cols, axis=1)
        basis = tab.basis
        width = k + m
    else:
        rows, iters = body[:m], 0

    # phase 2
    cost = np.zeros(width + 1)
    cost[:k] = c
    tab = _Tableau(rows, cost, basis, tol)
    tab.iterations = iters
    status = tab.run(np.ones(width, dtype=bool), max_iter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tab.iterations)
    tab.reinvert()
    t = tab.t
    y = np.zeros(width)
    y[tab.basis] = t[:-1, -1]
    x = offset + T @ y[:k]
    return LpSolution(OPTIMAL, x, float(problem.objective @ x), tab.iterations)
