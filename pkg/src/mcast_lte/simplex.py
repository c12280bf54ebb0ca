"""Dense two-phase tableau simplex for small LPs.

Solves ``min c @ x  s.t.  A_ub @ x <= b_ub,  x >= 0``. Bland's rule is the
default pivoting rule, so the method terminates on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPSolverError(RuntimeError):
    """Numerical or iteration-limit failure (distinct from infeasibility)."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    fun: float | None
    n_pivots: int


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray, tol: float):
        self.T = T  # rows: constraints, last column: rhs
        self.basis = basis
        self.tol = tol
        self.pivots = 0

    def pivot(self, p: int, q: int, cost_row: np.ndarray) -> None:
        T = self.T
        T[p] /= T[p, q]
        col = T[:, q].copy()
        col[p] = 0.0
        T -= np.outer(col, T[p])
        cost_row -= cost_row[q] * T[p]
        self.basis[p] = q
        self.pivots += 1

    def run(self, cost_row: np.ndarray, allowed: np.ndarray, rule: str, max_iter: int) -> None:
        """Optimise in place; ``cost_row`` holds reduced costs then -objective."""
        tol = self.tol
        degenerate_run = 0
        use_bland = rule == "bland"
        for _ in range(max_iter):
            rc = np.where(allowed, cost_row[:-1], 0.0)
            candidates = np.flatnonzero(rc < -tol)
            if candidates.size == 0:
                return
            q = int(candidates[0]) if use_bland else int(candidates[np.argmin(rc[candidates])])
            col = self.T[:, q]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                raise LPSolverError("LP is unbounded")
            ratios = self.T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            p = int(ties[np.argmin(self.basis[ties])])
            degenerate_run = degenerate_run + 1 if best <= tol else 0
            if not use_bland and degenerate_run > 50:
                use_bland = True
            self.pivot(p, q, cost_row)
        raise LPSolverError(f"simplex did not converge in {max_iter} pivots")


def solve(c, A_ub, b_ub, *, rule: str = "bland", tol: float = 1e-9, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float)
    m, n = A.shape
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")

    # row scaling keeps pivots well conditioned when rates span orders of magnitude
    scale = np.maximum(np.abs(A).max(axis=1), np.abs(b))
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = b / scale

    neg = b < 0
    k = int(neg.sum())
    sign = np.where(neg, -1.0, 1.0)
    T = np.zeros((m, n + m + k + 1))
    T[:, :n] = A * sign[:, None]
    T[np.arange(m), n + np.arange(m)] = sign
    art_rows = np.flatnonzero(neg)
    T[art_rows, n + m + np.arange(k)] = 1.0
    T[:, -1] = b * sign
    basis = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(k)
    tab = _Tableau(T, basis, tol)
    n_cols = n + m + k

    if k:
        cost = np.zeros(n_cols + 1)
        cost[n + m:n_cols] = 1.0
        cost -= T[art_rows].sum(axis=0)
        tab.run(cost, np.ones(n_cols, dtype=bool), rule, max_iter)
        if -cost[-1] > tol * max(1.0, k):
            return LPResult("infeasible", None, None, tab.pivots)
        # pivot artificials out of the basis; drop rows that are redundant
        keep = np.ones(m, dtype=bool)
        for p in range(m):
            if tab.basis[p] >= n + m:
                row = tab.T[p, :n + m]
                nz = np.flatnonzero(np.abs(row) > tol)
                if nz.size:
                    tab.pivot(p, int(nz[0]), cost)
                else:
                    keep[p] = False
        tab.T = np.delete(tab.T, np.flatnonzero(~keep), axis=0)
        tab.basis = tab.basis[keep]
        tab.T = np.delete(tab.T, np.arange(n + m, n_cols), axis=1)
        n_cols = n + m

    cost = np.zeros(n_cols + 1)
    cost[:n] = c
    cb = cost[tab.basis]
    cost -= cb @ tab.T
    tab.run(cost, np.ones(n_cols, dtype=bool), rule, max_iter)

    x = np.zeros(n_cols)
    x[tab.basis] = tab.T[:, -1]
    x = np.clip(x[:n], 0.0, None)
    return LPResult("optimal", x, float(c @ x), tab.pivots)
