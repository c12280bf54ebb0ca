"""Greedy allocation and LP-relaxation rounding.

Both allocators return an :class:`AllocationState` on success and ``None``
when they cannot satisfy every group (an expected outcome, counted by the
harness as an infeasible subframe).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import simplex
from .core import RATE_RTOL, AllocationState, satisfied
from .simplex import LPSolverError

LP_METHODS = ("highs", "simplex")


@dataclass
class FractionalSolution:
    x_tilde: np.ndarray  # (L, N), entries in [0, 1]
    objective: float


def _greedy_loop(rates: np.ndarray, r_req: float, score: np.ndarray | None) -> AllocationState | None:
    """Shared assignment loop.

    Each step picks, over unsatisfied groups x free PRBs with positive rate,
    the pair with the largest ``score`` (``rates`` when ``score`` is None).
    When ``score`` is given and no candidate has a positive score left, the
    pair with the largest rate is taken instead. Ties go to the smallest
    group index, then the smallest PRB index (row-major argmax).
    """
    L, N = rates.shape
    owner = np.zeros(N, dtype=np.int64)
    acc = np.zeros(L)
    unsat = np.ones(L, dtype=bool)
    free = np.ones(N, dtype=bool)
    while unsat.any() and free.any():
        cand = unsat[:, None] & free[None, :] & (rates > 0)
        if not cand.any():
            break
        pick = None
        if score is not None:
            s = np.where(cand, score, -np.inf)
            flat = int(np.argmax(s))
            if s.flat[flat] > 0:
                pick = flat
        if pick is None:
            pick = int(np.argmax(np.where(cand, rates, -np.inf)))
        i, j = divmod(pick, N)
        owner[j] = i + 1
        free[j] = False
        acc[i] += rates[i, j]
        if satisfied(acc[i], r_req):
            unsat[i] = False
    if unsat.any():
        return None
    return AllocationState(owner, L)


def allocate_greedy(rates, r_req: float) -> AllocationState | None:
    rates = np.asarray(rates, dtype=float)
    if rates.ndim != 2 or min(rates.shape) < 1:
        raise ValueError("rates must be a non-empty (L, N) matrix")
    return _greedy_loop(rates, r_req, None)


def round_lp(frac: FractionalSolution, rates, r_req: float) -> AllocationState | None:
    rates = np.asarray(rates, dtype=float)
    x = np.asarray(frac.x_tilde, dtype=float)
    if x.shape != rates.shape:
        raise ValueError(f"fractional solution shape {x.shape} != rates shape {rates.shape}")
    return _greedy_loop(rates, r_req, x)


def _lp_highs(coef: np.ndarray, rows: np.ndarray, cols: np.ndarray, n_rows: int, n_cols: int):
    nv = coef.size
    idx = np.arange(nv)
    cover = sparse.csr_matrix((-coef, (rows, idx)), shape=(n_rows, nv))
    cap = sparse.csr_matrix((np.ones(nv), (cols, idx)), shape=(n_cols, nv))
    A = sparse.vstack([cover, cap], format="csr")
    b = np.concatenate([-np.ones(n_rows), np.ones(n_cols)])
    res = linprog(np.ones(nv), A_ub=A, b_ub=b, bounds=(0.0, 1.0), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        return None
    if res.status != 0:
        raise LPSolverError(f"HiGHS failed: {res.message}")
    return np.clip(res.x, 0.0, 1.0)


def _lp_simplex(coef: np.ndarray, rows: np.ndarray, cols: np.ndarray, n_rows: int, n_cols: int,
                rule: str = "bland"):
    nv = coef.size
    A = np.zeros((n_rows + n_cols, nv))
    A[rows, np.arange(nv)] = -coef
    A[n_rows + cols, np.arange(nv)] = 1.0
    b = np.concatenate([-np.ones(n_rows), np.ones(n_cols)])
    res = simplex.solve(np.ones(nv), A, b, rule=rule)
    if res.status == "infeasible":
        return None
    return np.clip(res.x, 0.0, 1.0)


def relaxation(rates: np.ndarray, demand: np.ndarray, allowed: np.ndarray,
               method: str = "highs") -> FractionalSolution | None:
    """LP optimum of min sum(x) with per-group residual ``demand``.

    Groups with ``demand <= 0`` are already served and carry no variables;
    ``allowed`` masks the (group, PRB) pairs that may be used.
    """
    L, N = rates.shape
    need = demand > 0
    mask = allowed & need[:, None] & (rates > 0)
    x_full = np.zeros((L, N))
    if not need.any():
        return FractionalSolution(x_full, 0.0)
    if not mask.any(axis=1)[need].all():
        return None
    gi, gj = np.nonzero(mask)
    row_of = -np.ones(L, dtype=np.int64)
    row_of[need] = np.arange(int(need.sum()))
    used_cols, col_of = np.unique(gj, return_inverse=True)
    coef = rates[gi, gj] / demand[gi]
    args = (coef, row_of[gi], col_of, int(need.sum()), used_cols.size)
    if method == "highs":
        x = _lp_highs(*args)
    elif method == "simplex":
        x = _lp_simplex(*args)
    elif method == "dantzig":
        x = _lp_simplex(*args, rule="dantzig")
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if x is None:
        return None
    x_full[gi, gj] = x
    return FractionalSolution(x_full, float(x.sum()))


def solve_lp_relaxation(rates, r_req: float, method: str = "highs") -> FractionalSolution | None:
    """Optimal fractional allocation, or ``None`` if even the relaxation is infeasible."""
    rates = np.asarray(rates, dtype=float)
    L, N = rates.shape
    return relaxation(rates, np.full(L, float(r_req)), np.ones((L, N), dtype=bool), method)


def allocate_lp(rates, r_req: float, method: str = "highs") -> AllocationState | None:
    rates = np.asarray(rates, dtype=float)
    frac = solve_lp_relaxation(rates, r_req, method)
    if frac is None:
        return None
    return round_lp(frac, rates, r_req)


def check_fractional(frac: FractionalSolution, rates, r_req: float, tol: float = RATE_RTOL) -> bool:
    """Relaxed constraints hold within ``tol`` (relative on the rate side)."""
    rates = np.asarray(rates, dtype=float)
    x = frac.x_tilde
    cover = (x * rates).sum(axis=1) >= r_req * (1.0 - tol)
    cap = x.sum(axis=0) <= 1.0 + tol
    return bool(cover.all() and cap.all() and (x >= 0).all() and (x <= 1 + tol).all())
