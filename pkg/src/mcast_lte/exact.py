"""Ground-truth solvers used as oracles.

``solve_blp_exact`` is a depth-first branch-and-bound on the binary
variables, bounded by the LP relaxation and seeded with the greedy incumbent.
``max_reward_bruteforce`` enumerates every allocation state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AllocationState, evaluate, obviously_infeasible, satisfied
from .heuristics import allocate_greedy, relaxation

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
BRUTEFORCE_LIMIT = 10**7
_INT_TOL = 1e-7


class BudgetExceeded(RuntimeError):
    """Branch-and-bound hit its node limit before proving optimality."""


class StateSpaceTooLarge(ValueError):
    pass


@dataclass
class ExactResult:
    status: str
    optimum_used_prbs: int | None = None
    witness: AllocationState | None = None
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


@dataclass
class _Node:
    owner: np.ndarray  # fixed assignments, 0 = not fixed to any group
    allowed: np.ndarray  # (L, N) pairs still free to take value 1
    n_fixed: int = field(default=0)


def _cardinality_bound(rates: np.ndarray, demand: np.ndarray, allowed: np.ndarray) -> int | None:
    """Sum over groups of the fewest allowed PRBs that could cover the residual demand.

    Valid because groups never share a PRB. The LP bound alone is weak when
    per-PRB rates sit just below the requirement (LP needs ~1 PRB, integers 2).
    None means some group cannot be covered at all.
    """
    need = demand > 0
    if not need.any():
        return 0
    masked = np.where(allowed[need], rates[need], 0.0)
    cum = np.cumsum(-np.sort(-masked, axis=1), axis=1)
    ok = satisfied(cum, demand[need][:, None])
    if not ok[:, -1].all():
        return None
    return int((ok.argmax(axis=1) + 1).sum())


def solve_blp_exact(rates, r_req: float, budget: int = 10**7, lp_method: str = "highs") -> ExactResult:
    """Minimum number of PRBs meeting every group's rate, or infeasibility."""
    rates = np.asarray(rates, dtype=float)
    L, N = rates.shape
    if obviously_infeasible(rates, r_req):
        return ExactResult(INFEASIBLE)

    best = allocate_greedy(rates, r_req)
    best_used = best.used if best is not None else math.inf
    nodes = 0
    stack = [_Node(np.zeros(N, dtype=np.int64), rates > 0)]
    while stack:
        node = stack.pop()
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"branch-and-bound exceeded {budget} nodes")
        got = np.zeros(L)
        fixed = np.flatnonzero(node.owner)
        np.add.at(got, node.owner[fixed] - 1, rates[node.owner[fixed] - 1, fixed])
        demand = np.where(satisfied(got, r_req), 0.0, r_req - got)
        allowed = node.allowed & (node.owner == 0)[None, :]
        counts = _cardinality_bound(rates, demand, allowed)
        if counts is None or node.n_fixed + counts >= best_used:
            continue
        frac = relaxation(rates, demand, allowed, lp_method)
        if frac is None:
            continue
        bound = node.n_fixed + max(counts, math.ceil(frac.objective - _INT_TOL))
        if bound >= best_used:
            continue
        x = frac.x_tilde
        frac_part = np.minimum(x, 1.0 - x)
        if frac_part.max() <= _INT_TOL:
            owner = node.owner.copy()
            rows, cols = np.nonzero(x > 0.5)
            owner[cols] = rows + 1
            cand = AllocationState(owner, L)
            if evaluate(cand, rates, r_req).feasible:
                if cand.used < best_used:
                    best, best_used = cand, cand.used
                continue
            # numerically integral yet short on rate: branch on its heaviest pair
            frac_part = np.where(x > 0.5, 0.5, 0.0)
        # branch on the fractional pair with the largest rate
        fi, fj = np.nonzero(frac_part > _INT_TOL)
        k = np.lexsort((fj, fi, -rates[fi, fj]))[0]
        i, j = int(fi[k]), int(fj[k])
        zero = _Node(node.owner, node.allowed.copy(), node.n_fixed)
        zero.allowed[i, j] = False
        one_owner = node.owner.copy()
        one_owner[j] = i + 1
        one = _Node(one_owner, node.allowed, node.n_fixed + 1)
        stack.append(zero)
        stack.append(one)

    if best is None:
        return ExactResult(INFEASIBLE, nodes=nodes)
    return ExactResult(FEASIBLE, int(best_used), best, nodes)


def _enumerate_rewards(rates: np.ndarray, r_req: float, chunk: int = 1 << 18):
    """Yield (codes, owners, rewards, feasible, used) over all (L+1)^N states."""
    L, N = rates.shape
    base = L + 1
    total = base**N
    powers = base ** np.arange(N, dtype=np.int64)
    padded = np.vstack([np.zeros((1, N)), rates])  # row 0 = pool, contributes nothing
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        owners = (codes[:, None] // powers[None, :]) % base
        gained = padded[owners, np.arange(N)[None, :]]
        ell = np.stack([np.where(owners == i + 1, gained, 0.0).sum(axis=1) for i in range(L)], axis=1)
        ok = satisfied(ell, r_req)
        shortfall = np.where(ok, 0.0, r_req - ell).sum(axis=1)
        unused = (owners == 0).sum(axis=1)
        rewards = unused - shortfall + ok.sum(axis=1)
        yield owners, rewards, ok.all(axis=1), N - unused


def max_reward_bruteforce(rates, r_req: float, rtol: float = 1e-12):
    """Exhaustive maximum of the reward and every state attaining it."""
    rates = np.asarray(rates, dtype=float)
    L, N = rates.shape
    if (L + 1) ** N > BRUTEFORCE_LIMIT:
        raise StateSpaceTooLarge(f"(L+1)^N = {(L + 1) ** N} exceeds {BRUTEFORCE_LIMIT}")
    best = -math.inf
    argmax: list[np.ndarray] = []
    for owners, rewards, _, _ in _enumerate_rewards(rates, r_req):
        top = float(rewards.max())
        tol = rtol * max(1.0, abs(top), abs(best) if best > -math.inf else 0.0)
        if top > best + tol:
            best = top
            argmax = []
        if top >= best - tol:
            argmax.extend(owners[rewards >= best - tol])
    return best, [AllocationState(o, L) for o in argmax]


def min_used_bruteforce(rates, r_req: float) -> int | None:
    """Fewest used PRBs over all feasible states, or None when none is feasible."""
    rates = np.asarray(rates, dtype=float)
    L, N = rates.shape
    if (L + 1) ** N > BRUTEFORCE_LIMIT:
        raise StateSpaceTooLarge(f"(L+1)^N = {(L + 1) ** N} exceeds {BRUTEFORCE_LIMIT}")
    best = None
    for _, _, feas, used in _enumerate_rewards(rates, r_req):
        if feas.any():
            m = int(used[feas].min())
            best = m if best is None else min(best, m)
    return best
