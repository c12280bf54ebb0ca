"""Allocation state and feasibility evaluation shared by every allocator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Relative slack on the rate constraint; absorbs float summation order only.
RATE_RTOL = 1e-9


def satisfied(rate_sum, r_req: float):
    return np.asarray(rate_sum) >= r_req * (1.0 - RATE_RTOL)


@dataclass
class AllocationState:
    """PRB ownership: ``owner[j]`` in ``0..n_groups``, 0 meaning unused."""

    owner: np.ndarray
    n_groups: int

    def __post_init__(self):
        self.owner = np.asarray(self.owner, dtype=np.int64)
        if self.owner.ndim != 1:
            raise ValueError("owner must be one-dimensional")
        if self.n_groups < 1:
            raise ValueError("n_groups must be >= 1")
        if self.owner.size and (self.owner.min() < 0 or self.owner.max() > self.n_groups):
            raise ValueError(f"owner entries must lie in 0..{self.n_groups}")

    @classmethod
    def empty(cls, n_prbs: int, n_groups: int) -> "AllocationState":
        return cls(np.zeros(n_prbs, dtype=np.int64), n_groups)

    @classmethod
    def from_matrix(cls, x) -> "AllocationState":
        """Build from an (L, N) 0/1 matrix with at most one 1 per column."""
        x = np.asarray(x)
        if np.any(x.sum(axis=0) > 1):
            raise ValueError("a PRB is assigned to more than one group")
        owner = np.zeros(x.shape[1], dtype=np.int64)
        rows, cols = np.nonzero(x)
        owner[cols] = rows + 1
        return cls(owner, x.shape[0])

    @property
    def n_prbs(self) -> int:
        return int(self.owner.size)

    @property
    def unused(self) -> int:
        return int(np.count_nonzero(self.owner == 0))

    @property
    def used(self) -> int:
        return self.n_prbs - self.unused

    def prbs_of(self, group: int) -> np.ndarray:
        """PRB indices owned by ``group`` (1-based group index, 0 = pool)."""
        return np.flatnonzero(self.owner == group)

    def matrix(self) -> np.ndarray:
        x = np.zeros((self.n_groups, self.n_prbs), dtype=np.int8)
        cols = np.flatnonzero(self.owner)
        x[self.owner[cols] - 1, cols] = 1
        return x

    def key(self) -> tuple[int, ...]:
        return tuple(self.owner.tolist())

    def copy(self) -> "AllocationState":
        return AllocationState(self.owner.copy(), self.n_groups)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AllocationState):
            return NotImplemented
        return self.n_groups == other.n_groups and np.array_equal(self.owner, other.owner)

    def __hash__(self):
        return hash((self.n_groups, self.key()))


@dataclass(frozen=True)
class FeasibilityReport:
    group_rates_kbps: tuple[float, ...]
    satisfied: tuple[bool, ...]
    n_satisfied: int
    used_prbs: int
    unused_prbs: int

    @property
    def feasible(self) -> bool:
        return self.n_satisfied == len(self.satisfied)


def _check_dims(state: AllocationState, rates: np.ndarray) -> None:
    if rates.ndim != 2 or rates.shape != (state.n_groups, state.n_prbs):
        raise ValueError(f"rate matrix shape {rates.shape} does not match "
                         f"state ({state.n_groups} groups, {state.n_prbs} PRBs)")


def group_rates(state: AllocationState, rates) -> np.ndarray:
    rates = np.asarray(rates, dtype=float)
    _check_dims(state, rates)
    cols = np.flatnonzero(state.owner)
    gained = rates[state.owner[cols] - 1, cols]
    return np.bincount(state.owner[cols] - 1, weights=gained, minlength=state.n_groups)


def evaluate(state: AllocationState, rates, r_req: float) -> FeasibilityReport:
    ell = group_rates(state, rates)
    ok = satisfied(ell, r_req)
    return FeasibilityReport(
        group_rates_kbps=tuple(ell.tolist()),
        satisfied=tuple(bool(v) for v in ok),
        n_satisfied=int(ok.sum()),
        used_prbs=state.used,
        unused_prbs=state.unused,
    )


def average_unused(per_subframe_unused: Sequence[int]) -> float:
    """Finite-horizon mean of unused PRBs per subframe."""
    values = list(per_subframe_unused)
    if not values:
        raise ValueError("average_unused needs at least one subframe")
    return float(np.mean(values))


def min_prbs_needed(rates, r_req: float) -> np.ndarray:
    """Per-group lower bound on PRBs: fewest of its best PRBs reaching ``r_req``.

    Returns a large sentinel (N + 1) for groups that cannot be satisfied even
    with every PRB.
    """
    rates = np.asarray(rates, dtype=float)
    n = rates.shape[1]
    cum = np.cumsum(-np.sort(-rates, axis=1), axis=1)
    ok = satisfied(cum, r_req)
    return np.where(ok.any(axis=1), ok.argmax(axis=1) + 1, n + 1)


def obviously_infeasible(rates, r_req: float) -> bool:
    """Cheap necessary-condition check; True means no feasible allocation exists."""
    rates = np.asarray(rates, dtype=float)
    if rates.shape[0] > rates.shape[1]:
        return True
    return int(min_prbs_needed(rates, r_req).sum()) > rates.shape[1]
