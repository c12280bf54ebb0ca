"""Simulated-annealing allocator over PRB ownership states.

A state assigns every PRB to a group 1..L or to the unused pool 0. The chain
proposes swap / drop / add moves with state-dependent action weights and
accepts by the Metropolis rule on the reward

    E(s) = #unused - sum_i [R - rate_i]^+ + #satisfied,

whose maximisers are exactly the minimum-PRB feasible allocations when one
exists. ``transition_probability`` evaluates single TPM entries for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .core import RATE_RTOL, AllocationState, evaluate


def default_temperature(k: int) -> float:
    # iteration counter starts at 1; the +1 shift keeps ln() positive
    return 1.0 / math.log(k + 1)


@dataclass
class AnnealParams:
    max_iter: int = 100_000
    seed: int = 0
    temperature_fn: Callable[[int], float] = default_temperature
    record_trace: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class Swap:
    j1: int
    j2: int


@dataclass(frozen=True)
class Drop:
    j1: int


@dataclass(frozen=True)
class Add:
    i1: int
    j1: int


@dataclass(frozen=True)
class Stay:
    pass


Action = Union[Swap, Drop, Add, Stay]


def reward(state: AllocationState, rates, r_req: float) -> float:
    rep = evaluate(state, rates, r_req)
    shortfall = sum(0.0 if ok else r_req - ell for ell, ok in zip(rep.group_rates_kbps, rep.satisfied))
    return rep.unused_prbs - shortfall + rep.n_satisfied


def action_weights(n_unused: int, n_prbs: int, n_groups: int) -> tuple[float, float, float, float]:
    """(swap, drop, add, stay) probabilities for a state with ``n_unused`` pool PRBs."""
    v0, N, L = n_unused, n_prbs, n_groups
    b1 = 1.0 / 3.0
    b2 = (2.0 / 3.0) * (N - v0) / (L * (v0 + 1) + (N - (v0 + 1)))
    b3 = (2.0 / 3.0) * (L * v0) / (L * v0 + (N - v0))
    return b1, b2, b3, max(0.0, 1.0 - b1 - b2 - b3)


def action_probabilities(state: AllocationState) -> tuple[float, float, float, float]:
    return action_weights(state.unused, state.n_prbs, state.n_groups)


def apply(state: AllocationState, action: Action) -> AllocationState:
    out = state.copy()
    o = out.owner
    if isinstance(action, Swap):
        if action.j1 == action.j2:
            raise ValueError("swap needs two distinct PRBs")
        o[action.j1], o[action.j2] = o[action.j2], o[action.j1]
    elif isinstance(action, Drop):
        if o[action.j1] == 0:
            raise ValueError(f"PRB {action.j1} is already unused")
        o[action.j1] = 0
    elif isinstance(action, Add):
        if o[action.j1] != 0 or not 1 <= action.i1 <= state.n_groups:
            raise ValueError(f"cannot add PRB {action.j1} to group {action.i1}")
        o[action.j1] = action.i1
    return out


def propose(state: AllocationState, rng: np.random.Generator) -> tuple[AllocationState, Action]:
    """Draw an action by its weight, then a uniform move of that kind."""
    N, L = state.n_prbs, state.n_groups
    b1, b2, b3, _ = action_probabilities(state)
    u = rng.random()
    if u < b1 and N >= 2:
        j1, j2 = rng.choice(N, size=2, replace=False)
        action: Action = Swap(int(j1), int(j2))
    elif b1 <= u < b1 + b2:
        action = Drop(int(rng.choice(np.flatnonzero(state.owner != 0))))
    elif b1 + b2 <= u < b1 + b2 + b3:
        action = Add(int(rng.integers(1, L + 1)), int(rng.choice(np.flatnonzero(state.owner == 0))))
    else:
        action = Stay()
    return (state.copy() if isinstance(action, Stay) else apply(state, action)), action


def acceptance_probability(e_current: float, e_proposed: float, temperature: float) -> float:
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if e_proposed >= e_current:
        return 1.0
    return math.exp((e_proposed - e_current) / temperature)


def accept(e_current: float, e_proposed: float, temperature: float, rng: np.random.Generator) -> bool:
    if e_proposed >= e_current:
        return True
    return bool(rng.random() < acceptance_probability(e_current, e_proposed, temperature))


def classify_move(s: AllocationState, t: AllocationState) -> Action | None:
    """The single action turning ``s`` into ``t``, or None if they are not neighbours."""
    diff = np.flatnonzero(s.owner != t.owner)
    if diff.size == 1:
        j = int(diff[0])
        if s.owner[j] == 0:
            return Add(int(t.owner[j]), j)
        if t.owner[j] == 0:
            return Drop(j)
        return None
    if diff.size == 2:
        j1, j2 = map(int, diff)
        if s.owner[j1] == t.owner[j2] and s.owner[j2] == t.owner[j1]:
            return Swap(j1, j2)
    return None


def proposal_mass(state: AllocationState, action: Action) -> float:
    """Probability that one step proposes exactly this move from ``state``."""
    N, L = state.n_prbs, state.n_groups
    b1, b2, b3, _ = action_probabilities(state)
    v0 = state.unused
    if isinstance(action, Swap):
        # the ordered pairs (j1, j2) and (j2, j1) give the same move
        return b1 * 2.0 / (N * (N - 1))
    if isinstance(action, Drop):
        return b2 / (N - v0)
    if isinstance(action, Add):
        return b3 / (v0 * L)
    raise ValueError("Stay has no proposal mass of its own")


def transition_probability(s: AllocationState, t: AllocationState, rates, r_req: float,
                           temperature: float) -> float:
    """One-step probability of moving from ``s`` to a different state ``t``."""
    if s.n_prbs != t.n_prbs or s.n_groups != t.n_groups:
        raise ValueError("states differ in shape")
    action = classify_move(s, t)
    if action is None:
        return 0.0
    alpha = acceptance_probability(reward(s, rates, r_req), reward(t, rates, r_req), temperature)
    return proposal_mass(s, action) * alpha


@dataclass
class AnnealResult:
    best_state: AllocationState
    best_reward: float
    trace: list[float] = field(default_factory=list)
    moves: dict[str, int] = field(default_factory=dict)
    feasible: bool = False


def anneal(rates, r_req: float, params: AnnealParams = AnnealParams(),
           initial: AllocationState | None = None) -> AnnealResult:
    """Run the chain for ``params.max_iter`` steps and return the best state visited."""
    rates = np.asarray(rates, dtype=float)
    L, N = rates.shape
    state = initial.copy() if initial is not None else AllocationState.empty(N, L)
    rng = np.random.default_rng(params.seed)
    thresh = r_req * (1.0 - RATE_RTOL)

    r = [[0.0] * N] + rates.tolist()  # r[0] is the pool row
    owner = state.owner.tolist()
    ell = [0.0] * (L + 1)
    for j, g in enumerate(owner):
        if g:
            ell[g] += r[g][j]
    # index-tracked pools for O(1) uniform picks
    unused = [j for j in range(N) if owner[j] == 0]
    used = [j for j in range(N) if owner[j] != 0]
    pos = [0] * N
    for k, j in enumerate(unused):
        pos[j] = k
    for k, j in enumerate(used):
        pos[j] = k

    def contrib(x: float) -> float:
        return 1.0 if x >= thresh else x - r_req

    energy = len(unused) + sum(contrib(ell[i]) for i in range(1, L + 1))
    best_e = energy
    best_owner = list(owner)
    trace: list[float] = []
    counts = {"swap": 0, "drop": 0, "add": 0, "stay": 0, "rejected": 0}
    u = rng.random((params.max_iter, 4)).tolist()
    temp = params.temperature_fn
    third, two_thirds = 1.0 / 3.0, 2.0 / 3.0

    for k in range(params.max_iter):
        ua, u1, u2, uacc = u[k]
        v0 = len(unused)
        b2 = two_thirds * (N - v0) / (L * (v0 + 1) + (N - v0 - 1))
        b3 = two_thirds * (L * v0) / (L * v0 + (N - v0))
        if ua < third:
            if N < 2:
                counts["stay"] += 1
                if params.record_trace:
                    trace.append(best_e)
                continue
            j1 = int(u1 * N)
            j2 = int(u2 * (N - 1))
            if j2 >= j1:
                j2 += 1
            a, b = owner[j1], owner[j2]
            if a == b:
                counts["swap"] += 1
                delta = 0.0
            else:
                na = ell[a] - r[a][j1] + r[a][j2] if a else 0.0
                nb = ell[b] - r[b][j2] + r[b][j1] if b else 0.0
                delta = ((contrib(na) - contrib(ell[a])) if a else 0.0) + \
                        ((contrib(nb) - contrib(ell[b])) if b else 0.0)
                if delta >= 0 or uacc < math.exp(delta / temp(k + 1)):
                    counts["swap"] += 1
                    if a:
                        ell[a] = na
                    if b:
                        ell[b] = nb
                    owner[j1], owner[j2] = b, a
                    # pool membership moves with the owners
                    if a == 0 or b == 0:
                        pool_j, grp_j = (j1, j2) if a == 0 else (j2, j1)
                        unused[pos[pool_j]] = grp_j
                        used[pos[grp_j]] = pool_j
                        pos[pool_j], pos[grp_j] = pos[grp_j], pos[pool_j]
                    energy += delta
                else:
                    counts["rejected"] += 1
        elif ua < third + b2:
            j = used[int(u1 * len(used))]
            a = owner[j]
            na = ell[a] - r[a][j]
            delta = 1.0 + contrib(na) - contrib(ell[a])
            if delta >= 0 or uacc < math.exp(delta / temp(k + 1)):
                counts["drop"] += 1
                ell[a] = na
                owner[j] = 0
                last = used.pop()
                if last != j:
                    used[pos[j]] = last
                    pos[last] = pos[j]
                pos[j] = len(unused)
                unused.append(j)
                energy += delta
            else:
                counts["rejected"] += 1
        elif ua < third + b2 + b3:
            i = 1 + int(u2 * L)
            j = unused[int(u1 * v0)]
            ni = ell[i] + r[i][j]
            delta = -1.0 + contrib(ni) - contrib(ell[i])
            if delta >= 0 or uacc < math.exp(delta / temp(k + 1)):
                counts["add"] += 1
                ell[i] = ni
                owner[j] = i
                last = unused.pop()
                if last != j:
                    unused[pos[j]] = last
                    pos[last] = pos[j]
                pos[j] = len(used)
                used.append(j)
                energy += delta
            else:
                counts["rejected"] += 1
        else:
            counts["stay"] += 1
        if energy > best_e:
            best_e = energy
            best_owner = list(owner)
        if params.record_trace:
            trace.append(best_e)

    best = AllocationState(np.array(best_owner, dtype=np.int64), L)
    # report the exactly recomputed reward, not the running sum
    return AnnealResult(best, reward(best, rates, r_req), trace, counts,
                        evaluate(best, rates, r_req).feasible)
