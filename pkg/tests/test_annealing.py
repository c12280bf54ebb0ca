import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from mcast_lte.annealing import (Add, AnnealParams, Drop, Stay, Swap, accept, action_weights, anneal,
                                 apply, classify_move, propose, proposal_mass, reward,
                                 transition_probability)
from mcast_lte.channel import CqiTable
from mcast_lte.core import AllocationState
from mcast_lte.exact import max_reward_bruteforce, solve_blp_exact


def test_reward_examples(intro_separate):
    rates, r = intro_separate
    assert reward(AllocationState.empty(10, 2), rates, r) == -1990
    best = AllocationState(np.array([1, 2] + [0] * 8), 2)
    assert reward(best, rates, r) == 10
    e_star, _ = max_reward_bruteforce(rates, r)
    assert e_star == 10


def test_reward_feasible_is_unused_plus_groups(intro_separate):
    rates, r = intro_separate
    s = AllocationState(np.array([1, 2, 1, 2, 0, 0, 1, 0, 0, 0]), 2)
    assert reward(s, rates, r) == s.unused + 2


def test_action_weights_examples():
    assert action_weights(10, 10, 2) == pytest.approx((1 / 3, 0, 2 / 3, 0))
    assert action_weights(0, 10, 2) == pytest.approx((1 / 3, 20 / 33, 0, 2 / 33))


@pytest.mark.parametrize("N,L", [(1, 1), (5, 1), (10, 2), (30, 4), (100, 15)])
def test_action_weights_are_distribution(N, L):
    # exact arithmetic: the stay weight is never negative
    for v0 in range(N + 1):
        b2 = Fraction(2, 3) * (N - v0) / (L * (v0 + 1) + N - v0 - 1)
        b3 = Fraction(2, 3) * (L * v0) / (L * v0 + N - v0)
        assert Fraction(1, 3) + b2 + b3 <= 1
        w = action_weights(v0, N, L)
        assert min(w) >= 0 and sum(w) == pytest.approx(1.0)


def test_same_group_swap_is_identity():
    s = AllocationState(np.array([1, 1, 0, 2]), 2)
    assert apply(s, Swap(0, 1)) == s


def test_add_then_drop_restores():
    s = AllocationState(np.array([1, 0, 0, 2]), 2)
    assert apply(apply(s, Add(2, 1)), Drop(1)) == s


def test_drop_never_proposed_from_empty():
    s = AllocationState.empty(6, 2)
    gen = np.random.default_rng(0)
    kinds = {type(propose(s, gen)[1]) for _ in range(2000)}
    assert Drop not in kinds


def test_apply_rejects_invalid_moves():
    s = AllocationState(np.array([1, 0]), 1)
    with pytest.raises(ValueError):
        apply(s, Drop(1))
    with pytest.raises(ValueError):
        apply(s, Add(1, 0))
    with pytest.raises(ValueError):
        apply(s, Swap(0, 0))


def test_accept_rules():
    gen = np.random.default_rng(1)
    assert all(accept(3.0, 3.0, 0.7, gen) for _ in range(100))
    assert all(accept(3.0, 8.0, 0.7, gen) for _ in range(100))
    T = 1.3
    rate = np.mean([accept(0.0, -T * math.log(2), T, gen) for _ in range(10_000)])
    assert abs(rate - 0.5) <= 0.015


def test_transition_probability_examples():
    L, N = 2, 10
    rates = np.zeros((L, N))
    s = AllocationState(np.array([1, 2, 1, 2, 1, 2, 1, 0, 0, 0]), L)
    far = AllocationState(np.array([2, 1, 2, 2, 1, 2, 1, 0, 0, 0]), L)
    assert transition_probability(s, far, rates, 1000, 1.0) == 0.0
    # zero rates: reward only counts unused PRBs, so to compare equal rewards use a swap partner
    t = apply(s, Add(1, 8))
    expected = (2 / 3) * (2 * 3 / (2 * 3 + 7)) * (1 / 3) * (1 / 2)
    assert proposal_mass(s, Add(1, 8)) == pytest.approx(expected)
    assert classify_move(s, t) == Add(1, 8)


def test_empirical_tpm_matches_proposal_masses():
    """Swap mass counts both orderings of (j1, j2)."""
    L, N = 2, 4
    s = AllocationState(np.array([1, 0, 2, 0]), L)
    gen = np.random.default_rng(7)
    trials = 200_000
    hits = Counter()
    for _ in range(trials):
        t, _ = propose(s, gen)
        hits[t.key()] += 1
    for key, count in hits.items():
        t = AllocationState(np.array(key), L)
        move = classify_move(s, t)
        if move is None:
            continue
        p = proposal_mass(s, move)
        assert abs(count / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials)


def test_anneal_intro_every_seed(intro_separate):
    rates, r = intro_separate
    for seed in range(20):
        res = anneal(rates, r, AnnealParams(10_000, seed=seed))
        assert res.best_reward == 10 and res.feasible and res.best_state.used == 2
        assert all(b >= a for a, b in zip(res.trace, res.trace[1:]))


def test_anneal_all_zero_rates():
    res = anneal(np.zeros((3, 7)), 100.0, AnnealParams(5000, seed=2))
    assert res.best_reward == 7 - 3 * 100.0
    assert res.best_state.used == 0


def test_anneal_exercises_all_moves():
    gen = np.random.default_rng(3)
    rates = gen.choice(CqiTable.default().rates, (3, 12))
    res = anneal(rates, 1500.0, AnnealParams(1000, seed=1))
    assert all(res.moves[k] > 0 for k in ("swap", "drop", "add"))


def test_anneal_running_reward_matches_recomputation():
    gen = np.random.default_rng(4)
    for seed in range(10):
        rates = gen.choice(CqiTable.default().rate_levels, (3, 15))
        res = anneal(rates, 1800.0, AnnealParams(3000, seed=seed))
        assert res.trace[-1] == pytest.approx(res.best_reward, abs=1e-6)


def test_anneal_close_to_exact_on_harder_instances():
    # rates spread across the table and R spanning several PRBs, unlike the saturated default channel
    gen = np.random.default_rng(12)
    levels = CqiTable.default().rates
    ex_unused, rs_unused = [], []
    for d in range(15):
        L, N = int(gen.integers(2, 5)), 24
        rates = gen.choice(levels, (L, N))
        r = float(gen.uniform(0.15, 0.3) * rates.sum() / L)
        ex = solve_blp_exact(rates, r)
        if not ex.feasible:
            continue
        res = anneal(rates, r, AnnealParams(100_000, seed=d, record_trace=False))
        ex_unused.append(N - ex.optimum_used_prbs)
        rs_unused.append(res.best_state.unused if res.feasible else 0)
    assert np.mean(rs_unused) >= 0.9 * np.mean(ex_unused)


def test_stay_action_from_propose():
    s = AllocationState.empty(1, 1)
    gen = np.random.default_rng(0)
    seen = {type(propose(s, gen)[1]) for _ in range(200)}
    assert Swap not in seen and seen <= {Add, Stay}
