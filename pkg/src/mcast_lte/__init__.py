"""Multicast subgrouping and PRB allocation for an LTE downlink cell."""

from .annealing import AnnealParams, AnnealResult, anneal
from .channel import CqiTable, LinkBudget, Placement, sample_subframe_rates
from .config import ScenarioConfig, load_config
from .core import AllocationState, FeasibilityReport, evaluate
from .exact import ExactResult, max_reward_bruteforce, solve_blp_exact
from .grouping import Grouping, group_cqi, group_fixed_size, group_random, group_unicast
from .heuristics import allocate_greedy, allocate_lp, solve_lp_relaxation

__all__ = [
    "AllocationState", "AnnealParams", "AnnealResult", "CqiTable", "ExactResult",
    "FeasibilityReport", "Grouping", "LinkBudget", "Placement", "ScenarioConfig",
    "allocate_greedy", "allocate_lp", "anneal", "evaluate", "group_cqi", "group_fixed_size",
    "group_random", "group_unicast", "load_config", "max_reward_bruteforce",
    "sample_subframe_rates", "solve_blp_exact", "solve_lp_relaxation",
]
