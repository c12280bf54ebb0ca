"""Multicast grouping schemes and group-rate collapse."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import N_CQI, AverageChannel, CqiTable

# P(avg * Exp(1) >= snr_min | avg = T) = exp(-ln(10/9)) = 0.9
COVERAGE_LOG = math.log(10.0 / 9.0)


@dataclass(frozen=True)
class Grouping:
    """A partition of UE ids ``0..n_ues-1`` into non-empty groups."""

    groups: tuple[tuple[int, ...], ...]
    n_ues: int
    label: str = ""

    def __post_init__(self):
        groups = tuple(tuple(int(u) for u in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if not 1 <= len(groups) <= max(self.n_ues, 1):
            raise ValueError(f"need 1..{self.n_ues} groups, got {len(groups)}")
        if any(len(g) == 0 for g in groups):
            raise ValueError("groups must be non-empty")
        members = [u for g in groups for u in g]
        if len(members) != len(set(members)):
            raise ValueError("groups overlap")
        if set(members) != set(range(self.n_ues)):
            raise ValueError(f"groups do not cover UEs 0..{self.n_ues - 1}")

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def group_of(self) -> np.ndarray:
        out = np.empty(self.n_ues, dtype=int)
        for i, g in enumerate(self.groups):
            out[list(g)] = i
        return out


@dataclass(frozen=True)
class CqiThresholds:
    """Average-SNR thresholds ``T(c)``, c = 1..15 (index 0 is c = 1)."""

    t_linear: tuple[float, ...]

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.t_linear)

    def bucket(self, avg_snr_linear: float) -> int:
        """Bucket 1 (best) .. 15 (worst); lower bounds inclusive."""
        # number of thresholds at or below avg = largest c with avg >= T(c)
        c = int(np.searchsorted(self.values, avg_snr_linear, side="right"))
        return N_CQI if c <= 1 else N_CQI + 1 - c


def cqi_thresholds(table: CqiTable) -> CqiThresholds:
    return CqiThresholds(tuple((table.snr_min / COVERAGE_LOG).tolist()))


def _snr_array(avg_snrs: Sequence[AverageChannel]) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([a.ue for a in avg_snrs], dtype=int)
    if sorted(ids.tolist()) != list(range(len(ids))):
        raise ValueError("AverageChannel ids must be 0..M-1")
    return ids, np.array([a.avg_snr_linear for a in avg_snrs], dtype=float)


def group_fixed_size(avg_snrs: Sequence[AverageChannel], k: int) -> Grouping:
    """Sort by average SNR (descending, ties by id) and cut into chunks of ``k``."""
    if k < 1:
        raise ValueError("group size k must be >= 1")
    ids, snr = _snr_array(avg_snrs)
    order = ids[np.lexsort((ids, -snr))]
    chunks = tuple(tuple(order[s:s + k].tolist()) for s in range(0, len(order), k))
    return Grouping(chunks, len(ids), f"fixed{k}")


def group_cqi(avg_snrs: Sequence[AverageChannel], th: CqiThresholds) -> Grouping:
    ids, snr = _snr_array(avg_snrs)
    buckets: dict[int, list[int]] = {}
    for u, s in sorted(zip(ids.tolist(), snr.tolist())):
        buckets.setdefault(th.bucket(s), []).append(u)
    return Grouping(tuple(tuple(buckets[b]) for b in sorted(buckets)), len(ids), "cqi")


def cqi_buckets(avg_snrs: Sequence[AverageChannel], th: CqiThresholds) -> list[int]:
    """Bucket index per UE, in id order."""
    ids, snr = _snr_array(avg_snrs)
    out = [0] * len(ids)
    for u, s in zip(ids.tolist(), snr.tolist()):
        out[u] = th.bucket(s)
    return out


def group_random(m: int, n_groups: int, rng: np.random.Generator) -> Grouping:
    if n_groups < 1:
        raise ValueError("n_groups must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    labels = rng.integers(0, n_groups, size=m)
    groups = tuple(tuple(np.flatnonzero(labels == b).tolist()) for b in range(n_groups))
    return Grouping(tuple(g for g in groups if g), m, f"random{n_groups}")


def group_unicast(m: int) -> Grouping:
    if m < 1:
        raise ValueError("m must be >= 1")
    return Grouping(tuple((u,) for u in range(m)), m, "unicast")


def group_rate_matrix(g: Grouping, ue_rates) -> np.ndarray:
    """Row i = elementwise minimum of the member rows of group i."""
    ue_rates = np.asarray(ue_rates, dtype=float)
    if ue_rates.ndim != 2 or ue_rates.shape[0] != g.n_ues:
        raise ValueError(f"rate matrix has {ue_rates.shape[0] if ue_rates.ndim == 2 else '?'} "
                         f"rows, grouping covers {g.n_ues} UEs")
    return np.stack([ue_rates[list(members)].min(axis=0) for members in g.groups])
