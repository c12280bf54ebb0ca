"""UE placement, link budget and per-PRB rate sampling.

Rate matrices are plain ``(entities, n_prbs)`` float arrays in kbps. Rows are
UEs here; :func:`mcast_lte.grouping.group_rate_matrix` collapses them to groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as _rng

# 3GPP 36.213 CQI spectral efficiencies (b/s/Hz), CQI 1..15
SPECTRAL_EFFICIENCY = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)
PRB_BANDWIDTH_HZ = 180e3
N_CQI = 15


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


@dataclass(frozen=True)
class CqiTable:
    """SNR thresholds and per-PRB rates for CQI 1..15 (index 0 is CQI 1)."""

    snr_min_linear: tuple[float, ...]
    rate_kbps: tuple[float, ...]

    def __post_init__(self):
        snr = tuple(float(v) for v in self.snr_min_linear)
        rate = tuple(float(v) for v in self.rate_kbps)
        object.__setattr__(self, "snr_min_linear", snr)
        object.__setattr__(self, "rate_kbps", rate)
        if len(snr) != N_CQI or len(rate) != N_CQI:
            raise ValueError(f"CQI table needs exactly {N_CQI} thresholds and rates, "
                             f"got {len(snr)} and {len(rate)}")
        if not all(math.isfinite(v) and v > 0 for v in snr):
            raise ValueError("snr_min_linear entries must be finite and positive")
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ValueError("snr_min_linear must be strictly increasing")
        if any(b <= a for a, b in zip(rate, rate[1:])):
            raise ValueError("rate_kbps must be strictly increasing")
        if rate[0] < 16.0:
            raise ValueError("rate_kbps[0] must be at least 16 kbps")

    @classmethod
    def default(cls) -> "CqiTable":
        snr_db = [-6.7 + 2.1 * c for c in range(N_CQI)]
        rates = [round(eff * PRB_BANDWIDTH_HZ / 1e3, 6) for eff in SPECTRAL_EFFICIENCY]
        return cls(tuple(db_to_linear(snr_db).tolist()), tuple(rates))

    @property
    def snr_min(self) -> np.ndarray:
        return np.asarray(self.snr_min_linear)

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.rate_kbps)

    @property
    def rate_levels(self) -> np.ndarray:
        """All values a rate-matrix entry can take: 0 followed by the 15 rates."""
        return np.concatenate([[0.0], self.rates])


@dataclass(frozen=True)
class UEPosition:
    id: int
    distance_km: float
    shadowing_db: float


@dataclass(frozen=True)
class AverageChannel:
    ue: int
    avg_snr_linear: float

    @property
    def avg_snr_db(self) -> float:
        return 10.0 * math.log10(self.avg_snr_linear)


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 46.0
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 5.0
    prb_bandwidth_hz: float = PRB_BANDWIDTH_HZ

    @property
    def noise_dbm(self) -> float:
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.prb_bandwidth_hz) + self.noise_figure_db


def place_ues(count: int, cell_radius_km: float, rng: np.random.Generator,
              shadowing_std_db: float = 10.0) -> list[UEPosition]:
    """Drop ``count`` UEs uniformly over the disk and draw their shadowing."""
    if count < 1:
        raise ValueError("place_ues needs count >= 1")
    if cell_radius_km <= 0:
        raise ValueError("cell_radius_km must be positive")
    # 1 - U lies in (0, 1], so distances stay strictly positive
    u = 1.0 - rng.random(count)
    dist = cell_radius_km * np.sqrt(u)
    shadow = rng.normal(0.0, shadowing_std_db, count)
    return [UEPosition(i, float(d), float(s)) for i, (d, s) in enumerate(zip(dist, shadow))]


def path_loss_db(distance_km: float) -> float:
    if not distance_km > 0:
        raise ValueError(f"distance must be positive, got {distance_km}")
    return 128.1 + 37.6 * math.log10(distance_km)


def average_snr(pos: UEPosition, budget: LinkBudget = LinkBudget()) -> AverageChannel:
    snr_db = budget.tx_power_dbm - path_loss_db(pos.distance_km) - pos.shadowing_db - budget.noise_dbm
    return AverageChannel(pos.id, 10.0 ** (snr_db / 10.0))


def snr_to_cqi(snr_linear, table: CqiTable):
    """Largest CQI whose threshold the SNR reaches; 0 below CQI 1. Vectorised."""
    cqi = np.searchsorted(table.snr_min, np.asarray(snr_linear, dtype=float), side="right")
    return int(cqi) if np.ndim(cqi) == 0 else cqi


def cqi_to_rate(cqi, table: CqiTable):
    c = np.asarray(cqi)
    if np.any((c < 0) | (c > N_CQI)) or not np.issubdtype(c.dtype, np.integer):
        raise ValueError(f"CQI must be an integer in 0..{N_CQI}, got {cqi!r}")
    out = table.rate_levels[c]
    return float(out) if out.ndim == 0 else out


def fading(seed: int, placement: int, subframe: int, ue_ids: Sequence[int], n_prbs: int) -> np.ndarray:
    """Exp(1) power fading per (UE, PRB), keyed on all five indices."""
    ues = np.asarray(ue_ids, dtype=np.uint64)[:, None]
    prbs = np.arange(n_prbs, dtype=np.uint64)[None, :]
    return _rng.keyed_exponential(seed, _rng.TAG_FADING, placement, subframe, ues, prbs)


def sample_subframe_rates(avgs: Sequence[AverageChannel], n_prbs: int, table: CqiTable,
                          seed: int, placement: int = 0, subframe: int = 0) -> np.ndarray:
    """Per-UE per-PRB achievable rates (kbps) for one subframe.

    Instantaneous SNR is ``avg_snr * X`` with ``X ~ Exp(1)`` drawn from a
    counter-based stream keyed on (seed, placement, subframe, ue id, prb), so
    the matrix is reproducible regardless of how subframes are scheduled.
    """
    if n_prbs < 1:
        raise ValueError("n_prbs must be >= 1")
    avg = np.array([a.avg_snr_linear for a in avgs], dtype=float)
    x = fading(seed, placement, subframe, [a.ue for a in avgs], n_prbs)
    return table.rate_levels[snr_to_cqi(avg[:, None] * x, table)]


@dataclass
class Placement:
    """One UE drop with its slow-fading state; shared by all subframes."""

    positions: list[UEPosition]
    channels: list[AverageChannel] = field(default_factory=list)

    @classmethod
    def draw(cls, count: int, cell_radius_km: float, rng: np.random.Generator,
             budget: LinkBudget = LinkBudget(), shadowing_std_db: float = 10.0) -> "Placement":
        pos = place_ues(count, cell_radius_km, rng, shadowing_std_db)
        return cls(pos, [average_snr(p, budget) for p in pos])
