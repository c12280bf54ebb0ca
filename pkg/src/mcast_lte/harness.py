"""Scenario runner: placements x subframes x one (grouping, allocator) scheme.

Every random draw is keyed on the master seed plus the placement (and
subframe) index, so results do not depend on how placements are spread over
worker processes.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import rng as _rng
from .annealing import AnnealParams, anneal
from .channel import CqiTable, Placement, sample_subframe_rates
from .config import ScenarioConfig
from .core import AllocationState, evaluate, obviously_infeasible, satisfied
from .exact import solve_blp_exact
from .grouping import (Grouping, cqi_thresholds, group_cqi, group_fixed_size, group_random,
                       group_rate_matrix, group_unicast)
from .heuristics import allocate_greedy, allocate_lp

WORKERS_ENV = "MCAST_WORKERS"
RS_TIMING_ITERS = 2000


@dataclass(frozen=True)
class MetricsRecord:
    placement: int
    subframe: int
    scheme: str
    grouping: str
    n_ues: int
    n_groups: int
    used_prbs: int
    unused_prbs: int
    feasible: bool
    group_rates_kbps: tuple[float, ...]
    wall_time_us: float | None = None


CSV_COLUMNS = [f.name for f in fields(MetricsRecord)]


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return workers


def build_grouping(cfg: ScenarioConfig, placement: Placement, index: int,
                   table: CqiTable | None = None) -> Grouping:
    g = cfg.grouping
    if g.scheme == "fixed":
        return group_fixed_size(placement.channels, g.k)
    if g.scheme == "cqi":
        return group_cqi(placement.channels, cqi_thresholds(table or cfg.table()))
    if g.scheme == "random":
        return group_random(cfg.n_ues, g.n_groups, _rng.stream(cfg.seed, _rng.TAG_GROUPING, index))
    return group_unicast(cfg.n_ues)


def draw_placement(cfg: ScenarioConfig, index: int, count: int | None = None) -> Placement:
    return Placement.draw(count or cfg.n_ues, cfg.cell_radius_km,
                          _rng.stream(cfg.seed, _rng.TAG_PLACEMENT, index),
                          cfg.link_budget(), cfg.shadowing_std_db)


def allocate(cfg: ScenarioConfig, rates: np.ndarray, placement: int = 0,
             subframe: int = 0) -> AllocationState | None:
    """Run the configured allocator; None means the subframe is infeasible."""
    a, r_req = cfg.allocator, cfg.r_req_kbps
    if obviously_infeasible(rates, r_req):
        return None
    if a.kind == "greedy":
        return allocate_greedy(rates, r_req)
    if a.kind == "lp":
        return allocate_lp(rates, r_req, a.lp_method)
    if a.kind == "sa":
        seed = int(_rng.keyed_bits(cfg.seed, _rng.TAG_ANNEAL, placement, subframe))
        res = anneal(rates, r_req, AnnealParams(a.sa_iters, seed, record_trace=False))
        return res.best_state if res.feasible else None
    res = solve_blp_exact(rates, r_req, budget=a.exact_budget, lp_method=a.lp_method)
    return res.witness


def _record(cfg: ScenarioConfig, grouping: Grouping, p: int, t: int,
            state: AllocationState | None, rates: np.ndarray, elapsed_us: float) -> MetricsRecord:
    L, N = rates.shape
    if state is None:
        # an infeasible subframe saves nothing: the whole band stays committed
        used, unused, ok, ell = N, 0, False, (0.0,) * L
    else:
        rep = evaluate(state, rates, cfg.r_req_kbps)
        used, unused, ok, ell = rep.used_prbs, rep.unused_prbs, rep.feasible, rep.group_rates_kbps
    return MetricsRecord(p, t, cfg.allocator.kind, grouping.label, cfg.n_ues, L,
                         used, unused, ok, tuple(ell), elapsed_us)


def run_placement(cfg: ScenarioConfig, p: int) -> list[MetricsRecord]:
    table = cfg.table()
    place = draw_placement(cfg, p)
    grouping = build_grouping(cfg, place, p, table)
    out = []
    for t in range(cfg.n_subframes):
        ue_rates = sample_subframe_rates(place.channels, cfg.n_prbs, table, cfg.seed, p, t)
        rates = group_rate_matrix(grouping, ue_rates)
        t0 = time.perf_counter_ns()
        state = allocate(cfg, rates, p, t)
        elapsed = (time.perf_counter_ns() - t0) / 1e3
        out.append(_record(cfg, grouping, p, t, state, rates, elapsed))
    return out


def _run_placement_job(args) -> list[MetricsRecord]:
    return run_placement(*args)


def iter_scenario(cfg: ScenarioConfig, workers: int | None = None) -> Iterator[MetricsRecord]:
    """Records in (placement, subframe) order whatever the worker count."""
    workers = resolve_workers(workers)
    jobs = [(cfg, p) for p in range(cfg.n_placements)]
    if workers == 1 or cfg.n_placements == 1:
        for job in jobs:
            yield from _run_placement_job(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for recs in pool.map(_run_placement_job, jobs):
            yield from recs


def run_scenario(cfg: ScenarioConfig, workers: int | None = None) -> list[MetricsRecord]:
    return list(iter_scenario(cfg, workers))


# -------------------------------------------------------------------- CSV I/O

def _format_rates(values: Sequence[float]) -> str:
    return ";".join(repr(float(v)) for v in values)


def write_csv(records: Iterable[MetricsRecord], path: str | Path, timing: bool = False) -> Path:
    """Write records with a fixed column order; ``wall_time_us`` only if ``timing``.

    Timing is off by default so that repeated runs give byte-identical files.
    """
    path = Path(path)
    cols = CSV_COLUMNS if timing else CSV_COLUMNS[:-1]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in records:
                row = list(astuple(r))
                row[CSV_COLUMNS.index("feasible")] = int(r.feasible)
                row[CSV_COLUMNS.index("group_rates_kbps")] = _format_rates(r.group_rates_kbps)
                if timing:
                    row[-1] = f"{r.wall_time_us:.3f}" if r.wall_time_us is not None else ""
                w.writerow(row[:len(cols)])
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror}") from err
    return path


def read_csv(path: str | Path) -> list[MetricsRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        rates = row["group_rates_kbps"]
        wt = row.get("wall_time_us")
        out.append(MetricsRecord(
            int(row["placement"]), int(row["subframe"]), row["scheme"], row["grouping"],
            int(row["n_ues"]), int(row["n_groups"]), int(row["used_prbs"]), int(row["unused_prbs"]),
            row["feasible"] == "1",
            tuple(float(v) for v in rates.split(";")) if rates else (),
            float(wt) if wt else None,
        ))
    return out


@dataclass(frozen=True)
class Summary:
    n_ues: int
    scheme: str
    grouping: str
    mean_unused: float
    infeasible: int
    subframes: int
    placements: int

    @property
    def infeasible_per_placement(self) -> float:
        """Average infeasible-subframe count out of ``subframes / placements``."""
        return self.infeasible / self.placements


def summarize(records: Sequence[MetricsRecord]) -> Summary:
    if not records:
        raise ValueError("no records to summarize")
    unused = [r.unused_prbs for r in records]
    first = records[0]
    return Summary(first.n_ues, first.scheme, first.grouping, float(np.mean(unused)),
                   sum(not r.feasible for r in records), len(records),
                   len({r.placement for r in records}))


SUMMARY_COLUMNS = ["n_ues", "scheme", "grouping", "mean_unused", "infeasible",
                   "infeasible_per_placement", "subframes", "placements"]


def write_summary(rows: Iterable[Summary], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in rows:
            w.writerow([s.n_ues, s.scheme, s.grouping, repr(s.mean_unused), s.infeasible,
                        repr(s.infeasible_per_placement), s.subframes, s.placements])
    return path


# -------------------------------------------------------- proportional fair

def pf_allocate(rates, history, reserved=None, epsilon: float = 1.0) -> AllocationState:
    """Give each non-reserved PRB to ``argmax_u rate / max(epsilon, history_u)``.

    ``rates`` is (U, N); the returned state numbers UEs 1..U. PRBs where every
    UE has zero rate stay unused.
    """
    rates = np.asarray(rates, dtype=float)
    U, N = rates.shape
    metric = rates / np.maximum(epsilon, np.asarray(history, dtype=float))[:, None]
    owner = np.argmax(metric, axis=0) + 1
    owner[rates.max(axis=0) <= 0] = 0
    if reserved is not None:
        mask = np.zeros(N, dtype=bool)
        mask[np.asarray(sorted(reserved) if isinstance(reserved, (set, frozenset)) else reserved,
                        dtype=np.int64)] = True
        owner[mask] = 0
    return AllocationState(owner, U)


def pf_update(history, served, window: float = 100.0) -> np.ndarray:
    a = 1.0 / window
    return (1.0 - a) * np.asarray(history, dtype=float) + a * np.asarray(served, dtype=float)


@dataclass(frozen=True)
class PfRecord:
    placement: int
    subframe: int
    arm: str
    multicast_throughput_kbps: float
    unicast_throughput_kbps: float
    multicast_satisfied: bool
    multicast_feasible_alloc: bool
    reserved_prbs: int


PF_COLUMNS = [f.name for f in fields(PfRecord)]


def _served(state: AllocationState, rates: np.ndarray) -> np.ndarray:
    cols = np.flatnonzero(state.owner)
    return np.bincount(state.owner[cols] - 1, weights=rates[state.owner[cols] - 1, cols],
                       minlength=state.n_groups)


def run_pf_placement(cfg: ScenarioConfig, p: int) -> list[PfRecord]:
    table = cfg.table()
    M, U = cfg.n_ues, cfg.pf.n_unicast_ues
    place = draw_placement(cfg, p, M + U)
    mc = Placement(place.positions[:M], place.channels[:M])
    grouping = build_grouping(cfg, mc, p, table)
    eps, win, r_req = cfg.pf.epsilon, cfg.pf.window, cfg.r_req_kbps
    hist_a = np.full(U, eps)
    hist_b = np.full(M + U, eps)
    out = []
    for t in range(cfg.n_subframes):
        ue_rates = sample_subframe_rates(place.channels, cfg.n_prbs, table, cfg.seed, p, t)
        mc_rates, uc_rates = ue_rates[:M], ue_rates[M:]

        # arm A: multicast allocator first, PF on the leftover PRBs
        g_rates = group_rate_matrix(grouping, mc_rates)
        state = allocate(cfg, g_rates, p, t)
        reserved = np.flatnonzero(state.owner) if state is not None else np.array([], dtype=np.int64)
        mc_tp = 0.0
        if state is not None:
            per_group = _served(state, g_rates)
            mc_tp = float(sum(per_group[i] * len(g) for i, g in enumerate(grouping.groups)))
        uc_tp = 0.0
        if U:
            pf = pf_allocate(uc_rates, hist_a, reserved, eps)
            served = _served(pf, uc_rates)
            hist_a = pf_update(hist_a, served, win)
            uc_tp = float(served.sum())
        out.append(PfRecord(p, t, "lp-then-pf", mc_tp, uc_tp, state is not None,
                            state is not None, int(reserved.size)))

        # arm B: PF over every UE, multicast UEs as independent unicast flows
        pf = pf_allocate(ue_rates, hist_b, None, eps)
        served = _served(pf, ue_rates)
        hist_b = pf_update(hist_b, served, win)
        out.append(PfRecord(p, t, "pure-pf", float(served[:M].sum()), float(served[M:].sum()),
                            bool(satisfied(served[:M], r_req).all()), False, 0))
    return out


def _run_pf_job(args) -> list[PfRecord]:
    return run_pf_placement(*args)


def run_pf_comparison(cfg: ScenarioConfig, workers: int | None = None) -> list[PfRecord]:
    workers = resolve_workers(workers)
    jobs = [(cfg, p) for p in range(cfg.n_placements)]
    if workers == 1:
        return [r for job in jobs for r in _run_pf_job(job)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for recs in pool.map(_run_pf_job, jobs) for r in recs]


def write_pf_csv(records: Iterable[PfRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PF_COLUMNS)
        for r in records:
            w.writerow([r.placement, r.subframe, r.arm, repr(r.multicast_throughput_kbps),
                        repr(r.unicast_throughput_kbps), int(r.multicast_satisfied),
                        int(r.multicast_feasible_alloc), r.reserved_prbs])
    return path


# ---------------------------------------------------------- RS vs LP timing

@dataclass(frozen=True)
class TimingPoint:
    n_ues: int
    rs_seconds: float
    lp_seconds: float

    @property
    def ratio(self) -> float:
        return self.rs_seconds / self.lp_seconds


def time_rs_vs_lp(cfg: ScenarioConfig, n_draws: int = 10, rs_iters: int = RS_TIMING_ITERS) -> TimingPoint:
    """Mean per-subframe wall time of RS (``rs_iters`` steps) and of LP rounding.

    Both allocators see the same group-rate matrices; the LP time covers the
    relaxation plus rounding.
    """
    table = cfg.table()
    rs_t, lp_t = [], []
    for d in range(n_draws):
        place = draw_placement(cfg, d)
        grouping = build_grouping(cfg, place, d, table)
        rates = group_rate_matrix(grouping, sample_subframe_rates(
            place.channels, cfg.n_prbs, table, cfg.seed, d, 0))
        t0 = time.perf_counter()
        allocate_lp(rates, cfg.r_req_kbps, cfg.allocator.lp_method)
        t1 = time.perf_counter()
        anneal(rates, cfg.r_req_kbps, AnnealParams(rs_iters, seed=d, record_trace=False))
        t2 = time.perf_counter()
        lp_t.append(t1 - t0)
        rs_t.append(t2 - t1)
    return TimingPoint(cfg.n_ues, float(np.mean(rs_t)), float(np.mean(lp_t)))
