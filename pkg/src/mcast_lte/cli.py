"""``mcast-lte`` command line.

Subcommands: run, sweep, pf, exact, reduce3p, reducesat, validate.
Errors print one line to stderr and exit with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import harness
from .config import ConfigError, ScenarioConfig, dumps_config, load_config, with_overrides
from .exact import BudgetExceeded, solve_blp_exact
from .reductions import (ThreePartitionInstance, extract_sat_assignment, parse_formula,
                         reduce_3p_to_blp, reduce_sat_to_grouping, solve_grouping2_bruteforce)

GROUPINGS = ("fixed", "cqi", "random", "unicast")
ALLOCATORS = ("greedy", "lp", "sa", "exact")


class CliError(Exception):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"10,20,...,100"`` or ``"10,20,30"``; result must be non-empty and ascending."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        if "..." in parts:
            k = parts.index("...")
            if k < 2 or k != len(parts) - 2:
                raise ValueError
            head = [int(p) for p in parts[:k]]
            step, stop = head[-1] - head[-2], int(parts[-1])
            if step <= 0:
                raise ValueError
            values = head[:-1] + list(range(head[-1], stop + 1, step))
        else:
            values = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not values or any(b <= a for a, b in zip(values, values[1:])) or values[0] < 1:
        raise argparse.ArgumentTypeError(f"list must be non-empty, positive and ascending: {text!r}")
    return values


def _choice_list(allowed: Sequence[str]):
    def parse(text: str) -> list[str]:
        items = [p.strip() for p in text.split(",") if p.strip()]
        bad = [i for i in items if i not in allowed]
        if not items or bad:
            raise argparse.ArgumentTypeError(f"expected a comma list from {', '.join(allowed)}")
        return items
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcast-lte", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_flags(sp, out_required=True):
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", required=out_required, type=Path)
        sp.add_argument("--seed", type=int, help="override the config's master seed")
        sp.add_argument("--workers", type=int,
                        help=f"worker processes (default ${harness.WORKERS_ENV} or 1)")
        sp.add_argument("--sa-iters", type=int, help="override allocator.sa_iters")

    sp = sub.add_parser("run", help="run one scenario and write its CSV")
    scenario_flags(sp)
    sp.add_argument("--timing", action="store_true", help="add the wall_time_us column")

    sp = sub.add_parser("sweep", help="one scenario per UE count and scheme, plus summary.csv")
    scenario_flags(sp)
    sp.add_argument("--m", required=True, type=parse_int_list, help="UE counts, e.g. 10,20,...,100")
    sp.add_argument("--groupings", type=_choice_list(GROUPINGS))
    sp.add_argument("--allocators", type=_choice_list(ALLOCATORS))
    sp.add_argument("--timing", action="store_true")

    sp = sub.add_parser("pf", help="LP-then-PF versus pure PF comparison")
    scenario_flags(sp)

    sp = sub.add_parser("exact", help="solve a rate-matrix instance exactly")
    sp.add_argument("--instance", required=True, type=Path)
    sp.add_argument("--budget", type=int, default=10**7)

    sp = sub.add_parser("reduce3p", help="reduce a 3-partition instance to an allocation instance")
    sp.add_argument("--in", dest="inp", required=True, type=Path)
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--solve", action="store_true", help="also solve and print the partition")

    sp = sub.add_parser("reducesat", help="decide formulas through the two-group grouping reduction")
    sp.add_argument("--in", dest="inp", required=True, type=Path)

    sp = sub.add_parser("validate", help="check a config file and print its normalised form")
    sp.add_argument("--config", required=True, type=Path)
    return p


@dataclass
class Command:
    name: str
    args: argparse.Namespace


def parse_args(argv: Sequence[str] | None = None) -> Command:
    ns = build_parser().parse_args(argv)
    return Command(ns.command, ns)


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except OSError as err:
        raise CliError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise CliError(f"{path}: invalid JSON ({err})") from None


def _scenario(a) -> ScenarioConfig:
    cfg = load_config(a.config)
    return with_overrides(cfg, seed=a.seed, allocator__sa_iters=a.sa_iters)


def _run(a) -> int:
    cfg = _scenario(a)
    path = harness.write_csv(harness.iter_scenario(cfg, a.workers),
                             a.out / "metrics.csv", timing=a.timing)
    s = harness.summarize(harness.read_csv(path))
    print(f"{path}: mean unused {s.mean_unused:.3f}, infeasible {s.infeasible}/{s.subframes}")
    return 0


def _sweep(a) -> int:
    cfg = _scenario(a)
    groupings = a.groupings or [cfg.grouping.scheme]
    allocators = a.allocators or [cfg.allocator.kind]
    rows = []
    for m in a.m:
        for g in groupings:
            for alloc in allocators:
                c = with_overrides(cfg, n_ues=m, grouping__scheme=g, allocator__kind=alloc)
                recs = harness.run_scenario(c, a.workers)
                harness.write_csv(recs, a.out / f"M{m}_{g}_{alloc}.csv", timing=a.timing)
                s = harness.summarize(recs)
                rows.append(s)
                print(f"M={m:<4} {g:<8} {alloc:<7} mean unused {s.mean_unused:8.3f}  "
                      f"infeasible {s.infeasible}/{s.subframes}")
    harness.write_summary(rows, a.out / "summary.csv")
    return 0


def _pf(a) -> int:
    cfg = _scenario(a)
    recs = harness.run_pf_comparison(cfg, a.workers)
    harness.write_pf_csv(recs, a.out / "pf.csv")
    for arm in ("lp-then-pf", "pure-pf"):
        rs = [r for r in recs if r.arm == arm]
        print(f"{arm:<11} multicast {np.mean([r.multicast_throughput_kbps for r in rs]):10.1f} kbps  "
              f"unicast {np.mean([r.unicast_throughput_kbps for r in rs]):10.1f} kbps  "
              f"multicast met {sum(r.multicast_satisfied for r in rs)}/{len(rs)}")
    return 0


def _exact(a) -> int:
    data = _read_json(a.instance)
    try:
        rates = np.asarray(data["rates"], dtype=float)
        r_req = float(data["r_req"])
    except (KeyError, TypeError, ValueError) as err:
        raise CliError(f"{a.instance}: need 'rates' (L x N list) and 'r_req' ({err})") from None
    if rates.ndim != 2 or r_req <= 0 or (rates < 0).any():
        raise CliError(f"{a.instance}: 'rates' must be a non-negative 2-D list and 'r_req' > 0")
    try:
        res = solve_blp_exact(rates, r_req, budget=a.budget)
    except BudgetExceeded as err:
        raise CliError(str(err)) from None
    if not res.feasible:
        print("infeasible")
    else:
        print(f"optimum {res.optimum_used_prbs}")
        print("owner " + " ".join(map(str, res.witness.owner.tolist())))
    return 0


def _reduce3p(a) -> int:
    data = _read_json(a.inp)
    try:
        inst = ThreePartitionInstance(tuple(data["values"]), int(data["bound"]))
    except (KeyError, TypeError) as err:
        raise CliError(f"{a.inp}: need 'values' and 'bound' ({err})") from None
    except ValueError as err:
        raise CliError(f"{a.inp}: {err}") from None
    rates, r_req = reduce_3p_to_blp(inst)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    a.out.write_text(json.dumps({"rates": rates.tolist(), "r_req": r_req}) + "\n")
    print(f"L={rates.shape[0]} N={rates.shape[1]} R={r_req:g} -> {a.out}")
    if a.solve:
        from .reductions import extract_3p_solution
        res = solve_blp_exact(rates, r_req)
        cells = extract_3p_solution(res.witness, inst)
        print("infeasible" if cells is None else
              "partition " + " | ".join(" ".join(str(inst.values[k]) for k in c) for c in cells))
    return 0


def _reducesat(a) -> int:
    data = _read_json(a.inp)
    items = data if isinstance(data, list) else [data]
    for item in items:
        if isinstance(item, str):
            item = {"formula": item}
        try:
            f = parse_formula(item["formula"], item.get("n_vars"))
        except (KeyError, TypeError, AttributeError):
            raise CliError(f"{a.inp}: each entry needs a 'formula' string") from None
        except ValueError as err:
            raise CliError(f"{a.inp}: {err}") from None
        inst = reduce_sat_to_grouping(f)
        value, witness = solve_grouping2_bruteforce(inst)
        assignment = extract_sat_assignment(inst, value, witness)
        verdict = "UNSAT" if assignment is None else \
            "SAT " + " ".join(f"x{k + 1}={'T' if v else 'F'}" for k, v in enumerate(assignment))
        print(f"{f}  f_S={value}  {verdict}")
    return 0


def _validate(a) -> int:
    cfg = load_config(a.config)
    sys.stdout.write(dumps_config(cfg))
    return 0


_HANDLERS = {"run": _run, "sweep": _sweep, "pf": _pf, "exact": _exact,
             "reduce3p": _reduce3p, "reducesat": _reducesat, "validate": _validate}


def dispatch(cmd: Command) -> int:
    try:
        return _HANDLERS[cmd.name](cmd.args)
    except (CliError, ConfigError, OSError, ValueError) as err:
        print(f"mcast-lte {cmd.name}: error: {err}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    return dispatch(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
