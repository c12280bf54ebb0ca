"""Executable hardness reductions.

* 3-partition -> BLP feasibility: ``m`` groups, one PRB per integer, every
  group sees rate ``rho_k`` on PRB ``k`` and needs rate ``B``.
* SAT -> two-group grouping: UE ``k`` stands for variable ``x_{k+1}``; the
  score of a split (G1, G2) is 3 plus the formula's value under
  ``x = True iff UE in G1``.

Partitions of a 3P instance are given as cells of indices into ``values``
(values may repeat, so index cells are the unambiguous form).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import AllocationState

SAT_BRUTEFORCE_LIMIT = 20


# ---------------------------------------------------------------- 3-partition

@dataclass(frozen=True)
class ThreePartitionInstance:
    values: tuple[int, ...]
    bound: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        problems = self.violations()
        if problems:
            raise ValueError("invalid 3-partition instance: " + "; ".join(problems))

    @property
    def m(self) -> int:
        return len(self.values) // 3

    def violations(self) -> list[str]:
        v, B = self.values, self.bound
        out = []
        if not v or len(v) % 3:
            out.append(f"need 3m values, got {len(v)}")
        if any(x <= 0 for x in v):
            out.append("values must be positive integers")
        if v and sum(v) != (len(v) // 3) * B:
            out.append(f"sum {sum(v)} != m*B = {(len(v) // 3) * B}")
        bad = [x for x in v if not (B < 4 * x and 2 * x < B)]
        if bad:
            out.append(f"values {bad} outside (B/4, B/2)")
        return out


def is_valid_3p(values: Sequence[int], bound: int) -> bool:
    try:
        ThreePartitionInstance(tuple(values), bound)
    except ValueError:
        return False
    return True


def reduce_3p_to_blp(inst: ThreePartitionInstance) -> tuple[np.ndarray, float]:
    """(rates, r_req) with ``m`` identical rows ``(rho_1 .. rho_P)`` and ``r_req = B``."""
    rates = np.tile(np.asarray(inst.values, dtype=float), (inst.m, 1))
    return rates, float(inst.bound)


def extract_3p_solution(state: AllocationState | None,
                        inst: ThreePartitionInstance) -> list[list[int]] | None:
    """Cells ``Y_i = {k : PRB k assigned to group i}``; None passes through."""
    if state is None:
        return None
    if state.n_groups != inst.m or state.n_prbs != len(inst.values):
        raise ValueError("allocation does not match the reduced instance")
    cells = [state.prbs_of(i + 1).tolist() for i in range(inst.m)]
    if not verify_3p(inst, cells):
        raise AssertionError(f"feasible allocation did not map to a 3-partition: {cells}")
    return cells


def verify_3p(inst: ThreePartitionInstance, partition: Iterable[Iterable[int]]) -> bool:
    cells = [list(c) for c in partition]
    flat = [k for c in cells for k in c]
    if len(cells) != inst.m or sorted(flat) != list(range(len(inst.values))):
        return False
    return all(len(c) == 3 and sum(inst.values[k] for k in c) == inst.bound for c in cells)


def solve_3p_bruteforce(inst: ThreePartitionInstance) -> list[list[int]] | None:
    """Backtracking over triples: the lowest unused index always opens a new triple."""
    v, B = inst.values, inst.bound

    def search(remaining: tuple[int, ...]) -> list[list[int]] | None:
        if not remaining:
            return []
        first, rest = remaining[0], remaining[1:]
        for a, b in itertools.combinations(range(len(rest)), 2):
            if v[first] + v[rest[a]] + v[rest[b]] == B:
                left = tuple(k for t, k in enumerate(rest) if t not in (a, b))
                sub = search(left)
                if sub is not None:
                    return [[first, rest[a], rest[b]]] + sub
        return None

    return search(tuple(range(len(v))))


def enumerate_3p_instances(max_m: int = 2, max_value: int = 9) -> list[ThreePartitionInstance]:
    """Every valid instance (as a sorted multiset) with m <= max_m, values <= max_value."""
    out = []
    for m in range(1, max_m + 1):
        for vals in itertools.combinations_with_replacement(range(1, max_value + 1), 3 * m):
            if sum(vals) % m:
                continue
            B = sum(vals) // m
            if is_valid_3p(vals, B):
                out.append(ThreePartitionInstance(vals, B))
    return out


# ------------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Var:
    index: int  # 1-based

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        return bool(assignment[self.index - 1])

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Not:
    child: "Formula"

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        return not self.child.evaluate(assignment)

    def __str__(self):
        return f"(not {self.child})"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        return all(c.evaluate(assignment) for c in self.children)

    def __str__(self):
        return "(and " + " ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        return any(c.evaluate(assignment) for c in self.children)

    def __str__(self):
        return "(or " + " ".join(map(str, self.children)) + ")"


Formula = Var | Not | And | Or if hasattr(type, "__or__") else object


def _variables(f) -> set[int]:
    if isinstance(f, Var):
        return {f.index}
    if isinstance(f, Not):
        return _variables(f.child)
    return set().union(*(_variables(c) for c in f.children))


@dataclass(frozen=True)
class BooleanFormula:
    n_vars: int
    expr: object

    def __post_init__(self):
        bad = [i for i in _variables(self.expr) if not 1 <= i <= self.n_vars]
        if bad:
            raise ValueError(f"variables {sorted(bad)} outside x1..x{self.n_vars}")

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        if len(assignment) != self.n_vars:
            raise ValueError(f"need {self.n_vars} truth values, got {len(assignment)}")
        return self.expr.evaluate(assignment)

    def __str__(self):
        return str(self.expr)


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_formula(text: str, n_vars: int | None = None) -> BooleanFormula:
    """Parse prefix notation, e.g. ``(and x1 (or (not x2) x3))``.

    ``n_vars`` defaults to the largest variable index that occurs.
    """
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ValueError("empty formula")
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of formula")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise ValueError("unexpected end of formula")
            op = tokens[pos].lower()
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if pos >= len(tokens):
                raise ValueError("missing ')'")
            pos += 1
            if op == "not":
                if len(args) != 1:
                    raise ValueError("'not' takes exactly one argument")
                return Not(args[0])
            if op in ("and", "or"):
                if not args:
                    raise ValueError(f"'{op}' needs at least one argument")
                return (And if op == "and" else Or)(tuple(args))
            raise ValueError(f"unknown operator {op!r}")
        m = re.fullmatch(r"[xX](\d+)", tok)
        if not m or int(m.group(1)) < 1:
            raise ValueError(f"bad token {tok!r}")
        return Var(int(m.group(1)))

    expr = parse()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens after formula: {' '.join(tokens[pos:])}")
    if n_vars is None:
        n_vars = max(_variables(expr))
    return BooleanFormula(n_vars, expr)


def random_formula(n_vars: int, rng: np.random.Generator, depth: int = 3) -> BooleanFormula:
    def build(d: int):
        if d == 0 or rng.random() < 0.25:
            leaf = Var(int(rng.integers(1, n_vars + 1)))
            return Not(leaf) if rng.random() < 0.5 else leaf
        kind = rng.integers(3)
        if kind == 0:
            return Not(build(d - 1))
        kids = tuple(build(d - 1) for _ in range(int(rng.integers(2, 4))))
        return And(kids) if kind == 1 else Or(kids)

    return BooleanFormula(n_vars, build(depth))


def sat_bruteforce(f: BooleanFormula) -> tuple[bool, ...] | None:
    """First satisfying assignment in truth-table order, or None."""
    for bits in itertools.product((False, True), repeat=f.n_vars):
        if f.evaluate(bits):
            return bits
    return None


# ------------------------------------------------------------ SAT -> grouping

@dataclass(frozen=True)
class GroupingInstance2:
    n_ues: int
    formula: BooleanFormula

    def score(self, g1: Iterable[int], g2: Iterable[int]) -> int:
        """3 + [formula true under x_k = (UE k-1 in g1)]; empty sides allowed."""
        g1, g2 = set(g1), set(g2)
        if g1 & g2 or (g1 | g2) != set(range(self.n_ues)):
            raise ValueError("(G1, G2) must partition the UEs 0..M-1")
        assignment = [u in g1 for u in range(self.n_ues)]
        return 3 + int(self.formula.evaluate(assignment))


def reduce_sat_to_grouping(f: BooleanFormula) -> GroupingInstance2:
    return GroupingInstance2(f.n_vars, f)


def solve_grouping2_bruteforce(inst: GroupingInstance2) -> tuple[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    if inst.n_ues > SAT_BRUTEFORCE_LIMIT:
        raise ValueError(f"2^{inst.n_ues} splits exceed the brute-force limit")
    best, witness = -1, ((), ())
    for mask in range(1 << inst.n_ues):
        g1 = tuple(u for u in range(inst.n_ues) if mask >> u & 1)
        g2 = tuple(u for u in range(inst.n_ues) if not mask >> u & 1)
        value = inst.score(g1, g2)
        if value > best:
            best, witness = value, (g1, g2)
            if best == 4:
                break
    return best, witness


def extract_sat_assignment(inst: GroupingInstance2, value: int,
                           witness: tuple[Sequence[int], Sequence[int]]) -> tuple[bool, ...] | None:
    """Truth assignment from the optimal split; None means unsatisfiable."""
    if value == 3:
        return None
    if value != 4:
        raise ValueError(f"score {value} is not a SAT-derived value")
    g1 = set(witness[0])
    assignment = tuple(u in g1 for u in range(inst.n_ues))
    if not inst.formula.evaluate(assignment):
        raise AssertionError("extracted assignment does not satisfy the formula")
    return assignment
