"""Pressing-count subproblem: given template contents, choose how often to
press each template so production best matches demand.

A design is scored by the lexicographic pair (violation, waste): violation is
the number of units produced outside the tolerance bands and waste the sum of
under- and over-production. Feasible designs are those with zero violation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .encoding import (
    AlternativeGenotype,
    ClassicalGenotype,
    Genotype,
    check_genotype,
)
from .errors import BudgetError, BudgetExhausted, InvalidGenotype, InvalidPressings
from .instance import ProblemInstance

DEFAULT_GRID_LIMIT = 10**8


class Fitness(NamedTuple):
    violation: int
    waste: int

    @property
    def feasible(self) -> bool:
        return self.violation == 0


WORST_FITNESS = Fitness(math.inf, math.inf)


@dataclass(frozen=True)
class PressingPlan:
    pressings: tuple[int, ...]
    production: tuple[int, ...]
    under: tuple[int, ...]
    over: tuple[int, ...]
    waste: int
    violation: int
    feasible: bool

    @property
    def fitness(self) -> Fitness:
        return Fitness(self.violation, self.waste)

    def deviations(self, inst: ProblemInstance) -> list[int]:
        return [p - q for p, q in zip(self.production, inst.demands)]

    def deviation_percentages(self, inst: ProblemInstance) -> list[float]:
        return [100.0 * (p - q) / q for p, q in zip(self.production, inst.demands)]

    def overall_deviation(self, inst: ProblemInstance) -> float:
        """Waste as a percentage of total demand."""
        return 100.0 * self.waste / inst.total_demand

    def to_dict(self) -> dict:
        return {
            "pressings": list(self.pressings),
            "production": list(self.production),
            "under": list(self.under),
            "over": list(self.over),
            "waste": self.waste,
            "violation": self.violation,
            "feasible": self.feasible,
        }


class _Arrays:
    """int64 views of an instance, cached per instance object."""

    _cache: dict = {}

    @classmethod
    def of(cls, inst: ProblemInstance):
        key = id(inst)
        hit = cls._cache.get(key)
        if hit is not None and hit[0] is inst:
            return hit[1]
        lo, hi = inst.bands()
        arrays = (
            np.asarray(inst.demands, dtype=np.int64),
            np.asarray(lo, dtype=np.int64),
            np.asarray(hi, dtype=np.int64),
        )
        cls._cache[key] = (inst, arrays)
        return arrays


def _counts(inst: ProblemInstance, g: Genotype, check: bool = True) -> np.ndarray:
    if check:
        check_genotype(g, inst)
    if isinstance(g, AlternativeGenotype):
        return _kernels.slot_counts(g.matrix, inst.v)
    if isinstance(g, ClassicalGenotype):
        return g.matrix
    raise InvalidGenotype(f"not a genotype: {g!r}")


def evaluate_with_pressings(inst: ProblemInstance, g: Genotype, pressings: Sequence[int]) -> PressingPlan:
    S = _counts(inst, g)
    if len(pressings) != S.shape[1]:
        raise InvalidPressings(f"expected {S.shape[1]} pressing counts, got {len(pressings)}")
    R = [int(r) for r in pressings]
    if any(r < 0 for r in R):
        raise InvalidPressings(f"pressing counts must be non-negative, got {R}")
    lo, hi = inst.bands()
    production, under, over = [], [], []
    violation = 0
    for i in range(inst.v):
        p = sum(int(S[i, j]) * R[j] for j in range(len(R)))
        q = inst.demands[i]
        production.append(p)
        under.append(max(0, q - p))
        over.append(max(0, p - q))
        violation += max(0, lo[i] - p, p - hi[i])
    waste = sum(under) + sum(over)
    return PressingPlan(
        pressings=tuple(R),
        production=tuple(production),
        under=tuple(under),
        over=tuple(over),
        waste=waste,
        violation=violation,
        feasible=violation == 0,
    )


def _solve(inst: ProblemInstance, S: np.ndarray):
    Q, lo, hi = _Arrays.of(inst)
    R, viol, waste = _kernels.solve_pressings(np.ascontiguousarray(S, dtype=np.int64), Q, lo, hi)
    return R, Fitness(int(viol), int(waste))


def optimize_pressings(inst: ProblemInstance, g: Genotype) -> PressingPlan:
    """Best integer pressing counts for a fixed design.

    A vertex walk over the arrangement of demand and band-edge hyperplanes
    finds the continuous optimum; its integer roundings seed a box search.
    """
    S = _counts(inst, g)
    R, _ = _solve(inst, S)
    return evaluate_with_pressings(inst, g, R.tolist())


def fitness(inst: ProblemInstance, g: Genotype) -> Fitness:
    return _solve(inst, _counts(inst, g))[1]


def brute_force_pressings(
    inst: ProblemInstance,
    g: Genotype,
    bounds: Sequence[tuple[int, int]],
    max_points: int = DEFAULT_GRID_LIMIT,
) -> PressingPlan:
    """Exhaustive minimum over the inclusive integer box ``bounds`` (test oracle)."""
    S = _counts(inst, g)
    if len(bounds) != S.shape[1]:
        raise InvalidPressings(f"expected {S.shape[1]} ranges, got {len(bounds)}")
    size = 1
    for a, b in bounds:
        if a < 0 or b < a:
            raise BudgetError(f"empty or negative range {(a, b)}")
        size *= b - a + 1
    if size > max_points:
        raise BudgetError(f"grid of {size} points exceeds the limit of {max_points}")
    Q, lo, hi = _Arrays.of(inst)
    lows = np.array([a for a, _ in bounds], dtype=np.int64)
    highs = np.array([b for _, b in bounds], dtype=np.int64)
    R, _, _ = _kernels.brute_force(np.ascontiguousarray(S, dtype=np.int64), Q, lo, hi, lows, highs)
    return evaluate_with_pressings(inst, g, R.tolist())


def _solve_rational(rows: list[list[int]], rhs: list[int]) -> Optional[list[Fraction]]:
    n = len(rows)
    m = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def vertex_enumeration_pressings(inst: ProblemInstance, g: Genotype) -> PressingPlan:
    """Reference bound: intersect every t-subset of exact-demand hyperplanes
    over the rationals and keep the best integer rounding (floor/ceil plus a
    +-1 neighbourhood), together with single-template candidates
    ``round(Q_i / s_ij)``. Slow; used to check :func:`optimize_pressings`."""
    S = _counts(inst, g).tolist()
    t = len(S[0])
    Q, lo, hi = _Arrays.of(inst)
    Sa = np.asarray(S, dtype=np.int64)
    best_R = np.zeros(t, dtype=np.int64)
    best = _kernels.int_cost(Sa, Q, lo, hi, best_R)

    def consider(R):
        nonlocal best, best_R
        R = np.asarray(R, dtype=np.int64)
        if (R < 0).any():
            return
        c = _kernels.int_cost(Sa, Q, lo, hi, R)
        if c < best:
            best, best_R = c, R

    for subset in itertools.combinations(range(inst.v), t):
        sol = _solve_rational([S[i] for i in subset], [inst.demands[i] for i in subset])
        if sol is None or any(x < 0 for x in sol):
            continue
        base = [math.floor(x) for x in sol]
        for offsets in itertools.product((-1, 0, 1, 2), repeat=t):
            consider([b + o for b, o in zip(base, offsets)])
    for i in range(inst.v):
        for j in range(t):
            if S[i][j] > 0:
                R = [0] * t
                R[j] = int(Fraction(inst.demands[i], S[i][j]) + Fraction(1, 2))
                consider(R)
    return evaluate_with_pressings(inst, g, best_R.tolist())


class Evaluator:
    """Counts fitness evaluations against a budget and tracks the best design seen.

    ``limit`` may be raised with :meth:`grant` so a search can be resumed in
    slices (cooperative cycles). Asking for an evaluation past the limit
    raises :class:`BudgetExhausted`.

    Scores are memoised by slot-count matrix. A repeated design still costs
    one evaluation; the cache only saves compute.
    """

    CACHE_SIZE = 1 << 14

    def __init__(self, inst: ProblemInstance, budget: Optional[int] = None):
        self.inst = inst
        self.limit = budget
        self.evals = 0
        self.best: Optional[Genotype] = None
        self.best_fitness: Fitness = WORST_FITNESS
        self._arrays = _Arrays.of(inst)
        self._v = inst.v
        self._cache: dict = {}

    @property
    def remaining(self) -> float:
        return math.inf if self.limit is None else self.limit - self.evals

    def grant(self, n: int) -> None:
        self.limit = (self.evals if self.limit is None else self.limit) + n

    def _charge(self):
        if self.limit is not None and self.evals >= self.limit:
            raise BudgetExhausted(f"evaluation budget of {self.limit} spent")
        self.evals += 1

    def __call__(self, g: Genotype) -> Fitness:
        self._charge()
        if g.model == "D":
            S = _kernels.slot_counts(g.matrix, self._v)
        else:
            S = g.matrix
        f = self._score(S)
        if f < self.best_fitness:
            self.best_fitness = f
            self.best = g
        return f

    def partial(self, counts: np.ndarray) -> Fitness:
        """Score a design whose missing templates are never pressed."""
        self._charge()
        return self._score(np.ascontiguousarray(counts, dtype=np.int64))

    def _score(self, S: np.ndarray) -> Fitness:
        key = S.tobytes()
        f = self._cache.get(key)
        if f is None:
            Q, lo, hi = self._arrays
            _, viol, waste = _kernels.solve_pressings(S, Q, lo, hi)
            f = Fitness(int(viol), int(waste))
            if len(self._cache) >= self.CACHE_SIZE:
                self._cache.clear()
            self._cache[key] = f
        return f


class EvaluatorSlice:
    """At most ``cap`` evaluations drawn from a parent evaluator.

    Every call is charged to the parent as well, so the parent's budget and
    incumbent stay authoritative; the slice tracks its own best separately.
    """

    def __init__(self, parent: Evaluator, cap: int):
        self.parent = parent
        self.inst = parent.inst
        self.limit = cap
        self.evals = 0
        self.best: Optional[Genotype] = None
        self.best_fitness: Fitness = WORST_FITNESS

    @property
    def remaining(self) -> float:
        return min(self.limit - self.evals, self.parent.remaining)

    def __call__(self, g: Genotype) -> Fitness:
        if self.evals >= self.limit:
            raise BudgetExhausted(f"slice of {self.limit} evaluations spent")
        f = self.parent(g)
        self.evals += 1
        if f < self.best_fitness:
            self.best_fitness = f
            self.best = g
        return f
