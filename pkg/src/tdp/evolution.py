"""Steady-state genetic and memetic algorithms.

Each generation breeds one offspring: with probability ``p_x`` a crossover
of ``arity`` tournament winners, otherwise a copy of one winner; the child
is mutated, optionally refined by local search (memetic variant), evaluated
and offered to the population, where it replaces the worst member unless it
is worse than that member or duplicates an existing one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .algspec import GeneticSpec, MemeticSpec, format_spec
from .encoding import Genotype, ModelKind, canonical_matrix_form, random_genotype
from .errors import BudgetError, BudgetExhausted, InvalidGenotype, InvalidParameter
from .instance import ProblemInstance
from .localsearch import HillClimber, TabuSearch, neighborhood_size, stagnation_limit
from .pressing import WORST_FITNESS, Evaluator, EvaluatorSlice, Fitness
from .records import RunRecord, record_from_evaluator


@dataclass(frozen=True)
class EvoParams:
    popsize: int = 100
    p_x: float = 0.9
    p_m: Optional[float] = None  # None means 1 / genotype length
    p_ls: float = 0.005
    ls_cap: Optional[int] = None  # None means one neighbourhood's worth of evaluations
    restart_keep: float = 0.10

    def __post_init__(self):
        if self.popsize < 2:
            raise InvalidParameter(f"popsize must be at least 2, got {self.popsize}")
        for name in ("p_x", "p_ls", "restart_keep"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise InvalidParameter(f"{name} must lie in [0, 1], got {x}")
        if self.p_m is not None and not 0.0 <= self.p_m <= 1.0:
            raise InvalidParameter(f"p_m must lie in [0, 1], got {self.p_m}")


def genotype_length(inst: ProblemInstance, kind: ModelKind) -> int:
    return (inst.v if kind.model == "P" else inst.s) * inst.t


class Population:
    """Fixed-capacity list of distinct genotypes with their fitness."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.members: list[Genotype] = []
        self.fits: list[Fitness] = []
        self._keys: set = set()

    def __len__(self):
        return len(self.members)

    def __contains__(self, g: Genotype) -> bool:
        return g.key in self._keys

    def items(self) -> list[tuple[Genotype, Fitness]]:
        return list(zip(self.members, self.fits))

    def add(self, g: Genotype, f: Fitness) -> bool:
        if g.key in self._keys or len(self.members) >= self.capacity:
            return False
        self.members.append(g)
        self.fits.append(f)
        self._keys.add(g.key)
        return True

    def worst_index(self) -> int:
        fits = self.fits
        return max(range(len(fits)), key=fits.__getitem__)

    def best_index(self) -> int:
        fits = self.fits
        return min(range(len(fits)), key=fits.__getitem__)

    def replace(self, idx: int, g: Genotype, f: Fitness) -> None:
        self._keys.discard(self.members[idx].key)
        self.members[idx] = g
        self.fits[idx] = f
        self._keys.add(g.key)

    def offer(self, g: Genotype, f: Fitness) -> bool:
        """(mu+1) replacement: admit ``g`` over the worst member unless it is
        worse than it or already present."""
        if g.key in self._keys:
            return False
        if len(self.members) < self.capacity:
            return self.add(g, f)
        w = self.worst_index()
        if f > self.fits[w]:
            return False
        self.replace(w, g, f)
        return True

    def truncate(self, keep: int) -> None:
        order = sorted(range(len(self.fits)), key=self.fits.__getitem__)[:keep]
        self.members = [self.members[i] for i in order]
        self.fits = [self.fits[i] for i in order]
        self._keys = {g.key for g in self.members}


# ----------------------------------------------------------------- operators

def tournament_select(pop, rng: np.random.Generator) -> tuple[Genotype, Fitness]:
    """Binary tournament with replacement; the first draw wins ties.

    ``pop`` is a :class:`Population` or a sequence of (genotype, fitness) pairs.
    """
    if isinstance(pop, Population):
        members, fits = pop.members, pop.fits
    else:
        members = [g for g, _ in pop]
        fits = [f for _, f in pop]
    n = len(members)
    if n < 2:
        raise InvalidParameter(f"tournament needs at least two members, got {n}")
    a, b = rng.integers(n, size=2).tolist()
    if fits[b] < fits[a]:
        a = b
    return members[a], fits[a]


def _check_parents(parents: Sequence[Genotype]) -> None:
    if len(parents) < 2:
        raise InvalidGenotype(f"recombination needs at least two parents, got {len(parents)}")
    first = parents[0]
    for p in parents[1:]:
        if p.model != first.model or p.matrix.shape != first.matrix.shape:
            raise InvalidGenotype("parents differ in encoding or shape")


def uniform_crossover(parents: Sequence[Genotype], rng: np.random.Generator,
                      kind: Optional[ModelKind] = None) -> Genotype:
    """Copy every template column from a uniformly chosen parent."""
    _check_parents(parents)
    first = parents[0]
    t = first.matrix.shape[1]
    src = rng.integers(len(parents), size=t).tolist()
    child = np.empty_like(first.matrix)
    for j, p in enumerate(src):
        child[:, j] = parents[p].matrix[:, j]
    g = type(first)._wrap(child)
    return canonical_matrix_form(g, kind) if kind is not None else g


def _column_counts(g: Genotype, j: int, v: int) -> np.ndarray:
    col = g.matrix[:, j]
    if g.model == "P":
        return col
    return np.bincount(col - 1, minlength=v)


def greedy_crossover(inst: ProblemInstance, parents: Sequence[Genotype], rng: np.random.Generator,
                     evaluator=None, kind: Optional[ModelKind] = None) -> Genotype:
    """Assemble the child left to right, keeping at each template position
    the parental column that scores best on the partial design (templates
    not yet chosen are never pressed). Ties go to the lowest parent index.

    Each scored candidate costs one evaluation on ``evaluator``; positions
    where all parents agree need no scoring. ``rng`` is accepted for
    interface symmetry with :func:`uniform_crossover` and left untouched.
    """
    _check_parents(parents)
    ev = evaluator if evaluator is not None else Evaluator(inst)
    first = parents[0]
    rows, t = first.matrix.shape
    counts = np.zeros((inst.v, t), dtype=np.int64)
    child = np.empty_like(first.matrix)
    for j in range(t):
        seen = {}
        for idx, p in enumerate(parents):
            key = p.matrix[:, j].tobytes()
            if key not in seen:
                seen[key] = idx
        cands = list(seen.values())
        choice = cands[0]
        if len(cands) > 1:
            best_f = None
            for idx in cands:
                counts[:, j] = _column_counts(parents[idx], j, inst.v)
                f = ev.partial(counts)
                if best_f is None or f < best_f:
                    best_f, choice = f, idx
        child[:, j] = parents[choice].matrix[:, j]
        counts[:, j] = _column_counts(parents[choice], j, inst.v)
    g = type(first)._wrap(child)
    return canonical_matrix_form(g, kind) if kind is not None else g


def mutate(g: Genotype, kind: ModelKind, p_m: float, rng: np.random.Generator,
           v: Optional[int] = None) -> Genotype:
    """Per-gene mutation: each position fires one neighbourhood move there
    with probability ``p_m``.

    A classical gene ``(i, j)`` gains a slot taken from a random other
    variation present on template ``j``; an alternative gene gets a new
    random label. ``v`` (the label range) defaults to the row count for
    classical genotypes and must be given for alternative ones.
    """
    m = g.matrix
    rows, t = m.shape
    if v is None:
        if g.model != "P":
            raise InvalidParameter("mutating an alternative genotype needs the variation count v")
        v = rows
    fired = np.flatnonzero(rng.random(rows * t) < p_m)
    if fired.size == 0 or v < 2:
        return canonical_matrix_form(g, kind)
    out = m.copy()
    for pos in fired.tolist():
        i, j = divmod(pos, t)
        if g.model == "P":
            donors = np.flatnonzero(out[:, j])
            donors = donors[donors != i]
            if donors.size == 0:
                continue
            a = donors[rng.integers(donors.size)]
            out[a, j] -= 1
            out[i, j] += 1
        else:
            cur = int(out[i, j])
            w = int(rng.integers(1, v))
            if w >= cur:
                w += 1
            out[i, j] = w
    return canonical_matrix_form(type(g)._wrap(out), kind)


# -------------------------------------------------------------------- engine

class GeneticAlgorithm:
    """Resumable steady-state GA; pass ``ls_method`` for the memetic variant.

    Like the local search engines, work is interrupted by
    :class:`BudgetExhausted` and resumed by :meth:`advance`.
    """

    _FILL_ATTEMPTS = 1000

    def __init__(self, inst: ProblemInstance, kind: ModelKind, evaluator, rng: np.random.Generator,
                 stagnation: int, arity: int = 2, crossover: str = "UX",
                 params: EvoParams = EvoParams(), ls_method: Optional[str] = None):
        if arity < 2:
            raise InvalidParameter(f"arity must be at least 2, got {arity}")
        if crossover not in ("UX", "GD"):
            raise InvalidParameter(f"unknown crossover {crossover!r}")
        self.inst = inst
        self.kind = kind
        self.ev = evaluator
        self.rng = rng
        self.stagnation = stagnation
        self.arity = arity
        self.crossover = crossover
        self.params = params
        self.ls_method = ls_method
        self.p_m = params.p_m if params.p_m is not None else 1.0 / genotype_length(inst, kind)
        self.ls_cap = params.ls_cap if params.ls_cap is not None else neighborhood_size(inst, kind)
        self.pop = Population(params.popsize)
        self.best_f: Fitness = WORST_FITNESS
        self.last_gain = 0
        self.target = params.popsize
        self.finished = False

    # pool interface used by cooperative agents
    def pool(self) -> list[tuple[Genotype, Fitness]]:
        return sorted(self.pop.items(), key=lambda gf: gf[1])

    def set_pool(self, members: list[tuple[Genotype, Fitness]]) -> None:
        pop = Population(self.params.popsize)
        for g, f in members:
            pop.add(g, f)
        self.pop = pop
        self._observe(min((f for _, f in members), default=WORST_FITNESS))

    def _observe(self, f: Fitness) -> None:
        if f < self.best_f:
            self.best_f = f
            self.last_gain = self.ev.evals

    def _fill_one(self) -> None:
        for _ in range(self._FILL_ATTEMPTS):
            g = random_genotype(self.inst, self.kind, self.rng)
            if g not in self.pop:
                break
        else:
            # the design space is too small to supply distinct members
            self.target = len(self.pop)
            return
        f = self.ev(g)
        self.pop.add(g, f)
        self._observe(f)

    def _restart(self) -> None:
        keep = max(1, int(round(self.params.restart_keep * self.params.popsize)))
        self.pop.truncate(keep)
        self.target = self.params.popsize
        self.last_gain = self.ev.evals

    def _local_search(self, child: Genotype) -> tuple[Genotype, Fitness]:
        sub = EvaluatorSlice(self.ev, self.ls_cap)
        cls = HillClimber if self.ls_method == "HC" else TabuSearch
        engine = cls(self.inst, self.kind, sub, self.rng, self.ls_cap, start=child, restart=False)
        engine.run()
        if sub.best is None:
            raise BudgetExhausted("no budget left for local search")
        return sub.best, sub.best_fitness

    def _offspring(self) -> Genotype:
        rng = self.rng
        if rng.random() < self.params.p_x:
            parents = [tournament_select(self.pop, rng)[0] for _ in range(self.arity)]
            if self.crossover == "UX":
                child = uniform_crossover(parents, rng)
            else:
                child = greedy_crossover(self.inst, parents, rng, self.ev)
        else:
            child = tournament_select(self.pop, rng)[0]
        return mutate(child, self.kind, self.p_m, rng, self.inst.v)

    def step(self) -> None:
        if len(self.pop) < self.target:
            self._fill_one()
            return
        if len(self.pop) < 2:
            self.finished = True
            return
        child = self._offspring()
        p_ls = self.params.p_ls if self.ls_method else 0.0
        if p_ls > 0 and self.rng.random() < p_ls:
            child, f = self._local_search(child)
        else:
            f = self.ev(child)
        self._observe(f)
        self.pop.offer(child, f)
        if self.ev.evals - self.last_gain >= self.stagnation:
            self._restart()

    def run(self) -> None:
        try:
            while not self.finished:
                self.step()
        except BudgetExhausted:
            pass

    def advance(self, n: int) -> None:
        self.ev.grant(n)
        self.run()


# --------------------------------------------------------------- entry points

def agent_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for agent ``index`` of a run seeded with ``seed``; a
    standalone run uses stream 0, so it matches a one-agent cooperative run."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(index + 1)[index])


def _run(inst, spec, budget, seed, params, ls_method):
    params = params or EvoParams()
    if budget < params.popsize:
        raise BudgetError(f"budget {budget} is smaller than the population size {params.popsize}")
    started = time.perf_counter()
    ev = Evaluator(inst, budget)
    engine = GeneticAlgorithm(inst, spec.kind, ev, agent_rng(seed), stagnation_limit(budget),
                              spec.arity, spec.crossover, params, ls_method)
    engine.run()
    return record_from_evaluator(format_spec(spec), inst, seed, ev, time.perf_counter() - started)


def run_ga(inst: ProblemInstance, spec: GeneticSpec, budget: int, seed: int,
           params: Optional[EvoParams] = None) -> RunRecord:
    return _run(inst, spec, budget, seed, params, None)


def run_ma(inst: ProblemInstance, spec: MemeticSpec, budget: int, seed: int,
           params: Optional[EvoParams] = None) -> RunRecord:
    return _run(inst, spec, budget, seed, params, spec.ls_method)
