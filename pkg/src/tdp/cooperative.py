"""Cooperative runs: several agents search independently and swap pooled
solutions at synchronisation points.

Each agent wraps one basic or memetic engine with its own evaluator and
random stream. A run is split into ``cycles`` rounds; in each round every
agent advances by its share of the budget, in listed order, and then the
agents exchange solutions along the chosen topology.
"""

from __future__ import annotations

import time
from typing import Optional, Sequence

import numpy as np

from .algspec import (
    CooperativeSpec,
    GeneticSpec,
    LocalSearchSpec,
    MemeticSpec,
    expand_members,
    format_spec,
)
from .encoding import Genotype, ModelKind, convert, distance_matrix
from .errors import BudgetError, EmptyPool, InvalidParameter, SpecError
from .evolution import EvoParams, GeneticAlgorithm, agent_rng
from .instance import ProblemInstance
from .localsearch import DEFAULT_TENURE, HillClimber, TabuSearch, stagnation_limit
from .pressing import Evaluator, Fitness
from .records import RunRecord, record_from_best

DEFAULT_CYCLES = 5

Pool = list[tuple[Genotype, Fitness]]


def build_engine(inst: ProblemInstance, spec, evaluator, rng: np.random.Generator, stagnation: int,
                 params: Optional[EvoParams] = None):
    """Search engine for a non-cooperative spec, driven through ``evaluator``."""
    if isinstance(spec, LocalSearchSpec):
        if spec.method == "HC":
            return HillClimber(inst, spec.kind, evaluator, rng, stagnation)
        return TabuSearch(inst, spec.kind, evaluator, rng, stagnation, tenure=DEFAULT_TENURE)
    params = params or EvoParams()
    if isinstance(spec, GeneticSpec):
        return GeneticAlgorithm(inst, spec.kind, evaluator, rng, stagnation,
                                spec.arity, spec.crossover, params)
    if isinstance(spec, MemeticSpec):
        return GeneticAlgorithm(inst, spec.kind, evaluator, rng, stagnation,
                                spec.arity, spec.crossover, params, ls_method=spec.ls_method)
    raise SpecError(f"agents cannot run {format_spec(spec)}")


class Agent:
    def __init__(self, inst: ProblemInstance, spec, rng: np.random.Generator, stagnation: int,
                 params: Optional[EvoParams] = None):
        self.spec = spec
        self.kind: ModelKind = spec.kind
        self.ev = Evaluator(inst, 0)
        self.engine = build_engine(inst, spec, self.ev, rng, stagnation, params)

    def advance(self, n: int) -> None:
        self.engine.advance(n)

    def pool(self) -> Pool:
        return sorted(self.engine.pool(), key=lambda gf: gf[1])

    def set_pool(self, pool: Pool) -> None:
        self.engine.set_pool(pool)


# ----------------------------------------------------------------- policies

def _min_distances(cands: Sequence[Genotype], others: Sequence[Genotype]) -> np.ndarray:
    if not others:
        return np.full(len(cands), np.iinfo(np.int64).max)
    return distance_matrix(list(cands), list(others)).min(axis=1)


def select_emigrant(pool: Pool, policy: str, receiver_pool: Optional[Pool] = None,
                    rng: Optional[np.random.Generator] = None) -> tuple[Genotype, Fitness]:
    """Pick the member of ``pool`` to send.

    For the diversity policy the pool must already be expressed in the
    receiver's encoding; the member farthest (by minimum Hamming distance)
    from the receiver's pool wins.
    """
    if not pool:
        raise EmptyPool("cannot select an emigrant from an empty pool")
    if policy == "R":
        if rng is None:
            raise InvalidParameter("random migration needs a generator")
        return pool[int(rng.integers(len(pool)))]
    if policy == "W":
        worst = max(range(len(pool)), key=lambda i: (pool[i][1], -i))
        return pool[worst]
    if policy == "D":
        d = _min_distances([g for g, _ in pool], [g for g, _ in (receiver_pool or [])])
        return pool[int(np.argmax(d))]
    raise InvalidParameter(f"unknown migration policy {policy!r}")


def accept_immigrant(pool: Pool, candidate: tuple[Genotype, Fitness], policy: str,
                     rng: Optional[np.random.Generator] = None) -> Pool:
    """Return the receiver's pool after offering ``candidate``, sorted by fitness."""
    g, f = candidate
    out = list(pool)
    if any(h.key == g.key for h, _ in out):
        return sorted(out, key=lambda gf: gf[1])
    if not out:
        return [candidate]
    worst = max(range(len(out)), key=lambda i: (out[i][1], i))
    if policy == "R":
        if rng is None:
            raise InvalidParameter("random acceptance needs a generator")
        out[int(rng.integers(len(out)))] = candidate
    elif policy == "W":
        out[worst] = candidate
    elif policy == "D":
        members = [h for h, _ in out]
        if len(members) > 1:
            d = distance_matrix(members, members)
            floor = int(d[~np.eye(len(members), dtype=bool)].min())
        else:
            floor = 0
        if int(_min_distances([g], members)[0]) <= floor:
            return sorted(out, key=lambda gf: gf[1])
        out[worst] = candidate
    else:
        raise InvalidParameter(f"unknown acceptance policy {policy!r}")
    return sorted(out, key=lambda gf: gf[1])


def _routes(n: int, topology: str, pools: list[Pool], rng: np.random.Generator) -> list[tuple[int, int]]:
    if topology == "RING":
        return [(i, (i + 1) % n) for i in range(n)]
    if topology == "RANDOM":
        routes = []
        for i in range(n):
            j = int(rng.integers(n - 1))
            routes.append((i, j + (j >= i)))
        return routes
    if topology == "BROADCAST":
        holders = [i for i in range(n) if pools[i]]
        if not holders:
            return []
        src = min(holders, key=lambda i: (pools[i][0][1], i))
        return [(src, j) for j in range(n) if j != src]
    raise InvalidParameter(f"unknown topology {topology!r}")


def sync_exchange(agents: Sequence[Agent], topology: str, migration: str, acceptance: str,
                  rng: np.random.Generator, v: int) -> None:
    """One synchronisation point. Emigrants are chosen from the pools as they
    stood when the exchange began; receivers see earlier arrivals."""
    n = len(agents)
    if n < 2:
        raise InvalidParameter("an exchange needs at least two agents")
    sent = [a.pool() for a in agents]
    live = [list(p) for p in sent]
    changed = set()
    for src, dst in _routes(n, topology, sent, rng):
        if not sent[src]:
            continue
        kind = agents[dst].kind
        outgoing = [(convert(g, kind, v), f) for g, f in sent[src]]
        if topology == "BROADCAST":
            emigrant = outgoing[0]
        else:
            emigrant = select_emigrant(outgoing, migration, live[dst], rng)
        updated = accept_immigrant(live[dst], emigrant, acceptance, rng)
        if updated != live[dst]:
            live[dst] = updated
            changed.add(dst)
    for i in sorted(changed):
        agents[i].set_pool(live[i])


# --------------------------------------------------------------------- runs

def cycle_budgets(e_max: int, cycles: int, n: int) -> list[list[int]]:
    """Per-cycle, per-agent evaluation grants; the division remainder is
    spread over the agents in the final cycle."""
    if cycles < 1 or n < 1:
        raise InvalidParameter(f"need at least one cycle and one agent, got {cycles} and {n}")
    if e_max < cycles * n:
        raise BudgetError(f"budget {e_max} cannot cover {cycles} cycles of {n} agents")
    share = e_max // (cycles * n)
    rest = e_max - share * cycles * n
    plan = [[share] * n for _ in range(cycles)]
    for i in range(n):
        plan[-1][i] += rest // n + (1 if i < rest % n else 0)
    return plan


def run_cooperative(inst: ProblemInstance, spec: CooperativeSpec, e_max: int,
                    cycles: int = DEFAULT_CYCLES, seed: int = 0,
                    params: Optional[EvoParams] = None) -> RunRecord:
    members = expand_members(spec)
    n = len(members)
    plan = cycle_budgets(e_max, cycles, n)
    started = time.perf_counter()
    stagnation = stagnation_limit(e_max // n)
    agents = [Agent(inst, m, agent_rng(seed, i), stagnation, params) for i, m in enumerate(members)]
    exchange_rng = agent_rng(seed, n)
    for grants in plan:
        for agent, grant in zip(agents, grants):
            agent.advance(grant)
        if n > 1:
            sync_exchange(agents, spec.topology, spec.migration, spec.acceptance, exchange_rng, inst.v)
    best, best_f = None, None
    for a in agents:
        if a.ev.best is not None and (best_f is None or a.ev.best_fitness < best_f):
            best, best_f = a.ev.best, a.ev.best_fitness
    evals = sum(a.ev.evals for a in agents)
    return record_from_best(format_spec(spec), inst, seed, best, evals, time.perf_counter() - started)
