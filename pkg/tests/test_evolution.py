from collections import Counter

import numpy as np
import pytest
from scipy import stats

from designs import CATFOOD_BEST, genotype
from tdp.algspec import parse_spec
from tdp.encoding import ClassicalGenotype, ModelKind, is_canonical, random_genotype
from tdp.errors import BudgetError, InvalidGenotype, InvalidParameter
from tdp.evolution import (
    EvoParams,
    GeneticAlgorithm,
    Population,
    agent_rng,
    genotype_length,
    greedy_crossover,
    mutate,
    run_ga,
    run_ma,
    tournament_select,
    uniform_crossover,
)
from tdp.instance import builtin_instance
from tdp.pressing import Evaluator, Fitness

P, P_SB = ModelKind("P"), ModelKind("P", True)
D, D_SB = ModelKind("D"), ModelKind("D", True)
CATFOOD = builtin_instance("catfood")


def _designs(n, kind=P, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        g = random_genotype(CATFOOD, kind, rng)
        if g not in out:
            out.append(g)
    return out


def test_params_defaults_and_guards():
    p = EvoParams()
    assert (p.popsize, p.p_x, p.p_ls, p.restart_keep) == (100, 0.9, 0.005, 0.10)
    with pytest.raises(InvalidParameter):
        EvoParams(popsize=1)
    with pytest.raises(InvalidParameter):
        EvoParams(p_x=1.5)


def test_genotype_length():
    assert genotype_length(CATFOOD, P) == 14
    assert genotype_length(CATFOOD, D) == 18


def test_tournament_prefers_better():
    a, b = _designs(2)
    pool = [(a, Fitness(0, 10)), (b, Fitness(0, 20))]
    rng = np.random.default_rng(0)
    wins = sum(tournament_select(pool, rng)[0] == a for _ in range(1000))
    assert wins >= 700


def test_tournament_uniform_on_ties():
    gs = _designs(4)
    pool = [(g, Fitness(0, 5)) for g in gs]
    rng = np.random.default_rng(1)
    counts = Counter(tournament_select(pool, rng)[0].key for _ in range(4000))
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


def test_tournament_needs_two():
    with pytest.raises(InvalidParameter):
        tournament_select([(_designs(1)[0], Fitness(0, 0))], np.random.default_rng(0))


def test_uniform_identical_parents():
    g = genotype(CATFOOD_BEST)
    assert uniform_crossover([g, g], np.random.default_rng(0)) == g


def test_uniform_columns_come_from_matching_positions():
    a, b = _designs(2, seed=3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        child = uniform_crossover([a, b], rng)
        for j in range(2):
            assert child.column(j) in (a.column(j), b.column(j))


def test_uniform_four_parent_frequencies():
    # parents whose columns are tagged by the parent index
    parents = [ClassicalGenotype.from_columns([[9 - k, k, 0, 0, 0, 0, 0]] * 2) for k in range(4)]
    rng = np.random.default_rng(7)
    counts = Counter()
    for _ in range(10_000):
        child = uniform_crossover(parents, rng)
        counts[int(child.matrix[1, 0])] += 1
    assert stats.chisquare([counts[k] for k in range(4)]).pvalue > 0.001


def test_crossover_shape_mismatch():
    a = genotype(CATFOOD_BEST)
    b = ClassicalGenotype.from_columns([[9, 0, 0, 0, 0, 0, 0]])
    with pytest.raises(InvalidGenotype):
        uniform_crossover([a, b], np.random.default_rng(0))
    with pytest.raises(InvalidGenotype):
        greedy_crossover(CATFOOD, [a, b], np.random.default_rng(0))


def _single_template_score(col):
    """Best (violation, waste) when only one template with counts ``col`` is pressed."""
    lo, hi = CATFOOD.bands()
    q = np.array(CATFOOD.demands)
    R = np.arange(0, 1_400_001)
    prod = np.outer(np.asarray(col), R)
    viol = (np.maximum(0, np.array(lo)[:, None] - prod) + np.maximum(0, prod - np.array(hi)[:, None])).sum(0)
    waste = np.abs(prod - q[:, None]).sum(0)
    best = np.lexsort((waste, viol))[0]
    return int(viol[best]), int(waste[best])


def test_greedy_first_column_is_argmin():
    best = genotype(CATFOOD_BEST)
    other = _designs(1, seed=5)[0]
    ev = Evaluator(CATFOOD)
    child = greedy_crossover(CATFOOD, [best, other], np.random.default_rng(0), ev)
    cands = [best.column(0), other.column(0)]
    scores = [_single_template_score(c) for c in cands]
    expect = cands[min(range(2), key=lambda k: (scores[k], k))]
    assert child.column(0) == expect
    assert child.column(0) in cands
    # two candidates at each of two positions, unless they coincide
    assert ev.evals == sum(best.column(j) != other.column(j) for j in range(2)) * 2


def test_greedy_identical_parents_cost_nothing():
    g = genotype(CATFOOD_BEST)
    ev = Evaluator(CATFOOD)
    assert greedy_crossover(CATFOOD, [g, g, g], np.random.default_rng(0), ev) == g
    assert ev.evals == 0


def test_mutation_zero_rate_is_identity():
    g = genotype(CATFOOD_BEST)
    assert mutate(g, P, 0.0, np.random.default_rng(0)) == g


def test_mutation_rate_one_over_length():
    rng = np.random.default_rng(2)
    g = random_genotype(CATFOOD, D, rng)
    p_m = 1 / genotype_length(CATFOOD, D)
    # each fired alternative gene changes exactly one cell
    changed = [int((mutate(g, D, p_m, rng, CATFOOD.v).matrix != g.matrix).sum()) for _ in range(10_000)]
    assert np.mean(changed) == pytest.approx(1.0, rel=0.10)


def test_mutation_keeps_designs_valid():
    rng = np.random.default_rng(4)
    for kind in (P, P_SB, D_SB):
        g = random_genotype(CATFOOD, kind, rng)
        for _ in range(200):
            g = mutate(g, kind, 0.3, rng, CATFOOD.v)
            if kind.model == "P":
                assert (g.matrix.sum(axis=0) == CATFOOD.s).all() and g.matrix.min() >= 0
            else:
                assert 1 <= g.matrix.min() and g.matrix.max() <= CATFOOD.v
            assert is_canonical(g, kind)


def test_population_rejects_duplicates_and_worse():
    gs = _designs(4)
    pop = Population(3)
    for g, w in zip(gs[:3], (10, 20, 30)):
        assert pop.offer(g, Fitness(0, w))
    assert not pop.offer(gs[0], Fitness(0, 1))
    assert not pop.offer(gs[3], Fitness(0, 40))
    assert pop.offer(gs[3], Fitness(0, 15))
    assert sorted(f.waste for f in pop.fits) == [10, 15, 20]


class Audit(GeneticAlgorithm):
    """Checks population invariants after every step."""

    def step(self):
        before = max(self.pop.fits) if len(self.pop) == self.params.popsize else None
        incumbent = self.ev.best_fitness
        super().step()
        keys = [g.key for g in self.pop.members]
        assert len(keys) == len(set(keys))
        assert all(is_canonical(g, self.kind) for g in self.pop.members)
        assert self.ev.best_fitness <= incumbent
        if before is not None and len(self.pop) == self.params.popsize:
            assert max(self.pop.fits) <= before


@pytest.mark.parametrize("kind, crossover, ls", [(P_SB, "UX", None), (D, "GD", None), (P, "UX", "HC"),
                                                 (D_SB, "GD", "TS")])
def test_population_invariants(kind, crossover, ls):
    ev = Evaluator(CATFOOD, 1500)
    params = EvoParams(popsize=30, p_ls=0.05 if ls else 0.005, ls_cap=40)
    Audit(CATFOOD, kind, ev, np.random.default_rng(0), 150, 2, crossover, params, ls).run()
    assert ev.evals == 1500


def test_run_ga_spends_budget_and_is_deterministic():
    spec = parse_spec("Ga.P.A4.Gd")
    a = run_ga(CATFOOD, spec, 1200, 3)
    b = run_ga(CATFOOD, spec, 1200, 3)
    assert a == b
    assert a.evals_used == 1200
    assert a.algorithm == "Ga.P.A4.Gd"


def test_memetic_without_local_search_is_the_ga():
    ga = run_ga(CATFOOD, parse_spec("Ga.P*.A2.Ux"), 1000, 5)
    ma = run_ma(CATFOOD, parse_spec("Ma.Hc.P*.A2.Ux"), 1000, 5, EvoParams(p_ls=0.0))
    assert (ma.solution, ma.best_waste, ma.evals_used) == (ga.solution, ga.best_waste, ga.evals_used)


def test_budget_below_popsize():
    with pytest.raises(BudgetError):
        run_ga(CATFOOD, parse_spec("Ga.P.A2.Ux"), 50, 0)


def test_agent_streams_differ():
    a = agent_rng(1, 0).random(3)
    b = agent_rng(1, 1).random(3)
    assert not np.allclose(a, b)
    assert np.allclose(a, agent_rng(1).random(3))


def test_local_search_cap_defaults_to_one_neighbourhood():
    ev = Evaluator(CATFOOD, 10)
    ga = GeneticAlgorithm(CATFOOD, D, ev, np.random.default_rng(0), 1, 2, "UX", EvoParams(), "HC")
    assert ga.ls_cap == 2 * 9 * 6
    ga = GeneticAlgorithm(CATFOOD, P, ev, np.random.default_rng(0), 1, 2, "UX", EvoParams(ls_cap=7), "HC")
    assert ga.ls_cap == 7
