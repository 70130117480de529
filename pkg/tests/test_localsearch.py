import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdp.encoding import AlternativeGenotype, ClassicalGenotype, ModelKind, random_genotype
from tdp.errors import InvalidMove, InvalidParameter
from tdp.instance import ProblemInstance, builtin_instance
from tdp.localsearch import (
    AlternativeMove,
    ClassicalMove,
    HillClimber,
    TabuSearch,
    apply_move,
    compute_budget,
    hill_climb,
    neighborhood_size,
    sample_neighbors,
    stagnation_limit,
    tabu_search,
)
from tdp.pressing import Evaluator, fitness

P, P_SB = ModelKind("P"), ModelKind("P", True)
D, D_SB = ModelKind("D"), ModelKind("D", True)
CATFOOD = builtin_instance("catfood")


@pytest.mark.parametrize("name, budget", [("catfood", 4200), ("herbs", 87000), ("magazine", 367500)])
def test_builtin_budgets(name, budget):
    assert compute_budget(builtin_instance(name), 0.05) == budget


def test_budget_for_fifty_by_four():
    inst = ProblemInstance("x", 50, 4, 1, (1,) * 50, (0.1,) * 50, (0.1,) * 50)
    assert compute_budget(inst, 0.05) == 490000


@pytest.mark.parametrize("pct", [0, -0.1, 1.5])
def test_budget_percent_guard(pct):
    with pytest.raises(InvalidParameter):
        compute_budget(CATFOOD, pct)


def test_stagnation_is_a_tenth():
    assert stagnation_limit(4200) == 420


def test_classical_move():
    g = ClassicalGenotype.from_columns([[1, 1, 1, 2, 2, 2, 0]])
    out = apply_move(g, ClassicalMove(0, 3, 6), P)
    assert out.column(0) == (1, 1, 1, 1, 2, 2, 1)


def test_move_from_empty_donor():
    g = ClassicalGenotype.from_columns([[1, 1, 1, 2, 2, 2, 0]])
    with pytest.raises(InvalidMove):
        apply_move(g, ClassicalMove(0, 6, 0), P)
    with pytest.raises(InvalidMove):
        apply_move(g, ClassicalMove(0, 2, 2), P)


def test_alternative_move_and_canonical_form():
    g = AlternativeGenotype.from_columns([[1, 2, 3]])
    assert apply_move(g, AlternativeMove(0, 0, 5), D).column(0) == (5, 2, 3)
    assert apply_move(g, AlternativeMove(0, 0, 5), D_SB).column(0) == (2, 3, 5)
    with pytest.raises(InvalidMove):
        apply_move(g, AlternativeMove(0, 0, 1), D)
    with pytest.raises(InvalidMove):
        apply_move(g, AlternativeMove(0, 0, 9), D, v=7)


def test_neighborhood_size():
    assert neighborhood_size(CATFOOD, P) == 2 * 7 * 6
    assert neighborhood_size(CATFOOD, D) == 2 * 9 * 6


def test_full_neighbourhood_of_tiny_design():
    g = ClassicalGenotype([[1], [1]])
    nbs = list(sample_neighbors(g, P, np.random.default_rng(0), 10))
    assert sorted(tuple(n.matrix.ravel()) for n in nbs) == [(0, 2), (2, 0)]


def test_single_sample_is_one_move_away():
    g = random_genotype(CATFOOD, P, np.random.default_rng(3))
    (nb,) = list(sample_neighbors(g, P, np.random.default_rng(1), 1))
    diff = nb.matrix - g.matrix
    assert sorted(diff[diff != 0].tolist()) == [-1, 1]


def test_neighbour_stream_is_seeded_and_distinct():
    g = random_genotype(CATFOOD, P_SB, np.random.default_rng(2))
    a = list(sample_neighbors(g, P_SB, np.random.default_rng(9), 50))
    b = list(sample_neighbors(g, P_SB, np.random.default_rng(9), 50))
    assert a == b
    assert len({n.key for n in a}) == len(a)
    assert g not in a


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.sampled_from([P, P_SB]))
def test_moves_preserve_sums_and_reverse(seed, kind):
    rng = np.random.default_rng(seed)
    g = random_genotype(CATFOOD, ModelKind("P"), rng)
    j = int(rng.integers(g.t))
    donors = np.flatnonzero(g.matrix[:, j])
    a = int(rng.choice(donors))
    b = int((a + 1 + rng.integers(CATFOOD.v - 1)) % CATFOOD.v)
    m = ClassicalMove(j, a, b)
    out = apply_move(g, m, ModelKind("P"))
    assert (out.matrix.sum(axis=0) == CATFOOD.s).all()
    assert apply_move(out, m.reverse(), ModelKind("P")) == g
    if kind.symmetry_breaking:
        canon = apply_move(g, m, kind)
        assert sorted(canon.columns()) == sorted(out.columns())


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_alternative_moves_keep_labels_in_range(seed):
    rng = np.random.default_rng(seed)
    g = random_genotype(CATFOOD, D, rng)
    for nb in sample_neighbors(g, D, rng, 20, v=CATFOOD.v):
        assert 1 <= nb.matrix.min() and nb.matrix.max() <= CATFOOD.v


def test_budget_of_one_scores_the_start():
    start = random_genotype(CATFOOD, P, np.random.default_rng(0))
    best, f, evals = hill_climb(CATFOOD, P, start, 1, np.random.default_rng(1))
    assert best == start and evals == 1 and f == fitness(CATFOOD, start)


def test_tenure_guard():
    with pytest.raises(InvalidParameter):
        tabu_search(CATFOOD, P, None, 100, 0, np.random.default_rng(0))


class CountingEvaluator(Evaluator):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.calls = 0
        self.history = []

    def __call__(self, g):
        f = super().__call__(g)
        self.calls += 1
        self.history.append(self.best_fitness)
        return f


@pytest.mark.parametrize("cls", [HillClimber, TabuSearch])
@pytest.mark.parametrize("kind", [P, P_SB, D, D_SB])
def test_engines_spend_exactly_the_budget(cls, kind):
    ev = CountingEvaluator(CATFOOD, 700)
    cls(CATFOOD, kind, ev, np.random.default_rng(4), 70).run()
    assert ev.calls == ev.evals == 700
    # the incumbent never gets worse
    assert all(b <= a for a, b in zip(ev.history, ev.history[1:]))


def test_monotone_in_budget():
    rng_seed = 11
    prev = None
    for budget in (50, 200, 800, 2000):
        _, f, _ = hill_climb(CATFOOD, P_SB, None, budget, np.random.default_rng(rng_seed))
        if prev is not None:
            assert f <= prev
        prev = f


def test_resumed_search_matches_single_run():
    a = Evaluator(CATFOOD, 900)
    TabuSearch(CATFOOD, D, a, np.random.default_rng(8), 90).run()
    b = Evaluator(CATFOOD, 0)
    eng = TabuSearch(CATFOOD, D, b, np.random.default_rng(8), 90)
    for _ in range(3):
        eng.advance(300)
    assert (a.best, a.best_fitness, a.evals) == (b.best, b.best_fitness, b.evals)


def test_archive_is_sorted_and_distinct():
    ev = Evaluator(CATFOOD, 500)
    eng = HillClimber(CATFOOD, P, ev, np.random.default_rng(2), 50)
    eng.run()
    pool = eng.pool()
    assert 0 < len(pool) <= 10
    assert [f for _, f in pool] == sorted(f for _, f in pool)
    assert len({g.key for g, _ in pool}) == len(pool)
    assert pool[0][1] == ev.best_fitness


def test_fixed_seed_is_deterministic():
    a = tabu_search(CATFOOD, P_SB, None, 1000, 10, np.random.default_rng(5))
    b = tabu_search(CATFOOD, P_SB, None, 1000, 10, np.random.default_rng(5))
    assert a == b
