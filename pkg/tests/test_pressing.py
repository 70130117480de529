import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from designs import CATFOOD_BEST, HERBS_COOPERATIVE, genotype
from tdp.encoding import ClassicalGenotype, ModelKind, classical_to_alternative, random_genotype
from tdp.errors import BudgetError, BudgetExhausted, InvalidPressings
from tdp.instance import ProblemInstance, builtin_instance
from tdp.pressing import (
    Evaluator,
    EvaluatorSlice,
    Fitness,
    brute_force_pressings,
    evaluate_with_pressings,
    fitness,
    optimize_pressings,
    vertex_enumeration_pressings,
)

CATFOOD = builtin_instance("catfood")


def test_catfood_fixture_plan():
    plan = evaluate_with_pressings(CATFOOD, genotype(CATFOOD_BEST), CATFOOD_BEST["pressings"])
    assert plan.waste == 29287
    assert plan.deviations(CATFOOD) == [0, -5000, -10000, 0, 0, 14286, 1]
    assert plan.feasible and plan.violation == 0
    assert plan.overall_deviation(CATFOOD) == pytest.approx(0.80, abs=0.01)
    devs = plan.deviation_percentages(CATFOOD)
    assert min(devs) == pytest.approx(-3.85, abs=0.01)
    assert max(devs) == pytest.approx(1.79, abs=0.01)


def test_herbs_cooperative_fixture():
    plan = evaluate_with_pressings(builtin_instance("herbs"), genotype(HERBS_COOPERATIVE), [66000, 16000])
    assert plan.waste == 104000 and plan.feasible


def test_zero_pressings():
    plan = evaluate_with_pressings(CATFOOD, genotype(CATFOOD_BEST), [0, 0])
    assert plan.production == (0,) * 7
    assert plan.waste == CATFOOD.total_demand
    assert not plan.feasible


def test_negative_pressings_rejected():
    with pytest.raises(InvalidPressings):
        evaluate_with_pressings(CATFOOD, genotype(CATFOOD_BEST), [-1, 5])
    with pytest.raises(InvalidPressings):
        evaluate_with_pressings(CATFOOD, genotype(CATFOOD_BEST), [1])


def test_optimize_catfood_design():
    plan = optimize_pressings(CATFOOD, genotype(CATFOOD_BEST))
    assert plan.waste == 29287
    assert plan.pressings == (250000, 157143)
    assert fitness(CATFOOD, genotype(CATFOOD_BEST)) == Fitness(0, 29287)


def test_alternative_design_scores_like_classical():
    g = genotype(CATFOOD_BEST)
    assert fitness(CATFOOD, classical_to_alternative(g)) == fitness(CATFOOD, g)


def _tiny(demands, t, s, tol=0.1):
    v = len(demands)
    return ProblemInstance("tiny", v, t, s, tuple(demands), (tol,) * v, (tol,) * v)


def test_exact_cover_single_variation():
    inst = _tiny([100], 1, 1)
    plan = optimize_pressings(inst, ClassicalGenotype([[1]]))
    assert plan.pressings == (100,) and plan.waste == 0


def test_two_variations_one_template():
    inst = _tiny([10, 10], 1, 2)
    g = ClassicalGenotype([[1], [1]])
    assert optimize_pressings(inst, g).pressings == (10,)
    oracle = brute_force_pressings(inst, g, [(0, 30)])
    assert oracle.pressings == (10,) and oracle.waste == 0


def test_single_variation_design_is_infeasible():
    g = ClassicalGenotype.from_columns([[9, 0, 0, 0, 0, 0, 0]] * 2)
    assert fitness(CATFOOD, g).violation > 0


def test_brute_force_guards():
    g = genotype(CATFOOD_BEST)
    with pytest.raises(BudgetError):
        brute_force_pressings(CATFOOD, g, [(5, 4), (0, 1)])
    with pytest.raises(BudgetError):
        brute_force_pressings(CATFOOD, g, [(0, 10**5), (0, 10**5)])


def test_brute_force_prefers_smallest_pressings_on_ties():
    inst = _tiny([10], 1, 1, tol=0.5)
    # every R in 5..15 is feasible; only R=10 is waste-free
    assert brute_force_pressings(inst, ClassicalGenotype([[1]]), [(0, 20)]).pressings == (10,)
    inst = _tiny([10, 10], 1, 2, tol=0.5)
    g = ClassicalGenotype([[2], [0]])
    # 2R against demand 10 (plus the unmet 10): R=5 is best
    assert brute_force_pressings(inst, g, [(0, 20)]).pressings == (5,)


def test_catfood_brute_force_window():
    g = genotype(CATFOOD_BEST)
    oracle = brute_force_pressings(CATFOOD, g, [(249000, 251000), (156000, 158000)])
    assert oracle.waste == 29287


def _oracle_bounds(inst):
    _, hi = inst.bands()
    top = max(hi) + inst.total_demand
    return [(0, top)] * inst.t


@st.composite
def small_case(draw):
    v = draw(st.integers(1, 4))
    t = draw(st.integers(1, 3))
    s = draw(st.integers(1, 4))
    demands = draw(st.lists(st.integers(1, 20 if t == 3 else 40), min_size=v, max_size=v))
    tol = draw(st.sampled_from([0.0, 0.1, 0.25]))
    inst = _tiny(demands, t, s, tol)
    seed = draw(st.integers(0, 2**32 - 1))
    g = random_genotype(inst, ModelKind("P"), np.random.default_rng(seed))
    return inst, g


@settings(max_examples=100, derandomize=True)
@given(small_case())
def test_solver_matches_oracle(case):
    inst, g = case
    best = optimize_pressings(inst, g)
    oracle = brute_force_pressings(inst, g, _oracle_bounds(inst))
    assert best.fitness == oracle.fitness
    assert vertex_enumeration_pressings(inst, g).fitness >= best.fitness


@settings(max_examples=40)
@given(small_case(), st.integers(2, 7))
def test_scaling_demands_bounds_waste(case, k):
    inst, g = case
    # with demands divisible by 20 the 0.1/0.25 bands stay exact multiples
    base = _tiny([q * 20 for q in inst.demands], inst.t, inst.s, inst.lower_tol[0])
    scaled = _tiny([q * 20 * k for q in inst.demands], inst.t, inst.s, inst.lower_tol[0])
    a = optimize_pressings(base, g)
    b = optimize_pressings(scaled, g)
    # k * R is always available, and integrality can only help at the finer scale
    assert b.fitness <= Fitness(k * a.violation, k * a.waste)
    if a.violation == 0 and a.waste == 0:
        assert b.waste == 0
    assert evaluate_with_pressings(scaled, g, [k * r for r in a.pressings]).waste == k * a.waste


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 400000), min_size=2, max_size=2))
def test_plan_accounting(seed, R):
    g = random_genotype(CATFOOD, ModelKind("P"), np.random.default_rng(seed))
    plan = evaluate_with_pressings(CATFOOD, g, R)
    S = g.matrix
    assert plan.waste == sum(abs(int(S[i] @ np.array(R)) - q) for i, q in enumerate(CATFOOD.demands))
    for p, u, o, q in zip(plan.production, plan.under, plan.over, CATFOOD.demands):
        assert p + u - o == q and u * o == 0
    lo, hi = CATFOOD.bands()
    assert plan.feasible == all(a <= p <= b for a, p, b in zip(lo, plan.production, hi))
    assert optimize_pressings(CATFOOD, g).fitness <= plan.fitness


def test_evaluator_budget_accounting():
    ev = Evaluator(CATFOOD, 3)
    rng = np.random.default_rng(0)
    designs = [random_genotype(CATFOOD, ModelKind("P"), rng) for _ in range(4)]
    for g in designs[:3]:
        ev(g)
    assert ev.evals == 3 and ev.remaining == 0
    with pytest.raises(BudgetExhausted):
        ev(designs[3])
    assert ev.evals == 3
    ev.grant(2)
    ev(designs[0])
    assert ev.evals == 4
    assert ev.best_fitness == min(fitness(CATFOOD, g) for g in designs[:3])


def test_repeat_evaluations_still_count():
    ev = Evaluator(CATFOOD)
    g = genotype(CATFOOD_BEST)
    assert ev(g) == ev(g)
    assert ev.evals == 2


def test_slice_charges_parent():
    ev = Evaluator(CATFOOD, 10)
    sub = EvaluatorSlice(ev, 2)
    g = genotype(CATFOOD_BEST)
    sub(g)
    sub(g)
    with pytest.raises(BudgetExhausted):
        sub(g)
    assert ev.evals == 2 and sub.evals == 2
    assert sub.best_fitness == ev.best_fitness == Fitness(0, 29287)
