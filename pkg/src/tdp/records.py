"""Outcome of one seeded run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .encoding import Genotype
from .instance import ProblemInstance
from .pressing import Evaluator, PressingPlan, optimize_pressings


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    instance: str
    seed: int
    evals_used: int
    best_waste: Optional[int]
    violation: Optional[int]
    feasible: bool
    solution: Optional[Genotype] = None
    plan: Optional[PressingPlan] = None
    wall_time: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.feasible and (self.best_waste is None or self.violation != 0):
            raise ValueError("a feasible record needs a waste value and zero violation")

    @property
    def key(self) -> tuple:
        return (self.algorithm, self.instance, self.seed)


def record_from_best(algorithm: str, inst: ProblemInstance, seed: int, best: Optional[Genotype],
                     evals: int, wall_time: float = 0.0) -> RunRecord:
    if best is None:
        return RunRecord(algorithm, inst.name, seed, evals, None, None, False, wall_time=wall_time)
    plan = optimize_pressings(inst, best)
    return RunRecord(
        algorithm=algorithm,
        instance=inst.name,
        seed=seed,
        evals_used=evals,
        best_waste=plan.waste,
        violation=plan.violation,
        feasible=plan.feasible,
        solution=best,
        plan=plan,
        wall_time=wall_time,
    )


def record_from_evaluator(algorithm: str, inst: ProblemInstance, seed: int, ev: Evaluator,
                          wall_time: float = 0.0) -> RunRecord:
    return record_from_best(algorithm, inst, seed, ev.best, ev.evals, wall_time)
