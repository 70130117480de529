"""Experiment orchestration, result files and summaries."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .algspec import (
    CooperativeSpec,
    GeneticSpec,
    LocalSearchSpec,
    MemeticSpec,
    expand_members,
    format_spec,
    parse_spec,
)
from .cooperative import DEFAULT_CYCLES, run_cooperative
from .encoding import genotype_from_dict, genotype_to_dict
from .errors import EmptyInput, InvalidInput, InvalidParameter
from .evolution import agent_rng, run_ga, run_ma
from .instance import ProblemInstance
from .localsearch import DEFAULT_PERCENT, DEFAULT_TENURE, compute_budget, hill_climb, tabu_search
from .pressing import PressingPlan
from .records import RunRecord, record_from_best
from .stats import (  # noqa: F401  re-exported
    HolmReport,
    RankTable,
    control_comparison,
    critical_values,
    friedman_statistic,
    holm_test,
    iman_davenport,
    rank_table,
    ranksum_test,
)

DEFAULT_RUNS = 20
COOP_RUNS_PER_AGENT = 10

CSV_FIELDS = ("algorithm", "instance", "seed", "evals_used", "best_waste", "violation",
              "feasible", "wall_time")


# --------------------------------------------------------------- execution

def run_algorithm(inst: ProblemInstance, spec, budget: int, seed: int,
                  cycles: int = DEFAULT_CYCLES) -> RunRecord:
    """One seeded run of any spec at the given evaluation budget."""
    if isinstance(spec, str):
        spec = parse_spec(spec)
    if isinstance(spec, CooperativeSpec):
        return run_cooperative(inst, spec, budget, cycles, seed)
    if isinstance(spec, GeneticSpec):
        return run_ga(inst, spec, budget, seed)
    if isinstance(spec, MemeticSpec):
        return run_ma(inst, spec, budget, seed)
    if isinstance(spec, LocalSearchSpec):
        started = time.perf_counter()
        rng = agent_rng(seed)
        if spec.method == "HC":
            best, _, evals = hill_climb(inst, spec.kind, None, budget, rng)
        else:
            best, _, evals = tabu_search(inst, spec.kind, None, budget, DEFAULT_TENURE, rng)
        return record_from_best(format_spec(spec), inst, seed, best, evals,
                                time.perf_counter() - started)
    raise InvalidParameter(f"not an algorithm spec: {spec!r}")


def default_runs(spec) -> int:
    if isinstance(spec, CooperativeSpec):
        return len(expand_members(spec)) * COOP_RUNS_PER_AGENT
    return DEFAULT_RUNS


def _job(args):
    inst, text, budget, seed, cycles = args
    return run_algorithm(inst, parse_spec(text), budget, seed, cycles)


def run_experiment(instances: Sequence[ProblemInstance], specs: Sequence, runs: Optional[int] = None,
                   percent: float = DEFAULT_PERCENT, seed0: int = 0, budget: Optional[int] = None,
                   cycles: int = DEFAULT_CYCLES, workers: int = 1) -> list[RunRecord]:
    """Run every spec on every instance with seeds ``seed0 .. seed0 + runs - 1``.

    ``runs=None`` means 20 runs for single algorithms and ten per agent for
    cooperative ones. ``budget`` overrides the percentage-based budget.
    Records come back sorted by (algorithm, instance, seed) whatever the
    worker count.
    """
    if not instances or not specs:
        raise EmptyInput("need at least one instance and one algorithm")
    parsed = [parse_spec(s) if isinstance(s, str) else s for s in specs]
    jobs = []
    for spec in parsed:
        n_runs = default_runs(spec) if runs is None else runs
        if n_runs < 1:
            raise InvalidParameter(f"runs must be positive, got {n_runs}")
        for inst in instances:
            b = budget if budget is not None else compute_budget(inst, percent)
            for r in range(n_runs):
                jobs.append((inst, format_spec(spec), b, seed0 + r, cycles))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_job, jobs))
    else:
        records = [_job(j) for j in jobs]
    return sorted(records, key=lambda r: r.key)


# --------------------------------------------------------------- summaries

@dataclass(frozen=True)
class FeasibilityCount:
    feasible: int
    runs: int

    @property
    def percent(self) -> float:
        return 100.0 * self.feasible / self.runs

    def __str__(self) -> str:
        return f"{self.feasible} ({self.percent:.2f} %)"


def _cells(records: Iterable[RunRecord]) -> dict[tuple[str, str], list[RunRecord]]:
    cells: dict[tuple[str, str], list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.algorithm, r.instance), []).append(r)
    return cells


def feasibility_summary(records: Iterable[RunRecord]) -> dict[tuple[str, str], FeasibilityCount]:
    cells = _cells(records)
    if not cells:
        raise EmptyInput("no records to summarise")
    return {key: FeasibilityCount(sum(r.feasible for r in rs), len(rs))
            for key, rs in sorted(cells.items())}


def _ordered_unique(items: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(items))


def rank_algorithms(records: Sequence[RunRecord], algorithms: Optional[Sequence[str]] = None,
                    instances: Optional[Sequence[str]] = None) -> RankTable:
    """Rank algorithms on each instance by feasible-run count."""
    records = list(records)
    if not records:
        raise EmptyInput("no records to rank")
    algorithms = list(algorithms) if algorithms else _ordered_unique(r.algorithm for r in records)
    instances = list(instances) if instances else _ordered_unique(r.instance for r in records)
    counts = {key: c.feasible for key, c in feasibility_summary(records).items()}
    missing = [(a, i) for a in algorithms for i in instances if (a, i) not in counts]
    if missing:
        a, i = missing[0]
        raise InvalidInput(f"no runs of {a!r} on {i!r}")
    return rank_table(counts, algorithms, instances)


# ------------------------------------------------------------- persistence

def sidecar_path(csv_path: Union[str, Path]) -> Path:
    return Path(csv_path).with_suffix(".json")


def _opt_int(text: str) -> Optional[int]:
    return None if text == "" else int(text)


def write_records(records: Sequence[RunRecord], path: Union[str, Path]) -> tuple[Path, Path]:
    """Write the CSV table and its JSON sidecar of best solutions."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow([r.algorithm, r.instance, r.seed, r.evals_used,
                        "" if r.best_waste is None else r.best_waste,
                        "" if r.violation is None else r.violation,
                        int(r.feasible), repr(float(r.wall_time))])
    side = {
        "records": [
            {
                "algorithm": r.algorithm,
                "instance": r.instance,
                "seed": r.seed,
                "solution": None if r.solution is None else genotype_to_dict(r.solution),
                "plan": None if r.plan is None else r.plan.to_dict(),
            }
            for r in records
        ]
    }
    spath = sidecar_path(path)
    spath.write_text(json.dumps(side, indent=1))
    return path, spath


def _plan_from_dict(d: dict) -> PressingPlan:
    return PressingPlan(
        pressings=tuple(d["pressings"]),
        production=tuple(d["production"]),
        under=tuple(d["under"]),
        over=tuple(d["over"]),
        waste=int(d["waste"]),
        violation=int(d["violation"]),
        feasible=bool(d["feasible"]),
    )


def read_records(path: Union[str, Path]) -> list[RunRecord]:
    """Load records written by :func:`write_records`; the sidecar is optional."""
    path = Path(path)
    extras = {}
    spath = sidecar_path(path)
    if spath.exists():
        for d in json.loads(spath.read_text())["records"]:
            extras[(d["algorithm"], d["instance"], int(d["seed"]))] = d
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(f not in reader.fieldnames for f in CSV_FIELDS):
            raise InvalidInput(f"{path}: expected columns {', '.join(CSV_FIELDS)}")
        for row in reader:
            key = (row["algorithm"], row["instance"], int(row["seed"]))
            extra = extras.get(key, {})
            sol = extra.get("solution")
            plan = extra.get("plan")
            wall = float(row["wall_time"]) if row["wall_time"] else 0.0
            out.append(RunRecord(
                algorithm=key[0],
                instance=key[1],
                seed=key[2],
                evals_used=int(row["evals_used"]),
                best_waste=_opt_int(row["best_waste"]),
                violation=_opt_int(row["violation"]),
                feasible=row["feasible"].strip().lower() in ("1", "true"),
                solution=None if sol is None else genotype_from_dict(sol),
                plan=None if plan is None else _plan_from_dict(plan),
                wall_time=0.0 if math.isnan(wall) else wall,
            ))
    return out
