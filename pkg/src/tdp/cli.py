"""Command line: ``tdp solve | eval | rank | compare``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .algspec import format_spec, parse_spec, warn_policy
from .encoding import ClassicalGenotype, Genotype, as_classical, genotype_from_dict
from .errors import InvalidInput, TDPError
from .harness import (
    control_comparison,
    critical_values,
    feasibility_summary,
    friedman_statistic,
    iman_davenport,
    rank_algorithms,
    ranksum_test,
    read_records,
    run_experiment,
    write_records,
)
from .instance import ProblemInstance, resolve_instance
from .localsearch import DEFAULT_PERCENT
from .pressing import evaluate_with_pressings, optimize_pressings


def load_solution(path: str) -> tuple[Genotype, Optional[list[int]]]:
    """Read a solution file.

    Accepted shapes: a genotype object (``model`` and ``matrix``), the same
    nested under ``solution``, or ``templates`` given as one count vector per
    template. An optional ``pressings`` list fixes the pressing counts.
    """
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise InvalidInput("solution file must hold a JSON object")
    pressings = doc.get("pressings")
    if "templates" in doc:
        g: Genotype = ClassicalGenotype(np.asarray(doc["templates"], dtype=np.int64).T)
    elif "solution" in doc:
        g = genotype_from_dict(doc["solution"])
        pressings = pressings or (doc.get("plan") or {}).get("pressings")
    elif "matrix" in doc:
        g = genotype_from_dict(doc)
    else:
        raise InvalidInput("solution file needs 'templates', 'matrix' or 'solution'")
    return g, pressings


def format_report(inst: ProblemInstance, g: Genotype, plan) -> str:
    counts = as_classical(g, inst.v).matrix
    lines = [f"instance {inst.name}: v={inst.v} t={inst.t} s={inst.s}", ""]
    width = max(len(str(r)) for r in plan.pressings)
    for j in range(counts.shape[1]):
        row = ",".join(str(int(x)) for x in counts[:, j])
        lines.append(f"template {j + 1}: [{row}]  pressings {plan.pressings[j]:>{width}}")
    lines.append("")
    lines.append(f"{'var':>4} {'demand':>10} {'produced':>10} {'dev %':>8}")
    for i, (q, p) in enumerate(zip(inst.demands, plan.production)):
        lines.append(f"{i + 1:>4} {q:>10} {p:>10} {100.0 * (p - q) / q:>8.2f}")
    devs = plan.deviation_percentages(inst)
    lines.append("")
    lines.append(f"overall deviation {plan.overall_deviation(inst):.2f} %")
    lines.append(f"extreme deviations {min(devs):.2f} / {max(devs):.2f} %")
    lines.append(f"waste {plan.waste}")
    lines.append(f"violation {plan.violation}  feasible {'yes' if plan.feasible else 'no'}")
    return "\n".join(lines)


# ----------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    inst = resolve_instance(args.instance)
    spec = parse_spec(args.algo)
    warn_policy(spec)
    records = run_experiment([inst], [spec], runs=args.runs, percent=args.percent, seed0=args.seed,
                             budget=args.budget, cycles=args.cycles, workers=args.workers)
    for r in records:
        waste = "-" if r.best_waste is None else r.best_waste
        print(f"{r.algorithm} {r.instance} seed={r.seed} evals={r.evals_used} "
              f"waste={waste} violation={r.violation} feasible={r.feasible} time={r.wall_time:.2f}s")
    for (alg, name), c in feasibility_summary(records).items():
        print(f"{alg} on {name}: {c}")
    if args.out:
        csv_path, side = write_records(records, args.out)
        print(f"wrote {csv_path} and {side}")
    return 0


def cmd_eval(args) -> int:
    inst = resolve_instance(args.instance)
    g, pressings = load_solution(args.solution)
    if pressings is not None and not args.optimize:
        plan = evaluate_with_pressings(inst, g, pressings)
    else:
        plan = optimize_pressings(inst, g)
    print(format_report(inst, g, plan))
    return 0 if plan.feasible else 1


def cmd_rank(args) -> int:
    records = read_records(args.results)
    summary = feasibility_summary(records)
    instances = list(dict.fromkeys(r.instance for r in records))
    algorithms = list(dict.fromkeys(r.algorithm for r in records))
    name_w = max(len(a) for a in algorithms)
    print(f"{'algorithm':<{name_w}}  " + "  ".join(f"{i:>16}" for i in instances))
    for a in algorithms:
        cells = [str(summary[(a, i)]) if (a, i) in summary else "-" for i in instances]
        print(f"{a:<{name_w}}  " + "  ".join(f"{c:>16}" for c in cells))
    table = rank_algorithms(records, algorithms, instances)
    print()
    print("average ranks")
    for a, r in table.ordered():
        print(f"  {a:<{name_w}}  {r:.2f}")
    if args.stats:
        k, n = table.k, table.n
        if k < 2 or n < 2:
            print("\nstatistics need at least two algorithms and two instances")
            return 0
        chi2 = friedman_statistic(table)
        crit_chi2, crit_f = critical_values(args.alpha, n, k)
        print()
        print(f"Friedman chi2 {chi2:.6f}  critical {crit_chi2:.6f}")
        try:
            ff = iman_davenport(chi2, n, k)
            print(f"Iman-Davenport {ff:.6f}  critical {crit_f:.6f}")
        except TDPError as exc:
            print(f"Iman-Davenport undefined: {exc}")
        report = control_comparison(table, args.control, args.alpha)
        control = args.control or table.ordered()[0][0]
        print(f"\nHolm against control {control} (alpha {args.alpha})")
        print(f"  {'i':>3}  {'algorithm':<{name_w}}  {'z':>8}  {'p':>10}  {'alpha/i':>10}  reject")
        for row in sorted(report.rows, key=lambda r: -r.i):
            print(f"  {row.i:>3}  {row.label:<{name_w}}  {row.z:>8.4f}  {row.p:>10.3e}  "
                  f"{row.threshold:>10.3e}  {'yes' if row.rejected else 'no'}")
    return 0


def cmd_compare(args) -> int:
    records = read_records(args.results)
    names = {r.algorithm for r in records}
    control = args.control if args.control in names else format_spec(parse_spec(args.control))
    by_cell: dict[tuple[str, str], list[float]] = {}
    for r in records:
        by_cell.setdefault((r.algorithm, r.instance), []).append(float(r.feasible))
    instances = list(dict.fromkeys(r.instance for r in records))
    others = [a for a in dict.fromkeys(r.algorithm for r in records) if a != control]
    if not any(a == control for a, _ in by_cell):
        raise InvalidInput(f"no runs of control {control!r} in {args.results}")
    print(f"rank-sum p-values against {control} (feasible-run indicators)")
    for inst in instances:
        base = by_cell.get((control, inst))
        if not base:
            continue
        print(f"\n{inst}")
        for a in others:
            sample = by_cell.get((a, inst))
            if not sample:
                continue
            p = ranksum_test(base, sample)
            sign = "=" if p >= args.alpha else ("+" if np.mean(base) > np.mean(sample) else "-")
            print(f"  {a:<40} p={p:.4f}  {sign}")
    return 0


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdp", description="Template design metaheuristics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run an algorithm on an instance")
    p.add_argument("--instance", required=True, help="builtin:<name> or a JSON file")
    p.add_argument("--algo", required=True, help='algorithm notation, e.g. "Ma.Hc.P*.A2.Ux"')
    p.add_argument("--runs", type=int, default=None,
                   help="runs per instance (default 20, or 10 per agent for cooperative specs)")
    p.add_argument("--seed", type=int, default=0, help="seed of the first run")
    p.add_argument("--percent", type=float, default=DEFAULT_PERCENT,
                   help="neighbourhood fraction that sets the budget")
    p.add_argument("--budget", type=int, default=None, help="explicit evaluation budget")
    p.add_argument("--cycles", type=int, default=5, help="synchronisation cycles (cooperative)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default=None, help="CSV output path (a JSON sidecar is written next to it)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="evaluate a stored solution")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True, help="solution JSON file")
    p.add_argument("--optimize", action="store_true", help="ignore stored pressings and re-solve them")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="feasibility table, ranks and tests")
    p.add_argument("--results", required=True)
    p.add_argument("--stats", action="store_true", help="add Friedman, Iman-Davenport and Holm")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--control", default=None, help="control algorithm for Holm (default: best ranked)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("compare", help="rank-sum comparison against a control")
    p.add_argument("--results", required=True)
    p.add_argument("--control", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TDPError, OSError, json.JSONDecodeError) as exc:
        print(f"tdp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
