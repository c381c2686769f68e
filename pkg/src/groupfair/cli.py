"""Command line entry point: ``groupfair <subcommand> ...`` (or ``python -m groupfair``)."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .core import DiscreteAllocation, Instance, fairness_report
from .ef1_two_groups import solve_two_couples
from .experiments import (ExperimentConfig, emit_report, load_dataset, report_csv, run_pairing_experiment,
                          save_dataset, synth_spliddit_like)
from .instance_io import load_instance
from .iterative_rounding import EliminationPolicy, run_iterative_rounding_detailed
from .oracle import (BudgetExceeded, gen_ef1_counterexample, gen_prop1_counterexample, parse_predicate,
                     search_allocation)
from .pareto import is_fpo
from .special_prop1 import METHODS, solve_special


def _show_alloc(instance: Instance, alloc: DiscreteAllocation) -> None:
    for g, bundle in enumerate(alloc.bundles(instance.n)):
        print(f"group {g}: goods {sorted(bundle)}")


def _show_report(instance: Instance, alloc: DiscreteAllocation) -> None:
    for line in fairness_report(instance, alloc).lines():
        print(line)


def cmd_two_couples(args) -> int:
    inst = load_instance(args.instance)
    res = solve_two_couples(inst)
    print(f"rounding case: {res.case.value}; LP gap d = {res.lpd.d}")
    _show_alloc(inst, res.allocation)
    _show_report(inst, res.allocation)
    return 0


def cmd_prop(args) -> int:
    inst = load_instance(args.instance)
    res = run_iterative_rounding_detailed(inst, EliminationPolicy(args.policy))
    print(f"policy {args.policy}: {res.iterations} rounds")
    for e in res.eliminations:
        print(f"  round {e.iteration}: removed {e.agent} with PROP-{e.bound} guarantee "
              f"(group weight {e.weight})")
    _show_alloc(inst, res.allocation)
    _show_report(inst, res.allocation)
    verdict = is_fpo(inst, res.allocation)
    print(f"fPO: {verdict.holds} (domination LP optimum {verdict.optimum})")
    return 0


def cmd_special(args) -> int:
    inst = load_instance(args.instance)
    name, alloc = solve_special(inst, args.method)
    print(f"method: {name}")
    _show_alloc(inst, alloc)
    _show_report(inst, alloc)
    return 0


def cmd_counterexample(args) -> int:
    inst = gen_ef1_counterexample(args.n) if args.kind == "ef1" else gen_prop1_counterexample(args.n)
    pred = parse_predicate(args.kind)
    total = inst.n ** inst.m
    t = time.perf_counter()
    try:
        res = search_allocation(inst, pred, args.budget, prune=args.prune)
    except BudgetExceeded as e:
        print(f"inconclusive: {e}")
        return 2
    secs = time.perf_counter() - t
    print(f"{inst.n} groups of {inst.group_sizes[0]}, {inst.m} goods, {total} allocations")
    if res.exists:
        print(f"{pred.name} allocation found: {res.witness.owner}")
        return 1
    print(f"no {pred.name} allocation ({res.engine} search, {res.evaluations} evaluations, {secs:.2f}s)")
    return 0


def cmd_exists(args) -> int:
    inst = load_instance(args.instance)
    pred = parse_predicate(args.predicate)
    try:
        res = search_allocation(inst, pred, args.budget, prune=not args.exhaustive)
    except BudgetExceeded as e:
        print(f"inconclusive: {e}")
        return 2
    if res.exists:
        print(f"{pred.name}: exists ({res.engine}, {res.evaluations} evaluations)")
        _show_alloc(inst, res.witness)
    else:
        print(f"{pred.name}: none exists ({res.engine}, {res.evaluations} evaluations)")
    return 0


def cmd_experiment(args) -> int:
    if args.dataset == "synthetic":
        dataset = synth_spliddit_like(args.num_instances, args.seed)
    else:
        dataset = load_dataset(args.dataset)
    if args.save_dataset:
        save_dataset(dataset, args.save_dataset)
    cfg = ExperimentConfig(limit=args.limit, seed=args.seed, oracle_budget=args.budget,
                           resamples=args.resamples, min_agents=args.min_agents, max_agents=args.max_agents,
                           min_goods=args.min_goods, max_goods=args.max_goods, workers=args.workers,
                           milp_nodes=None if args.no_milp else args.milp_nodes)

    def progress(item, recs):
        if args.verbose:
            print(f"{item.name}: {item.num_agents} agents, {item.num_goods} goods, {len(recs)} pairings",
                  file=sys.stderr)

    report = run_pairing_experiment(dataset, cfg, progress)
    if args.out:
        emit_report(report, args.out, "csv")
        emit_report(report, Path(args.out).with_suffix(".meta.json"), "json")
    else:
        sys.stdout.write(report_csv(report))
    if args.chart:
        emit_report(report, args.chart, "svg")
    skipped = {k: v for k, v in report.metadata["inconclusive"].items() if v}
    print(f"{report.metadata['instances']} instances, {report.metadata['pairings']} pairings; "
          f"inconclusive cells: {skipped or 'none'}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupfair", description="Fair division of indivisible goods among groups.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-two-couples", help="balanced EF1 allocation for two groups, four agents")
    s.add_argument("instance")
    s.set_defaults(func=cmd_two_couples)

    s = sub.add_parser("solve-prop", help="iterative rounding: fPO and PROP-i for the i-th agent")
    s.add_argument("instance")
    s.add_argument("--policy", choices=[e.value for e in EliminationPolicy], default="remove-all")
    s.set_defaults(func=cmd_prop)

    s = sub.add_parser("solve-special", help="PROP1 (or EF1) for the special couple families")
    s.add_argument("instance")
    s.add_argument("--method", choices=["auto", *METHODS], default="auto")
    s.set_defaults(func=cmd_special)

    s = sub.add_parser("verify-counterexample", help="exhaustively confirm a nonexistence instance")
    s.add_argument("kind", choices=["ef1", "prop1"])
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--budget", type=int, default=10 ** 8)
    s.add_argument("--prune", action="store_true", help="pruned search instead of plain enumeration")
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("exists", help="does an allocation with the given property exist?")
    s.add_argument("instance")
    s.add_argument("--predicate", default="EF1", help="EF, EF1, EF-k, EFX, PROP, PROPk, balanced-EF1, ...")
    s.add_argument("--budget", type=int, default=10 ** 8)
    s.add_argument("--exhaustive", action="store_true")
    s.set_defaults(func=cmd_exists)

    s = sub.add_parser("experiment", help="pairing experiment over individual-agent instances")
    s.add_argument("--dataset", required=True, help="directory of instance files, or 'synthetic'")
    s.add_argument("--num-instances", type=int, default=100, help="size of the synthetic dataset")
    s.add_argument("--save-dataset", help="write the dataset used to this directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--limit", type=int, default=1000, help="pairings per instance")
    s.add_argument("--budget", type=int, default=10 ** 6, help="oracle evaluations per cell")
    s.add_argument("--milp-nodes", type=int, default=2000)
    s.add_argument("--no-milp", action="store_true")
    s.add_argument("--resamples", type=int, default=10_000)
    s.add_argument("--min-agents", type=int, default=4)
    s.add_argument("--max-agents", type=int)
    s.add_argument("--min-goods", type=int, default=1)
    s.add_argument("--max-goods", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="CSV path (metadata goes next to it as .meta.json)")
    s.add_argument("--chart", help="SVG path")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
