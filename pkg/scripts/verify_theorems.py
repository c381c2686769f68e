"""Re-run the headline checks: the two nonexistence instances, the two
rounding algorithms on random instances, and the reduction's forward map.

    python scripts/verify_theorems.py [--fuzz 2000] [--seed 0]
"""
import argparse
import random
import time

from groupfair.core import Instance, is_balanced, is_ef1_for_all, is_prop_k
from groupfair.ef1_two_groups import round_two_couples
from groupfair.iterative_rounding import EliminationPolicy, run_iterative_rounding_detailed
from groupfair.oracle import (EF1, PROP1, ThreeDmInstance, forward_alloc, gen_ef1_counterexample,
                              gen_prop1_counterexample, reduce_3dm, search_allocation)
from groupfair.pareto import is_fpo


def timed(label, fn):
    t = time.perf_counter()
    ok = fn()
    print(f"{'PASS' if ok else 'FAIL'}  {label}  ({time.perf_counter() - t:.2f}s)")
    return ok


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--fuzz", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    ok = True

    for n in (3, 4):
        inst = gen_ef1_counterexample(n)
        ok &= timed(f"no EF1 allocation, {n} couples / {inst.m} goods",
                    lambda: not search_allocation(inst, EF1, prune=False).exists)
    inst = gen_prop1_counterexample(5)
    ok &= timed("no PROP1 allocation, 5 triples / 9 goods",
                lambda: not search_allocation(inst, PROP1, prune=False).exists)

    def two_couples():
        for _ in range(args.fuzz):
            sizes = rng.choice([(2, 2), (3, 1), (1, 3)])
            m = rng.randint(0, 12)
            groups = [[[rng.randint(0, 100) for _ in range(m)] for _ in range(s)] for s in sizes]
            inst = Instance(m, groups)
            alloc = round_two_couples(inst)
            if not (is_ef1_for_all(inst, alloc) and is_balanced(alloc, 2)):
                return False
        return True

    ok &= timed(f"two-group EF1 rounding on {args.fuzz} random instances", two_couples)

    def rounding():
        for _ in range(args.fuzz // 4):
            n = rng.randint(1, 4)
            m = rng.randint(0, 8)
            groups = [[[rng.randint(0, 20) for _ in range(m)] for _ in range(rng.randint(1, 3))]
                      for _ in range(n)]
            inst = Instance(m, groups)
            res = run_iterative_rounding_detailed(inst, EliminationPolicy.REMOVE_ALL)
            if not all(is_prop_k(inst, res.allocation, a, a.position) for a in inst.agents()):
                return False
            if not is_fpo(inst, res.allocation):
                return False
        return True

    ok &= timed(f"iterative rounding on {args.fuzz // 4} random instances", rounding)

    def reduction():
        for k in (1, 2):
            for _ in range(10):
                triples = [(i, i, i) for i in range(k)]
                for _ in range(rng.randint(0, 3)):
                    triples.append((rng.randrange(k), rng.randrange(k), rng.randrange(k)))
                tdm = ThreeDmInstance(k, tuple(dict.fromkeys(triples)))
                inst = reduce_3dm(tdm)
                alloc = forward_alloc(tdm, next(iter(tdm.perfect_matchings())))
                if not (is_ef1_for_all(inst, alloc) and PROP1.holds(inst, alloc)):
                    return False
        return True

    ok &= timed("reduction forward map gives PROP1 and EF1", reduction)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
