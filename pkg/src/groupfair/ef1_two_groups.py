"""Balanced EF1 allocations for two groups holding four agents in total.

The goods are ranked by the ordering agent ``(0, 1)`` and cut into
consecutive pairs.  Any allocation that gives each group exactly one good
of every pair is EF1 for the ordering agent, so only the other three agents
need attention.  The LP below maximises the smallest gap ``d`` by which
those three prefer their own fractional bundle; its optimal vertex has at
most two fractional pairs, and a short case analysis rounds them.

Group sizes (2, 2) and (3, 1) (in either order) are handled by the same
code: only the group an agent belongs to decides the sign of its row.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .core import (AgentId, DiscreteAllocation, FractionalAllocation, Instance, InvariantError,
                   PaddedInstance, is_balanced, is_ef_k, pad_with_dummies)
from .rational_lp import GE, LE, BfsSolution, LinearProgram, count_fractional, solve_to_optimal_bfs

ORDERING_AGENT = AgentId(0, 1)
HALF = Fraction(1, 2)


class GroupShapeError(ValueError):
    pass


def _check_shape(instance: Instance) -> None:
    if instance.n != 2 or sum(instance.group_sizes) != 4:
        raise GroupShapeError(
            f"need 2 groups with 4 agents in total, got sizes {instance.group_sizes}")


@dataclass(frozen=True)
class PairedInstance:
    """``pairs[j]`` are the (padded) goods ranked ``2j`` and ``2j + 1`` by the ordering agent."""

    base: Instance
    padded: PaddedInstance
    order: tuple[int, ...]

    @property
    def instance(self) -> Instance:
        return self.padded.instance

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        o = self.order
        return tuple((o[2 * j], o[2 * j + 1]) for j in range(len(o) // 2))

    def others(self) -> list[AgentId]:
        return [a for a in self.instance.agents() if a != ORDERING_AGENT]


def pair_goods(instance: Instance) -> PairedInstance:
    _check_shape(instance)
    padded = pad_with_dummies(instance, 2)
    vals = padded.instance.values(ORDERING_AGENT)
    order = tuple(sorted(range(padded.instance.m), key=lambda a: (-vals[a], a)))
    return PairedInstance(instance, padded, order)


def build_lpd(paired: PairedInstance) -> LinearProgram:
    """Variables ``y_0..y_{p-1}`` (group 0's share of the first good of each pair) and ``d``.

    Rows: one gap row per non-ordering agent, in agent order, then
    ``y_j >= 0`` and ``y_j <= 1`` for every pair.
    """
    inst = paired.instance
    p = len(paired.pairs)
    lp = LinearProgram(p + 1, names=[f"y{j}" for j in range(p)] + ["d"])
    for agent in paired.others():
        vals = inst.values(agent)
        sign = 1 if agent.group == 0 else -1
        # sign * sum_j (2 y_j - 1)(u(first) - u(second)) >= d
        diffs = [sign * (vals[a] - vals[b]) for a, b in paired.pairs]
        coeffs = {j: 2 * c for j, c in enumerate(diffs) if c}
        coeffs[p] = Fraction(-1)
        lp.add(coeffs, GE, sum(diffs, Fraction(0)))
    for j in range(p):
        lp.add({j: 1}, GE, 0)
    for j in range(p):
        lp.add({j: 1}, LE, 1)
    lp.set_objective({p: 1}, maximize=True)
    return lp


@dataclass(frozen=True)
class LpdSolution:
    """A normalised optimal vertex.

    ``f_good[j]`` is the good of pair ``j`` that group 0 holds at least half
    of (all of it for integral pairs) and ``s_good[j]`` the other one, so
    group 0 holds ``y[j] >= 1/2`` of ``f_good[j]``.  ``fractional`` lists the
    (at most two) pairs with ``1/2 <= y[j] < 1``.
    """

    y: tuple[Fraction, ...]
    d: Fraction
    f_good: tuple[int, ...]
    s_good: tuple[int, ...]
    fractional: tuple[int, ...]

    @property
    def integral_f(self) -> frozenset[int]:
        return frozenset(self.f_good[j] for j in range(len(self.y)) if j not in self.fractional)

    @property
    def integral_s(self) -> frozenset[int]:
        return frozenset(self.s_good[j] for j in range(len(self.y)) if j not in self.fractional)

    def z(self, j: int) -> Fraction:
        return 2 * self.y[j] - 1


def normalize_lpd_solution(paired: PairedInstance, bfs: BfsSolution) -> LpdSolution:
    if not bfs.optimal:
        raise InvariantError(f"LPd is {bfs.status.value}; y = 1/2, d = 0 is always feasible")
    p = len(paired.pairs)
    raw, d = bfs.values[:p], bfs.values[p]
    if d < 0:
        raise InvariantError(f"LPd optimum {d} is negative")
    if count_fractional(raw) > 2:
        raise InvariantError(f"LPd vertex has {count_fractional(raw)} fractional pairs")
    y, f_good, s_good = [], [], []
    for (a, b), v in zip(paired.pairs, raw):
        if v < HALF:
            a, b, v = b, a, 1 - v
        y.append(v)
        f_good.append(a)
        s_good.append(b)
    fractional = tuple(j for j, v in enumerate(y) if v < 1)
    return LpdSolution(tuple(y), d, tuple(f_good), tuple(s_good), fractional)


def solve_lpd(paired: PairedInstance) -> LpdSolution:
    return normalize_lpd_solution(paired, solve_to_optimal_bfs(build_lpd(paired)))


@dataclass(frozen=True)
class RoundingOption:
    """Which good of each fractional pair goes to group 0, and whether the integral parts swap.

    ``alpha_to_f`` True means group 0 receives ``f_good[alpha]`` (its
    larger share), likewise for ``beta_to_f``.
    """

    alpha_to_f: bool
    beta_to_f: bool
    swap_integral: bool = False

    @property
    def natural(self) -> bool:
        return self.alpha_to_f and self.beta_to_f and not self.swap_integral

    def partner(self) -> "RoundingOption":
        return RoundingOption(self.alpha_to_f, self.beta_to_f, not self.swap_integral)


def rounding_options(swap_integral: bool) -> list[RoundingOption]:
    """Natural rounding first, then (f, s), (s, f), (s, s)."""
    return [RoundingOption(a, b, swap_integral) for a, b in product((True, False), repeat=2)]


def apply_option(lpd: LpdSolution, option: RoundingOption, m: int) -> DiscreteAllocation:
    f_side = set(lpd.integral_s if option.swap_integral else lpd.integral_f)
    for j, to_f in zip(lpd.fractional, (option.alpha_to_f, option.beta_to_f)):
        f_side.add(lpd.f_good[j] if to_f else lpd.s_good[j])
    return DiscreteAllocation(tuple(0 if a in f_side else 1 for a in range(m)))


class RoundingCase(enum.Enum):
    NATURAL = "natural"          # fewer than two fractional pairs, or z_alpha + z_beta >= 1
    OPTIONS = "options"          # a common option among the four plain ones
    SWAPPED = "swapped"          # a common option only after swapping the integral parts


@dataclass(frozen=True)
class TwoCouplesResult:
    allocation: DiscreteAllocation
    padded_allocation: DiscreteAllocation
    paired: PairedInstance
    lpd: LpdSolution
    option: RoundingOption
    case: RoundingCase


def _prefers(vals, lpd: LpdSolution, j: int, group: int) -> bool:
    """Does an agent of ``group`` strictly prefer the other group's good of pair ``j``?"""
    mine, theirs = (lpd.f_good[j], lpd.s_good[j]) if group == 0 else (lpd.s_good[j], lpd.f_good[j])
    return vals[theirs] > vals[mine]


def solve_two_couples(instance: Instance) -> TwoCouplesResult:
    paired = pair_goods(instance)
    inst, m = paired.instance, paired.instance.m
    lpd = solve_lpd(paired)
    others = paired.others()

    def ef1(agent, option):
        return is_ef_k(inst, apply_option(lpd, option, m), agent, 1).holds

    natural = RoundingOption(True, True)
    chosen, case = None, RoundingCase.NATURAL
    if len(lpd.fractional) < 2 or lpd.z(lpd.fractional[0]) + lpd.z(lpd.fractional[1]) >= 1:
        chosen = natural
    else:
        alpha, beta = lpd.fractional
        plain, swapped = rounding_options(False), rounding_options(True)
        table = {(agent, o): ef1(agent, o) for agent in others for o in plain + swapped}
        for agent in others:
            vals = inst.values(agent)
            unhappy_both = (_prefers(vals, lpd, alpha, agent.group)
                            and _prefers(vals, lpd, beta, agent.group))
            if unhappy_both and not all(table[agent, o] for o in plain[1:]):
                raise InvariantError(f"agent {agent} unhappy with both goods but not EF1 off-natural")
            if not unhappy_both and not (table[agent, natural] and sum(table[agent, o] for o in plain) >= 2):
                raise InvariantError(f"agent {agent} happy with a good but EF1 under < 2 options")
            for o in plain:
                if not table[agent, o]:
                    if not all(table[agent, q.partner()] for q in plain if q != o):
                        raise InvariantError(f"swapping integral parts did not help agent {agent}")
        for pool, c in ((plain, RoundingCase.OPTIONS), (swapped, RoundingCase.SWAPPED)):
            chosen = next((o for o in pool if all(table[a, o] for a in others)), None)
            if chosen is not None:
                case = c
                break
        if chosen is None:
            raise InvariantError("no rounding option is EF1 for all three agents")

    padded_alloc = apply_option(lpd, chosen, m)
    for agent in inst.agents():
        if not is_ef_k(inst, padded_alloc, agent, 1):
            raise InvariantError(f"rounded allocation is not EF1 for {agent}")
    if not is_balanced(padded_alloc, 2):
        raise InvariantError("rounded allocation is not balanced")
    for a, b in paired.pairs:
        if padded_alloc.owner[a] == padded_alloc.owner[b]:
            raise InvariantError(f"pair ({a}, {b}) went to one group")
    return TwoCouplesResult(paired.padded.strip(padded_alloc), padded_alloc, paired, lpd, chosen, case)


def round_two_couples(instance: Instance) -> DiscreteAllocation:
    """A balanced allocation that is EF1 for all four agents."""
    return solve_two_couples(instance).allocation


def naive_ef_polytope_bfs(instance: Instance) -> FractionalAllocation:
    """Welfare-maximising vertex of the plain fractional EF polytope for two groups.

    This is the obvious starting point that does *not* round well; it is
    kept to exhibit the failure.
    """
    if instance.n != 2:
        raise GroupShapeError("the EF polytope here is for two groups")
    m = instance.m
    lp = LinearProgram(m)
    for agent in instance.agents():
        vals = instance.values(agent)
        # own share minus other share >= 0, with x = group 0's share
        rel = GE if agent.group == 0 else LE
        lp.add({a: 2 * v for a, v in enumerate(vals) if v}, rel, sum(vals, Fraction(0)))
    for a in range(m):
        lp.add({a: 1}, GE, 0)
        lp.add({a: 1}, LE, 1)
    welfare = [sum((row[a] for row in instance.groups[0]), Fraction(0))
               - sum((row[a] for row in instance.groups[1]), Fraction(0)) for a in range(m)]
    lp.set_objective(welfare, maximize=True)
    sol = solve_to_optimal_bfs(lp)
    if not sol.optimal:
        raise InvariantError("the equal split is EF, so the EF polytope is nonempty")
    return FractionalAllocation(tuple((x, 1 - x) for x in sol.values))
