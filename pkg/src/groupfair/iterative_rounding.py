"""Iterative LP rounding towards an fPO allocation that is PROP-i for agent (g, i).

State: the goods ``M'`` still unallocated, the agents still "active" in each
group, the allowed edges ``E`` (good, group) and the bundles ``B_g`` fixed so
far.  Each round solves the polytope

    sum_{(a, g) in E} x_ag u_gi(a) >= u_gi(M)/n - u_gi(B_g)    active (g, i)
    sum_{(a, g) in E} x_ag = 1                                 a in M'
    0 <= x_ag <= 1                                             (a, g) in E

for a welfare-maximising vertex, freezes the edges at 0 and 1, and drops
agents from groups whose total incident weight is at most their active size.
A vertex always has a frozen edge or such a group, so the loop terminates.

Two elimination policies:

* ``REMOVE_ALL``: every eligible group loses its last active agent.
* ``REMOVE_BEST``: only the eligible group with the smallest incident weight
  loses one agent, the active one with the highest value for the group's
  current bundle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (AgentId, DiscreteAllocation, FractionalAllocation, Instance, InvariantError,
                   is_prop_k, prop_share)
from .pareto import is_fpo
from .rational_lp import EQ, GE, LE, BfsSolution, LinearProgram, solve_to_optimal_bfs


class EliminationPolicy(enum.Enum):
    REMOVE_ALL = "remove-all"
    REMOVE_BEST = "remove-best"


@dataclass
class RoundingState:
    instance: Instance
    remaining_goods: set[int]
    active: list[list[int]]             # active positions per group, ascending
    edges: list[tuple[int, int]]        # sorted (good, group) pairs
    bundles: list[set[int]]

    @classmethod
    def initial(cls, instance: Instance) -> "RoundingState":
        return cls(instance,
                   set(range(instance.m)),
                   [list(range(1, s + 1)) for s in instance.group_sizes],
                   [(a, g) for a in range(instance.m) for g in range(instance.n)],
                   [set() for _ in range(instance.n)])

    def check(self) -> None:
        if any(a not in self.remaining_goods for a, _ in self.edges):
            raise InvariantError("an edge references an allocated good")
        seen = set(self.remaining_goods)
        for b in self.bundles:
            if seen & b:
                raise InvariantError("a good is in two places")
            seen |= b
        if seen != set(range(self.instance.m)):
            raise InvariantError("a good went missing")

    def size(self) -> int:
        return len(self.edges) + sum(len(a) for a in self.active)


def build_prop_polytope(instance: Instance, state: RoundingState) -> LinearProgram:
    """Variables follow ``state.edges``.  Rows: agents, then goods, then ``x >= 0``, ``x <= 1``."""
    index = {e: j for j, e in enumerate(state.edges)}
    lp = LinearProgram(len(state.edges))
    for g, positions in enumerate(state.active):
        for i in positions:
            vals = instance.groups[g][i - 1]
            coeffs = {index[a, h]: vals[a] for a, h in state.edges if h == g and vals[a]}
            have = sum((vals[a] for a in state.bundles[g]), Fraction(0))
            lp.add(coeffs, GE, prop_share(instance, AgentId(g, i)) - have)
    for a in sorted(state.remaining_goods):
        lp.add({index[e]: 1 for e in state.edges if e[0] == a}, EQ, 1)
    for j in range(len(state.edges)):
        lp.add({j: 1}, GE, 0)
    for j in range(len(state.edges)):
        lp.add({j: 1}, LE, 1)
    welfare = {}
    for j, (a, g) in enumerate(state.edges):
        w = sum((row[a] for row in instance.groups[g]), Fraction(0))
        if w:
            welfare[j] = w
    lp.set_objective(welfare, maximize=True)
    return lp


def initial_fpo_bfs(instance: Instance) -> BfsSolution:
    """Welfare-maximising vertex of the starting polytope (edge order: good-major)."""
    state = RoundingState.initial(instance)
    sol = solve_to_optimal_bfs(build_prop_polytope(instance, state))
    if not sol.optimal:
        raise InvariantError(f"initial polytope is {sol.status.value}; the 1/n split is feasible")
    return sol


def fractional_from_edges(instance: Instance, edges, values) -> FractionalAllocation:
    shares = [[Fraction(0)] * instance.n for _ in range(instance.m)]
    for (a, g), x in zip(edges, values):
        shares[a][g] = x
    return FractionalAllocation(tuple(tuple(r) for r in shares))


@dataclass(frozen=True)
class Classification:
    integral_edges: frozenset[tuple[int, int]]
    light_groups: frozenset[int]          # nonempty groups with weight <= active size
    weights: tuple[Fraction, ...]

    @property
    def empty(self) -> bool:
        return not self.integral_edges and not self.light_groups


def lemma1_classify(bfs: BfsSolution, state: RoundingState) -> Classification:
    if not state.remaining_goods:
        raise ValueError("nothing left to classify")
    weights = [Fraction(0)] * state.instance.n
    integral = set()
    for e, x in zip(state.edges, bfs.values):
        weights[e[1]] += x
        if x in (0, 1):
            integral.add(e)
    light = frozenset(g for g, pos in enumerate(state.active) if pos and weights[g] <= len(pos))
    c = Classification(frozenset(integral), light, tuple(weights))
    if c.empty:
        raise InvariantError("vertex with no integral edge and no light group")
    return c


@dataclass(frozen=True)
class Elimination:
    agent: AgentId
    iteration: int
    bound: int          # PROP-bound guaranteed: active size of the group at removal
    weight: Fraction    # incident weight of the group at removal
    top_value: Fraction  # value of the agent's `bound` best remaining goods
    deficit: Fraction   # u(M)/n - u(B_g) at removal


@dataclass(frozen=True)
class IterativeRoundingResult:
    allocation: DiscreteAllocation
    policy: EliminationPolicy
    eliminations: tuple[Elimination, ...]
    iterations: int
    initial: FractionalAllocation
    classifications: tuple[Classification, ...] = field(repr=False, default=())

    def bound(self, agent: AgentId) -> int:
        """PROP-k level this run guarantees for ``agent`` (0 if never eliminated)."""
        return next((e.bound for e in self.eliminations if e.agent == agent), 0)


def _top_value(vals, goods, k: int) -> Fraction:
    return sum(sorted((vals[a] for a in goods), reverse=True)[:k], Fraction(0))


def run_iterative_rounding_detailed(instance: Instance,
                                    policy: EliminationPolicy = EliminationPolicy.REMOVE_ALL,
                                    check_fpo: bool = True) -> IterativeRoundingResult:
    state = RoundingState.initial(instance)
    if instance.m == 0:
        empty = FractionalAllocation(())
        return IterativeRoundingResult(DiscreteAllocation(()), policy, (), 0, empty)
    sol = initial_fpo_bfs(instance)
    initial = fractional_from_edges(instance, state.edges, sol.values)
    if check_fpo and not is_fpo(instance, initial):
        raise InvariantError("welfare-maximising starting vertex is not fPO")
    initial_support = initial.support()

    log: list[Elimination] = []
    classes: list[Classification] = []
    t = 0
    while True:
        t += 1
        state.check()
        c = lemma1_classify(sol, state)
        classes.append(c)
        x = dict(zip(state.edges, sol.values))
        before = state.size()

        # who leaves, evaluated on the state at the start of the round
        if policy is EliminationPolicy.REMOVE_ALL:
            leaving = [(g, state.active[g][-1]) for g in sorted(c.light_groups)]
        else:
            leaving = []
            if c.light_groups:
                g = min(c.light_groups, key=lambda h: (c.weights[h], h))
                leaving = [(g, None)]
        for a, g in state.edges:
            if x[a, g] == 1:
                state.bundles[g].add(a)
        if policy is EliminationPolicy.REMOVE_BEST and leaving:
            g = leaving[0][0]
            # current bundles (after this round's freezing); ties -> highest position
            leaving = [(g, max(state.active[g], key=lambda i: (
                sum((instance.groups[g][i - 1][a] for a in state.bundles[g]), Fraction(0)), i)))]

        for g, i in leaving:
            k = len(state.active[g])
            vals = instance.groups[g][i - 1]
            had = {a for a in state.bundles[g] if x.get((a, g)) != 1}
            deficit = prop_share(instance, AgentId(g, i)) - sum((vals[a] for a in had), Fraction(0))
            top = _top_value(vals, state.remaining_goods, k)
            if top < deficit:
                raise InvariantError(f"eliminated {AgentId(g, i)} cannot reach PROP-{k}")
            log.append(Elimination(AgentId(g, i), t, k, c.weights[g], top, deficit))
            state.active[g].remove(i)

        state.remaining_goods -= {a for (a, g), v in x.items() if v == 1}
        state.edges = [e for e in state.edges if 0 < x[e] < 1]
        if state.size() >= before:
            raise InvariantError("round made no progress")
        if not state.remaining_goods:
            break

        lp = build_prop_polytope(instance, state)
        carried = [x[e] for e in state.edges]
        if not lp.is_feasible(carried):
            raise InvariantError("previous vertex is infeasible for the shrunken polytope")
        sol = solve_to_optimal_bfs(lp)
        if not sol.optimal:
            raise InvariantError(f"polytope became {sol.status.value}")

    owner = [-1] * instance.m
    for g, b in enumerate(state.bundles):
        for a in b:
            owner[a] = g
    alloc = DiscreteAllocation(tuple(owner))
    if any((a, g) not in initial_support for a, g in enumerate(alloc.owner)):
        raise InvariantError("final allocation leaves the starting support")
    result = IterativeRoundingResult(alloc, policy, tuple(log), t, initial, tuple(classes))
    for agent in instance.agents():
        k = result.bound(agent)
        if not is_prop_k(instance, alloc, agent, k):
            raise InvariantError(f"{agent} is not PROP-{k}")
        if policy is EliminationPolicy.REMOVE_ALL and k > agent.position:
            raise InvariantError(f"{agent} eliminated with bound {k}")
    return result


def run_iterative_rounding(instance: Instance,
                           policy: EliminationPolicy = EliminationPolicy.REMOVE_ALL) -> DiscreteAllocation:
    return run_iterative_rounding_detailed(instance, policy).allocation
