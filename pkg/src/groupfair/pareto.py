"""Fractional Pareto optimality.

:func:`is_fpo` searches for a dominating fractional allocation with one LP:
variables ``y`` (a fractional allocation) and one slack ``eps`` per agent,

    maximize  sum(eps)
    s.t.      u_gi(y) - eps_gi >= u_gi(x)     for every agent
              sum_g y[a][g] = 1               for every good
              y >= 0, eps >= 0

``x`` is fPO exactly when the optimum is 0; otherwise the optimal ``y``
dominates it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (AgentId, FractionalAllocation, Instance, InvariantError, as_fractional,
                   as_rational, fractional_utility)
from .rational_lp import EQ, GE, LinearProgram, solve_to_optimal_bfs


@dataclass(frozen=True)
class FpoVerdict:
    holds: bool
    optimum: Fraction
    dominator: FractionalAllocation | None = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class WeightVector:
    """One strictly positive weight per agent, indexed ``w[g][i - 1]``."""

    w: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_rational(x) for x in row) for row in self.w)
        if any(x <= 0 for row in rows for x in row):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "w", rows)

    @classmethod
    def uniform(cls, instance: Instance) -> "WeightVector":
        return cls(tuple((1,) * size for size in instance.group_sizes))

    def __getitem__(self, agent: AgentId) -> Fraction:
        return self.w[agent.group][agent.position - 1]


def domination_lp(instance: Instance, alloc) -> LinearProgram:
    x = as_fractional(alloc, instance.n)
    m, n = instance.m, instance.n
    agents = list(instance.agents())
    lp = LinearProgram(m * n + len(agents))

    def var(a, g):
        return a * n + g

    for k, agent in enumerate(agents):
        vals = instance.values(agent)
        coeffs = {var(a, agent.group): vals[a] for a in range(m) if vals[a]}
        coeffs[m * n + k] = Fraction(-1)
        lp.add(coeffs, GE, fractional_utility(instance, agent, x.column(agent.group)))
    for a in range(m):
        lp.add({var(a, g): 1 for g in range(n)}, EQ, 1)
    for j in range(m * n + len(agents)):
        lp.add({j: 1}, GE, 0)
    lp.set_objective({m * n + k: 1 for k in range(len(agents))}, maximize=True)
    return lp


def is_fpo(instance: Instance, alloc) -> FpoVerdict:
    """Exact fPO test for a discrete or fractional allocation."""
    lp = domination_lp(instance, alloc)
    sol = solve_to_optimal_bfs(lp)
    if not sol.optimal:
        # x itself (with eps = 0) is feasible and the slacks are bounded
        raise InvariantError(f"domination LP reported {sol.status.value}")
    if sol.objective_value == 0:
        return FpoVerdict(True, sol.objective_value)
    n = instance.n
    shares = tuple(tuple(sol.values[a * n + g] for g in range(n)) for a in range(instance.m))
    return FpoVerdict(False, sol.objective_value, FractionalAllocation(shares))


def check_weighted_support(instance: Instance, alloc, weights: WeightVector | Sequence) -> bool:
    """Every good held (even partly) by ``g`` must maximise g's weighted group value."""
    if not isinstance(weights, WeightVector):
        weights = WeightVector(weights)
    x = as_fractional(alloc, instance.n)
    score = [[sum((weights[AgentId(g, i)] * instance.groups[g][i - 1][a]
                   for i in range(1, len(instance.groups[g]) + 1)), Fraction(0))
              for g in range(instance.n)] for a in range(instance.m)]
    return all(score[a][g] == max(score[a]) for a, g in x.support())
