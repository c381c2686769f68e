"""Instances, allocations and the fairness predicates over them.

Goods are 0-based indices ``0..m-1``.  Groups are 0-based; agents inside a
group are addressed by a 1-based position, so ``AgentId(0, 1)`` is the first
agent of the first group.  Every value is a :class:`fractions.Fraction`;
nothing in this module touches floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

Rational = Fraction


class InvariantError(RuntimeError):
    """An internal guarantee was violated (indicates a bug, not bad input)."""


class AgentId(NamedTuple):
    group: int
    position: int  # 1-based

    def __str__(self) -> str:
        return f"({self.group},{self.position})"


def as_rational(value) -> Fraction:
    """Exact conversion; floats are rejected because they are not exact."""
    if isinstance(value, bool):
        raise TypeError("booleans are not valuations")
    if isinstance(value, float):
        raise TypeError(f"float {value!r} is not exact; pass a str or Fraction")
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


@dataclass(frozen=True)
class Instance:
    """Goods, groups and per-agent additive valuations.

    ``groups[g][i - 1][alpha]`` is the value of agent ``(g, i)`` for good
    ``alpha``.  Construction accepts nested lists of ints/str/Fraction and
    normalises them into tuples of Fractions.
    """

    num_goods: int
    groups: tuple

    def __post_init__(self):
        if self.num_goods < 0:
            raise ValueError("num_goods must be nonnegative")
        norm = []
        for g, group in enumerate(self.groups):
            agents = []
            for i, row in enumerate(group, start=1):
                vals = tuple(as_rational(v) for v in row)
                if len(vals) != self.num_goods:
                    raise ValueError(
                        f"agent ({g},{i}) has {len(vals)} values, expected {self.num_goods}")
                if any(v < 0 for v in vals):
                    raise ValueError(f"agent ({g},{i}) has a negative value")
                agents.append(vals)
            if not agents:
                raise ValueError(f"group {g} has no agents")
            norm.append(tuple(agents))
        if not norm:
            raise ValueError("an instance needs at least one group")
        object.__setattr__(self, "groups", tuple(norm))

    @property
    def n(self) -> int:
        return len(self.groups)

    @property
    def m(self) -> int:
        return self.num_goods

    @property
    def group_sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def agents(self) -> Iterator[AgentId]:
        for g, group in enumerate(self.groups):
            for i in range(1, len(group) + 1):
                yield AgentId(g, i)

    def values(self, agent: AgentId) -> tuple[Fraction, ...]:
        g, i = agent
        if not 0 <= g < self.n or not 1 <= i <= len(self.groups[g]):
            raise IndexError(f"no agent {tuple(agent)}")
        return self.groups[g][i - 1]

    def total(self, agent: AgentId) -> Fraction:
        return sum(self.values(agent), Fraction(0))

    def is_binary(self) -> bool:
        return all(v in (0, 1) for grp in self.groups for row in grp for v in row)

    def with_goods(self, goods: Sequence[int]) -> "Instance":
        """Restriction/reordering to the listed goods."""
        return Instance(len(goods), tuple(
            tuple(tuple(row[a] for a in goods) for row in grp) for grp in self.groups))


@dataclass(frozen=True)
class DiscreteAllocation:
    """``owner[alpha]`` is the group that receives good ``alpha``."""

    owner: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "owner", tuple(int(o) for o in self.owner))

    @classmethod
    def from_bundles(cls, bundles: Sequence[Iterable[int]], m: int) -> "DiscreteAllocation":
        owner = [-1] * m
        for g, bundle in enumerate(bundles):
            for a in bundle:
                if owner[a] != -1:
                    raise ValueError(f"good {a} assigned twice")
                owner[a] = g
        if -1 in owner:
            raise ValueError(f"good {owner.index(-1)} unassigned")
        return cls(tuple(owner))

    def bundles(self, n: int) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in range(n)]
        for a, g in enumerate(self.owner):
            out[g].add(a)
        return tuple(frozenset(b) for b in out)

    def bundle(self, g: int) -> frozenset[int]:
        return frozenset(a for a, o in enumerate(self.owner) if o == g)

    def validate(self, instance: Instance) -> None:
        if len(self.owner) != instance.m:
            raise ValueError(f"allocation covers {len(self.owner)} goods, instance has {instance.m}")
        for a, g in enumerate(self.owner):
            if not 0 <= g < instance.n:
                raise ValueError(f"good {a} assigned to nonexistent group {g}")

    def truncate(self, m: int) -> "DiscreteAllocation":
        return DiscreteAllocation(self.owner[:m])


@dataclass(frozen=True)
class FractionalAllocation:
    """``shares[alpha][g]`` is the fraction of good ``alpha`` held by group ``g``."""

    shares: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_rational(x) for x in row) for row in self.shares)
        for a, row in enumerate(rows):
            if any(x < 0 or x > 1 for x in row):
                raise ValueError(f"share of good {a} outside [0,1]")
            if sum(row) != 1:
                raise ValueError(f"shares of good {a} sum to {sum(row)}, not 1")
        object.__setattr__(self, "shares", rows)

    @classmethod
    def from_discrete(cls, alloc: DiscreteAllocation, n: int) -> "FractionalAllocation":
        return cls(tuple(tuple(Fraction(int(g == o)) for g in range(n)) for o in alloc.owner))

    def column(self, g: int) -> tuple[Fraction, ...]:
        return tuple(row[g] for row in self.shares)

    def support(self) -> frozenset[tuple[int, int]]:
        return frozenset((a, g) for a, row in enumerate(self.shares)
                         for g, x in enumerate(row) if x > 0)

    def is_integral(self) -> bool:
        return all(x in (0, 1) for row in self.shares for x in row)

    def to_discrete(self) -> DiscreteAllocation:
        if not self.is_integral():
            raise ValueError("allocation is fractional")
        return DiscreteAllocation(tuple(row.index(1) for row in self.shares))


def as_fractional(alloc, n: int) -> FractionalAllocation:
    if isinstance(alloc, FractionalAllocation):
        return alloc
    return FractionalAllocation.from_discrete(alloc, n)


# --------------------------------------------------------------------------
# utilities

def _check_goods(instance: Instance, goods: Iterable[int]) -> list[int]:
    goods = list(goods)
    for a in goods:
        if not 0 <= a < instance.m:
            raise IndexError(f"good {a} out of range [0, {instance.m})")
    return goods


def utility(instance: Instance, agent: AgentId, bundle: Iterable[int]) -> Fraction:
    vals = instance.values(agent)
    return sum((vals[a] for a in _check_goods(instance, bundle)), Fraction(0))


def fractional_utility(instance: Instance, agent: AgentId, shares: Sequence) -> Fraction:
    """Value of a fractional bundle given as one share per good."""
    vals = instance.values(agent)
    if len(shares) != instance.m:
        raise IndexError(f"fractional bundle has {len(shares)} entries, instance has {instance.m}")
    return sum((as_rational(x) * v for x, v in zip(shares, vals)), Fraction(0))


def prop_share(instance: Instance, agent: AgentId) -> Fraction:
    return instance.total(agent) / instance.n


def _ranked(vals: Sequence[Fraction], goods: Iterable[int]) -> list[int]:
    """Goods by decreasing value, ties by index."""
    return sorted(goods, key=lambda a: (-vals[a], a))


# --------------------------------------------------------------------------
# fairness predicates

@dataclass(frozen=True)
class Verdict:
    """Outcome of a fairness check.

    ``witness`` maps each relevant group to the goods removed from (EF-k,
    EFX) or added to (PROP-k) a bundle.  ``culprit`` is the first group that
    breaks the property, if any.
    """

    holds: bool
    witness: Mapping = field(default_factory=dict)
    culprit: int | None = None

    def __bool__(self) -> bool:
        return self.holds


def _own_and_bundles(instance, alloc, agent):
    alloc.validate(instance)
    bundles = alloc.bundles(instance.n)
    return instance.values(agent), bundles[agent.group], bundles


def _envy_removals(vals, own_value, other) -> tuple[int, ...] | None:
    """Shortest top-valued prefix of ``other`` whose removal kills the envy."""
    remaining = sum((vals[a] for a in other), Fraction(0))
    removed: list[int] = []
    for a in _ranked(vals, other):
        if own_value >= remaining:
            return tuple(removed)
        removed.append(a)
        remaining -= vals[a]
    return tuple(removed) if own_value >= remaining else None


def is_ef_k(instance: Instance, alloc: DiscreteAllocation, agent: AgentId, k: int) -> Verdict:
    """EF-k for one agent.

    With additive values the best removal set is the ``k`` goods of the
    envied bundle the agent likes most, so no subset search is needed here;
    :func:`is_ef_k_bruteforce` is the subset-enumerating reference.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    vals, own, bundles = _own_and_bundles(instance, alloc, agent)
    own_value = sum((vals[a] for a in own), Fraction(0))
    witness = {}
    for h, other in enumerate(bundles):
        if h == agent.group:
            continue
        removal = _envy_removals(vals, own_value, other)
        if removal is None or len(removal) > k:
            return Verdict(False, witness, culprit=h)
        witness[h] = frozenset(removal)
    return Verdict(True, witness)


def is_ef_k_bruteforce(instance: Instance, alloc: DiscreteAllocation, agent: AgentId, k: int) -> bool:
    vals, own, bundles = _own_and_bundles(instance, alloc, agent)
    own_value = sum((vals[a] for a in own), Fraction(0))
    for h, other in enumerate(bundles):
        if h == agent.group:
            continue
        other = sorted(other)
        total = sum((vals[a] for a in other), Fraction(0))
        if not any(own_value >= total - sum((vals[a] for a in sub), Fraction(0))
                   for r in range(min(k, len(other)) + 1)
                   for sub in combinations(other, r)):
            return False
    return True


def is_prop_k(instance: Instance, alloc: DiscreteAllocation, agent: AgentId, k: int) -> Verdict:
    if k < 0:
        raise ValueError("k must be nonnegative")
    vals, own, _ = _own_and_bundles(instance, alloc, agent)
    target = prop_share(instance, agent)
    value = sum((vals[a] for a in own), Fraction(0))
    added: list[int] = []
    outside = _ranked(vals, (a for a in range(instance.m) if a not in own))
    for a in outside:
        if value >= target or len(added) == k:
            break
        added.append(a)
        value += vals[a]
    if value >= target:
        return Verdict(True, {agent.group: frozenset(added)})
    return Verdict(False, {}, culprit=agent.group)


def is_prop_k_bruteforce(instance: Instance, alloc: DiscreteAllocation, agent: AgentId, k: int) -> bool:
    vals, own, _ = _own_and_bundles(instance, alloc, agent)
    target = prop_share(instance, agent)
    base = sum((vals[a] for a in own), Fraction(0))
    outside = [a for a in range(instance.m) if a not in own]
    return any(base + sum((vals[a] for a in sub), Fraction(0)) >= target
               for r in range(min(k, len(outside)) + 1)
               for sub in combinations(outside, r))


def is_efx(instance: Instance, alloc: DiscreteAllocation, agent: AgentId) -> Verdict:
    """Envy must vanish after removing *any* positively valued good.

    Removing the least valuable positive good is the hardest case, so that
    is the only one checked.  Zero-valued goods are never removed.
    """
    vals, own, bundles = _own_and_bundles(instance, alloc, agent)
    own_value = sum((vals[a] for a in own), Fraction(0))
    witness = {}
    for h, other in enumerate(bundles):
        if h == agent.group:
            continue
        other_value = sum((vals[a] for a in other), Fraction(0))
        if own_value >= other_value:
            continue
        positive = [a for a in other if vals[a] > 0]
        if not positive:
            return Verdict(False, witness, culprit=h)
        weakest = min(positive, key=lambda a: (vals[a], a))
        if own_value < other_value - vals[weakest]:
            return Verdict(False, witness, culprit=h)
        witness[h] = frozenset({weakest})
    return Verdict(True, witness)


def min_ef_k(instance: Instance, alloc: DiscreteAllocation, agent: AgentId) -> int:
    """Smallest k for which the agent is EF-k."""
    vals, own, bundles = _own_and_bundles(instance, alloc, agent)
    own_value = sum((vals[a] for a in own), Fraction(0))
    return max((len(_envy_removals(vals, own_value, b))
                for h, b in enumerate(bundles) if h != agent.group), default=0)


def min_prop_k(instance: Instance, alloc: DiscreteAllocation, agent: AgentId) -> int:
    """Smallest k for which the agent is PROP-k."""
    return len(is_prop_k(instance, alloc, agent, instance.m).witness[agent.group])


def is_balanced(alloc: DiscreteAllocation, n: int | None = None) -> bool:
    if n is None:
        n = max(alloc.owner, default=0) + 1
    sizes = [0] * n
    for g in alloc.owner:
        sizes[g] += 1
    return max(sizes) - min(sizes) <= 1


def is_ef1_for_all(instance: Instance, alloc: DiscreteAllocation) -> bool:
    return all(is_ef_k(instance, alloc, a, 1) for a in instance.agents())


def is_prop_k_for_all(instance: Instance, alloc: DiscreteAllocation, k: int) -> bool:
    return all(is_prop_k(instance, alloc, a, k) for a in instance.agents())


@dataclass(frozen=True)
class AgentFairness:
    agent: AgentId
    utility: Fraction
    share: Fraction
    ef: bool
    ef1: bool
    efx: bool
    prop: bool
    prop1: bool
    prop2: bool
    min_ef_k: int
    min_prop_k: int
    ef_witness: Mapping
    prop_witness: Mapping


@dataclass(frozen=True)
class FairnessReport:
    agents: tuple[AgentFairness, ...]
    balanced: bool

    def all(self, prop: str) -> bool:
        return all(getattr(a, prop) for a in self.agents)

    def lines(self) -> list[str]:
        out = [f"balanced: {self.balanced}"]
        for a in self.agents:
            flags = " ".join(f"{name}={'Y' if getattr(a, name) else 'n'}"
                             for name in ("ef", "efx", "ef1", "prop", "prop1", "prop2"))
            out.append(f"agent {a.agent}: u={a.utility} share={a.share} {flags} "
                       f"ef-k>={a.min_ef_k} prop-k>={a.min_prop_k}")
        return out


def fairness_report(instance: Instance, alloc: DiscreteAllocation) -> FairnessReport:
    rows = []
    for agent in instance.agents():
        k_ef = min_ef_k(instance, alloc, agent)
        k_prop = min_prop_k(instance, alloc, agent)
        rows.append(AgentFairness(
            agent=agent,
            utility=utility(instance, agent, alloc.bundle(agent.group)),
            share=prop_share(instance, agent),
            ef=k_ef == 0, ef1=k_ef <= 1, efx=is_efx(instance, alloc, agent).holds,
            prop=k_prop == 0, prop1=k_prop <= 1, prop2=k_prop <= 2,
            min_ef_k=k_ef, min_prop_k=k_prop,
            ef_witness=is_ef_k(instance, alloc, agent, k_ef).witness,
            prop_witness=is_prop_k(instance, alloc, agent, k_prop).witness,
        ))
    return FairnessReport(tuple(rows), is_balanced(alloc, instance.n))


# --------------------------------------------------------------------------
# padding

@dataclass(frozen=True)
class PaddedInstance:
    """An instance with zero-valued goods appended after the real ones."""

    instance: Instance
    num_real_goods: int

    @property
    def num_dummies(self) -> int:
        return self.instance.m - self.num_real_goods

    def strip(self, alloc: DiscreteAllocation) -> DiscreteAllocation:
        return alloc.truncate(self.num_real_goods)


def pad_with_dummies(instance: Instance, divisor: int) -> PaddedInstance:
    if divisor < 1:
        raise ValueError("divisor must be positive")
    extra = -instance.m % divisor
    if not extra:
        return PaddedInstance(instance, instance.m)
    zeros = (Fraction(0),) * extra
    padded = Instance(instance.m + extra, tuple(
        tuple(row + zeros for row in grp) for grp in instance.groups))
    return PaddedInstance(padded, instance.m)
