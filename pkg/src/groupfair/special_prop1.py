"""PROP1 (and one EF1) algorithm for couples under extra structure.

All solvers take an instance whose groups have exactly two agents, pad the
goods with zero-valued dummies where divisibility is needed, and strip the
dummies again before returning.  Each one verifies its own output with the
core checkers and raises :class:`~groupfair.core.InvariantError` if that check fails.

Segment partition of an agent: its goods in decreasing value (ties by
index) cut into consecutive blocks of ``n``.  Receiving exactly one good of
every block of one's own partition guarantees PROP1, and if every group
receives one good per block the agent is even EF1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

import networkx as nx

from .core import (AgentId, DiscreteAllocation, Instance, InvariantError, is_ef_k, is_prop_k,
                   pad_with_dummies)
from .rational_lp import GE, LE, LinearProgram, solve_to_optimal_bfs


class PreconditionError(ValueError):
    pass


# --------------------------------------------------------------------------
# shared machinery

@dataclass(frozen=True)
class SegmentPartition:
    segments: tuple[frozenset[int], ...]

    def as_set(self) -> frozenset[frozenset[int]]:
        return frozenset(self.segments)

    def index_of(self, good: int) -> int:
        return next(j for j, s in enumerate(self.segments) if good in s)


def segment_partition(instance: Instance, agent: AgentId) -> SegmentPartition:
    n, m = instance.n, instance.m
    if m % n:
        raise PreconditionError(f"m = {m} is not divisible by n = {n}; pad first")
    vals = instance.values(agent)
    order = sorted(range(m), key=lambda a: (-vals[a], a))
    return SegmentPartition(tuple(frozenset(order[j:j + n]) for j in range(0, m, n)))


@dataclass(frozen=True)
class BipartiteGraph:
    left: tuple[Hashable, ...]
    right: tuple[Hashable, ...]
    edges: tuple[tuple[Hashable, Hashable], ...]


def max_bipartite_matching(graph: BipartiteGraph) -> dict:
    """Maximum matching as a ``{left: right}`` map (Hopcroft-Karp)."""
    g = nx.Graph()
    g.add_nodes_from((("L", v) for v in graph.left), bipartite=0)
    g.add_nodes_from((("R", v) for v in graph.right), bipartite=1)
    g.add_edges_from((("L", a), ("R", b)) for a, b in graph.edges)
    top = [("L", v) for v in graph.left]
    match = nx.bipartite.hopcroft_karp_matching(g, top_nodes=top)
    return {u[1]: w[1] for u, w in match.items() if u[0] == "L"}


def _check_couples(instance: Instance) -> None:
    if any(s != 2 for s in instance.group_sizes):
        raise PreconditionError(f"every group must have 2 agents, got sizes {instance.group_sizes}")


def _check_binary(instance: Instance) -> None:
    if not instance.is_binary():
        raise PreconditionError("valuations must be binary")


def _one_good_per_set(instance: Instance, partitions: Sequence[Sequence[frozenset[int]]]) -> list[int]:
    """Give every group one good of each of its sets via a perfect matching.

    ``partitions[g]`` must partition the goods into sets of size ``n``; the
    goods-vs-sets graph is then ``n``-regular, so a perfect matching exists.
    """
    m = instance.m
    slots = [(g, j) for g, part in enumerate(partitions) for j in range(len(part))]
    edges = [(a, (g, j)) for g, part in enumerate(partitions) for j, s in enumerate(part) for a in sorted(s)]
    match = max_bipartite_matching(BipartiteGraph(tuple(range(m)), tuple(slots), tuple(edges)))
    if len(match) != m:
        raise InvariantError(f"regular goods/sets graph had a matching of size {len(match)} < {m}")
    owner = [match[a][0] for a in range(m)]
    for g, part in enumerate(partitions):
        for s in part:
            if sum(owner[a] == g for a in s) != 1:
                raise InvariantError(f"group {g} did not get exactly one good of {sorted(s)}")
    return owner


def _round_robin(owner: list[int], goods: Iterable[int], n: int, start: int = 0) -> None:
    for k, a in enumerate(sorted(goods)):
        owner[a] = (start + k) % n


def _verify_prop1(instance: Instance, alloc: DiscreteAllocation, what: str) -> DiscreteAllocation:
    for agent in instance.agents():
        if not is_prop_k(instance, alloc, agent, 1):
            raise InvariantError(f"{what}: {agent} is not PROP1")
    return alloc


def _finish(padded, owner: list[int], what: str) -> DiscreteAllocation:
    alloc = padded.strip(DiscreteAllocation(tuple(owner)))
    return _verify_prop1(_base(padded), alloc, what)


def _base(padded) -> Instance:
    """The instance without its dummy goods."""
    if padded.num_dummies == 0:
        return padded.instance
    return padded.instance.with_goods(range(padded.num_real_goods))


# --------------------------------------------------------------------------
# preconditions

def same_segments_holds(instance: Instance) -> bool:
    if any(s != 2 for s in instance.group_sizes):
        return False
    inst = pad_with_dummies(instance, instance.n).instance
    return all(segment_partition(inst, AgentId(g, 1)).as_set()
               == segment_partition(inst, AgentId(g, 2)).as_set() for g in range(inst.n))


def approval_level(instance: Instance) -> int | None:
    """The common ``k`` with ``kn < approvals <= (k+1)n``, ignoring agents approving nothing.

    ``None`` if the agents do not share one.  With no approvals at all the
    level is 0.
    """
    n = instance.n
    levels = {(c - 1) // n for c in (sum(1 for v in instance.values(a) if v) for a in instance.agents()) if c}
    if len(levels) > 1:
        return None
    return levels.pop() if levels else 0


def common_first_segments_holds(instance: Instance) -> bool:
    if any(s != 2 for s in instance.group_sizes):
        return False
    inst = pad_with_dummies(instance, instance.n).instance
    parts = {segment_partition(inst, AgentId(g, 1)).segments for g in range(inst.n)}
    return len(parts) == 1


# --------------------------------------------------------------------------
# solvers

def prop1_same_segments(instance: Instance) -> DiscreteAllocation:
    """Both agents of every couple share a segment partition."""
    _check_couples(instance)
    if not same_segments_holds(instance):
        raise PreconditionError("the two agents of some couple have different segment partitions")
    padded = pad_with_dummies(instance, instance.n)
    inst = padded.instance
    parts = [segment_partition(inst, AgentId(g, 1)).segments for g in range(inst.n)]
    return _finish(padded, _one_good_per_set(inst, parts), "prop1_same_segments")


def prop1_m_le_2n(instance: Instance) -> DiscreteAllocation:
    """At most as many goods as agents."""
    _check_couples(instance)
    n, m = instance.n, instance.m
    if m > 2 * n:
        raise PreconditionError(f"m = {m} exceeds 2n = {2 * n}")
    if m <= n:
        # any allocation works: the best good alone is worth >= u(M)/m >= u(M)/n
        owner = [0] * m
        _round_robin(owner, range(m), n)
        return _verify_prop1(instance, DiscreteAllocation(tuple(owner)), "prop1_m_le_2n")
    padded = pad_with_dummies(instance, 2 * n)
    inst = padded.instance
    top = {a: segment_partition(inst, a).segments[0] for a in inst.agents()}
    owner = [-1] * inst.m
    remaining = set(range(inst.m))
    pending = []
    for g in range(n):
        common = top[AgentId(g, 1)] & top[AgentId(g, 2)] & remaining
        if common:
            a = min(common)
            owner[a] = g
            remaining.discard(a)
        else:
            pending.extend([AgentId(g, 1), AgentId(g, 2)])
    if pending:
        edges = [(agent, a) for agent in pending for a in sorted(top[agent] & remaining)]
        match = max_bipartite_matching(BipartiteGraph(tuple(pending), tuple(sorted(remaining)), tuple(edges)))
        if len(match) != len(pending):
            raise InvariantError(f"Hall's condition failed: matched {len(match)} of {len(pending)} agents")
        for agent, a in match.items():
            owner[a] = agent.group
            remaining.discard(a)
    _round_robin(owner, remaining, n)
    return _finish(padded, owner, "prop1_m_le_2n")


def prop1_binary_uniform(instance: Instance) -> DiscreteAllocation:
    """Binary values; every agent approves between kn+1 and (k+1)n goods for one k."""
    _check_couples(instance)
    _check_binary(instance)
    n, m = instance.n, instance.m
    k = approval_level(instance)
    if k is None:
        raise PreconditionError("approval counts do not share a level k")
    owner = [-1] * m
    remaining = set(range(m))
    liked = {a: frozenset(j for j, v in enumerate(instance.values(a)) if v) for a in instance.agents()}
    got = [0] * n
    for g in range(n):
        while got[g] < k:
            common = liked[AgentId(g, 1)] & liked[AgentId(g, 2)] & remaining
            if not common:
                break
            a = min(common)
            owner[a] = g
            remaining.discard(a)
            got[g] += 1

    # agents approving nothing need nothing
    needy = [a for a in instance.agents() if liked[a] and got[a.group] < k]
    if needy:
        edges = [(a, agent) for agent in needy for a in sorted(liked[agent] & remaining)]
        lp = LinearProgram(len(edges))
        for agent in needy:
            lp.add({j: 1 for j, e in enumerate(edges) if e[1] == agent}, GE, k - got[agent.group])
        for a in sorted(remaining):
            row = {j: 1 for j, e in enumerate(edges) if e[0] == a}
            if row:
                lp.add(row, LE, 1)
        for j in range(len(edges)):
            lp.add({j: 1}, GE, 0)
            lp.add({j: 1}, LE, 1)
        lp.set_objective([1] * len(edges), maximize=False)
        sol = solve_to_optimal_bfs(lp)
        if not sol.optimal:
            raise InvariantError(f"approval polytope is {sol.status.value}")
        if any(x not in (0, 1) for x in sol.values):
            raise InvariantError("vertex of a totally unimodular polytope is fractional")
        for (a, agent), x in zip(edges, sol.values):
            if x == 1:
                owner[a] = agent.group
                remaining.discard(a)
    _round_robin(owner, remaining, n)
    return _verify_prop1(instance, DiscreteAllocation(tuple(owner)), "prop1_binary_uniform")


def _triple_partition(inst: Instance, g: int) -> list[frozenset[int]]:
    v1, v2 = inst.groups[g]
    cats = [[a for a in range(inst.m) if (v1[a], v2[a]) == key]
            for key in ((0, 0), (1, 0), (0, 1), (1, 1))]
    sets: list[frozenset[int]] = []
    rest: list[list[int]] = []
    for c in cats:
        full = len(c) - len(c) % 3
        sets.extend(frozenset(c[j:j + 3]) for j in range(0, full, 3))
        rest.append(c[full:])
    z, a1, a2, both = rest
    left = sorted(z + a1 + a2 + both)
    likes1 = [a for a in left if v1[a]]
    likes2 = [a for a in left if v2[a]]
    if len(left) == 6:
        if len(likes1) == 4 and len(likes2) == 4:
            # two goods of each kind remain
            first = frozenset([both[0]] + a1)
            sets.extend([first, frozenset(left) - first])
        elif len(likes1) == 4 or len(likes2) == 4:
            first = frozenset((likes1 if len(likes1) == 4 else likes2)[:3])
            sets.extend([first, frozenset(left) - first])
        else:
            sets.extend([frozenset(left[:3]), frozenset(left[3:])])
    elif len(left) == 3:
        sets.append(frozenset(left))
    elif left:
        raise InvariantError(f"{len(left)} goods left after forming triples")
    for i, vals in ((1, v1), (2, v2)):
        liked = sum(1 for a in range(inst.m) if vals[a])
        full = sum(1 for s in sets if all(vals[a] for a in s))
        if full < -(-liked // 3) - 1:
            raise InvariantError(f"agent ({g},{i}) fully likes only {full} triples")
    return sets


def prop1_three_binary_couples(instance: Instance) -> DiscreteAllocation:
    """Three couples with binary values."""
    _check_couples(instance)
    _check_binary(instance)
    if instance.n != 3:
        raise PreconditionError(f"needs exactly 3 couples, got {instance.n}")
    padded = pad_with_dummies(instance, 3)
    inst = padded.instance
    parts = [_triple_partition(inst, g) for g in range(3)]
    return _finish(padded, _one_good_per_set(inst, parts), "prop1_three_binary_couples")


def ef1_common_segments(instance: Instance) -> DiscreteAllocation:
    """EF1 when all first agents share one segment partition.

    Segment by segment, the second agents pick their favourite remaining
    good in an order where nobody envies anyone picking before them; envy
    cycles among second agents are removed by rotating whole bundles first.
    """
    _check_couples(instance)
    if not common_first_segments_holds(instance):
        raise PreconditionError("first agents do not share a segment partition")
    padded = pad_with_dummies(instance, instance.n)
    inst = padded.instance
    n = inst.n
    segments = segment_partition(inst, AgentId(0, 1)).segments
    second = [inst.groups[g][1] for g in range(n)]
    bundles: list[set[int]] = [set() for _ in range(n)]

    def value(g, b):
        return sum((second[g][a] for a in b), Fraction(0))

    def envy_graph():
        dg = nx.DiGraph()
        dg.add_nodes_from(range(n))
        dg.add_edges_from((g, h) for g in range(n) for h in range(n)
                          if g != h and value(g, bundles[h]) > value(g, bundles[g]))
        return dg

    for seg in segments:
        while True:
            dg = envy_graph()
            try:
                cycle = nx.find_cycle(dg, source=sorted(dg.nodes))
            except nx.NetworkXNoCycle:
                break
            moved = {g: bundles[h] for g, h in cycle}
            for g, b in moved.items():
                bundles[g] = b
        if not nx.is_directed_acyclic_graph(dg):
            raise InvariantError("envy graph still has a cycle")
        left = set(seg)
        for g in nx.lexicographical_topological_sort(dg):
            a = min(left, key=lambda x: (-second[g][x], x))
            bundles[g].add(a)
            left.discard(a)

    owner = [-1] * inst.m
    for g, b in enumerate(bundles):
        for a in b:
            owner[a] = g
    alloc = padded.strip(DiscreteAllocation(tuple(owner)))
    base = _base(padded)
    for agent in base.agents():
        if not is_ef_k(base, alloc, agent, 1):
            raise InvariantError(f"ef1_common_segments: {agent} is not EF1")
    return alloc


# --------------------------------------------------------------------------
# dispatch

METHODS: dict[str, tuple[Callable[[Instance], bool], Callable[[Instance], DiscreteAllocation]]] = {
    "segments": (same_segments_holds, prop1_same_segments),
    "m2n": (lambda i: all(s == 2 for s in i.group_sizes) and i.m <= 2 * i.n, prop1_m_le_2n),
    "binary-uniform": (lambda i: all(s == 2 for s in i.group_sizes) and i.is_binary()
                       and approval_level(i) is not None, prop1_binary_uniform),
    "three-binary": (lambda i: i.group_sizes == (2, 2, 2) and i.is_binary(), prop1_three_binary_couples),
    "ef1-segments": (common_first_segments_holds, ef1_common_segments),
}


def solve_special(instance: Instance, method: str = "auto") -> tuple[str, DiscreteAllocation]:
    """Run one solver; ``auto`` takes the first whose precondition holds, in table order."""
    if method != "auto":
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        return method, METHODS[method][1](instance)
    for name, (applies, solve) in METHODS.items():
        if applies(instance):
            return name, solve(instance)
    raise PreconditionError("no special case applies to this instance")
