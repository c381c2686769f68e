import random

import pytest
from hypothesis import given, settings, strategies as st

from families import FAMILIES
from groupfair.core import AgentId, DiscreteAllocation, Instance, is_ef1_for_all, is_prop_k_for_all
from groupfair.oracle import EF1, PROP1, exists_allocation
from groupfair.special_prop1 import (METHODS, BipartiteGraph, PreconditionError, approval_level,
                                     common_first_segments_holds, ef1_common_segments, max_bipartite_matching,
                                     prop1_binary_uniform, prop1_m_le_2n, prop1_same_segments,
                                     prop1_three_binary_couples, same_segments_holds, segment_partition,
                                     solve_special)


def test_segment_partition_examples():
    inst = Instance(4, [[[4, 3, 2, 1]], [[1, 1, 1, 1]]])
    assert segment_partition(inst, AgentId(0, 1)).segments == (frozenset({0, 1}), frozenset({2, 3}))
    assert segment_partition(inst, AgentId(1, 1)).segments == (frozenset({0, 1}), frozenset({2, 3}))
    square = Instance(2, [[[1, 2]], [[3, 4]]])
    assert len(segment_partition(square, AgentId(0, 1)).segments) == 1
    with pytest.raises(PreconditionError):
        segment_partition(Instance(3, [[[1, 2, 3]], [[1, 1, 1]]]), AgentId(0, 1))


def test_matching_examples():
    star = BipartiteGraph((0,), ("a", "b", "c"), ((0, "a"), (0, "b"), (0, "c")))
    assert len(max_bipartite_matching(star)) == 1
    assert max_bipartite_matching(BipartiteGraph((), (), ())) == {}
    # 3-regular bipartite graph on 6 + 6 nodes
    edges = tuple((i, (i + d) % 6) for i in range(6) for d in (0, 1, 3))
    match = max_bipartite_matching(BipartiteGraph(tuple(range(6)), tuple(range(6)), edges))
    assert len(match) == 6 and len(set(match.values())) == 6
    assert all((a, b) in edges for a, b in match.items())


def test_opposite_rankings():
    # each couple ranks the goods in opposite orders: the partitions coincide
    n, m = 3, 6
    groups = [[list(range(m, 0, -1)), list(range(1, m + 1))] for _ in range(n)]
    inst = Instance(m, groups)
    assert same_segments_holds(inst)
    assert is_prop_k_for_all(inst, prop1_same_segments(inst), 1)


def test_identical_everywhere():
    inst = Instance(6, [[[5, 4, 3, 3, 1, 0]] * 2] * 3)
    alloc = prop1_same_segments(inst)
    assert is_prop_k_for_all(inst, alloc, 1)
    assert exists_allocation(inst, PROP1) is not None


def test_m_le_2n_examples():
    inst = Instance(3, [[[1, 2, 3], [3, 2, 1]]] * 3)
    alloc = prop1_m_le_2n(inst)
    assert sorted(alloc.owner) == [0, 1, 2]
    # couples with disjoint top goods: only the matching phase is needed
    disjoint = Instance(4, [[[9, 8, 0, 0], [0, 0, 9, 8]], [[0, 9, 8, 0], [8, 0, 0, 9]]])
    assert is_prop_k_for_all(disjoint, prop1_m_le_2n(disjoint), 1)
    same = Instance(4, [[[4, 3, 2, 1]] * 2] * 2)
    assert is_prop_k_for_all(same, prop1_m_le_2n(same), 1)
    with pytest.raises(PreconditionError):
        prop1_m_le_2n(Instance(5, [[[1] * 5] * 2] * 2))


def test_binary_uniform_examples():
    assert approval_level(Instance(2, [[[0, 0], [0, 0]], [[0, 0], [0, 0]]])) == 0
    inst = Instance(4, [[[1, 1, 0, 0], [1, 0, 1, 0]], [[0, 1, 1, 0], [0, 0, 1, 1]]])
    assert approval_level(inst) == 0
    assert is_prop_k_for_all(inst, prop1_binary_uniform(inst), 1)
    both = Instance(4, [[[1, 1, 0, 0]] * 2, [[1, 1, 0, 0]] * 2])
    alloc = prop1_binary_uniform(both)
    assert is_prop_k_for_all(both, alloc, 1) and exists_allocation(both, PROP1) is not None
    mixed = Instance(4, [[[1, 0, 0, 0], [1, 1, 1, 0]], [[1, 0, 0, 0], [1, 0, 0, 0]]])
    assert approval_level(mixed) is None
    with pytest.raises(PreconditionError):
        prop1_binary_uniform(mixed)
    with pytest.raises(PreconditionError):
        prop1_binary_uniform(Instance(2, [[[2, 0], [1, 0]], [[1, 1], [0, 1]]]))


def test_three_binary_examples():
    zero = Instance(6, [[[0] * 6] * 2] * 3)
    assert len(prop1_three_binary_couples(zero).owner) == 6
    four = Instance(6, [[[1, 1, 1, 1, 0, 0]] * 2, [[0, 0, 1, 1, 1, 1]] * 2, [[1, 0, 1, 0, 1, 1]] * 2])
    assert is_prop_k_for_all(four, prop1_three_binary_couples(four), 1)
    rows = [[int(a // 3 == j) for a in range(9)] for j in range(3)]
    disjoint = Instance(9, [[rows[0], rows[1]], [rows[1], rows[2]], [rows[2], rows[0]]])
    assert is_prop_k_for_all(disjoint, prop1_three_binary_couples(disjoint), 1)
    with pytest.raises(PreconditionError):
        prop1_three_binary_couples(Instance(3, [[[1, 0, 1]] * 2] * 2))


def test_ef1_segments_examples():
    same_first = Instance(4, [[[4, 3, 2, 1], [0, 0, 1, 9]], [[4, 3, 2, 1], [9, 1, 0, 0]]])
    assert common_first_segments_holds(same_first)
    assert is_ef1_for_all(same_first, ef1_common_segments(same_first))
    alone = Instance(3, [[[1, 2, 3], [3, 2, 1]]])
    assert ef1_common_segments(alone).owner == (0, 0, 0)
    # both second agents chase the same low-segment good
    adv = Instance(4, [[[5, 4, 2, 1], [0, 1, 0, 9]], [[5, 4, 2, 1], [0, 1, 0, 9]]])
    alloc = ef1_common_segments(adv)
    assert is_ef1_for_all(adv, alloc) and exists_allocation(adv, EF1) is not None
    with pytest.raises(PreconditionError):
        ef1_common_segments(Instance(4, [[[4, 3, 2, 1], [1] * 4], [[1, 2, 3, 4], [1] * 4]]))


def test_auto_dispatch():
    inst = Instance(2, [[[1, 0], [0, 1]], [[1, 1], [1, 1]]])
    name, alloc = solve_special(inst)
    assert name in METHODS and is_prop_k_for_all(inst, alloc, 1)
    with pytest.raises(PreconditionError):
        solve_special(Instance(3, [[[1, 2, 3]] * 3, [[1, 2, 3]] * 3]))
    with pytest.raises(ValueError):
        solve_special(inst, "nope")


SOLVERS = {name: solve for name, (_, solve) in METHODS.items()}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(FAMILIES)), st.integers(0, 2 ** 32))
def test_families(name, seed):
    inst = FAMILIES[name](random.Random(seed))
    assert METHODS[name][0](inst)
    alloc = SOLVERS[name](inst)
    check = is_ef1_for_all(inst, alloc) if name == "ef1-segments" else is_prop_k_for_all(inst, alloc, 1)
    assert check
    if inst.n ** inst.m <= 10 ** 4:
        pred = EF1 if name == "ef1-segments" else PROP1
        assert exists_allocation(inst, pred) is not None
