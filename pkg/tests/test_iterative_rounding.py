import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from conftest import random_instance
from groupfair.core import AgentId, DiscreteAllocation, Instance, is_prop_k
from groupfair.iterative_rounding import (EliminationPolicy, RoundingState, build_prop_polytope,
                                          initial_fpo_bfs, lemma1_classify, run_iterative_rounding,
                                          run_iterative_rounding_detailed)
from groupfair.pareto import is_fpo
from groupfair.rational_lp import BfsSolution, EQ, GE, Status

ALL, BEST = EliminationPolicy.REMOVE_ALL, EliminationPolicy.REMOVE_BEST


def test_polytope_shape():
    inst = Instance(3, [[[1, 2, 3], [3, 2, 1]], [[1, 1, 1]]])
    state = RoundingState.initial(inst)
    lp = build_prop_polytope(inst, state)
    assert lp.num_vars == 6
    rels = [c.relation for c in lp.constraints]
    assert rels[:3] == [GE] * 3 and rels[3:6] == [EQ] * 3
    assert lp.constraints[0].rhs == Fraction(6, 2)


def test_rhs_drops_with_bundle():
    inst = Instance(3, [[[1, 2, 3]], [[1, 1, 1]]])
    state = RoundingState.initial(inst)
    state.bundles[0].add(2)
    state.remaining_goods.discard(2)
    state.edges = [e for e in state.edges if e[0] != 2]
    lp = build_prop_polytope(inst, state)
    assert lp.constraints[0].rhs == Fraction(6, 2) - 3
    assert lp.num_vars == 4


def test_initial_vertex_follows_welfare(no_prop1):
    # both singletons need half the good's worth, so the welfare optimum splits it
    inst = Instance(1, [[[1]], [[2]]])
    sol = initial_fpo_bfs(inst)
    assert sol.values == (Fraction(1, 2), Fraction(1, 2))
    assert is_fpo(inst, DiscreteAllocation((1,)))
    assert initial_fpo_bfs(Instance(1, [[[0]], [[2]]])).values == (0, 1)
    sol = initial_fpo_bfs(no_prop1)
    assert sol.status is Status.OPTIMAL


def test_classification_examples():
    inst = Instance(2, [[[1, 0]], [[0, 1]]])
    state = RoundingState.initial(inst)
    integral = BfsSolution(Status.OPTIMAL, (1, 0, 0, 1))
    c = lemma1_classify(integral, state)
    assert c.integral_edges == frozenset(state.edges)
    half = Fraction(1, 2)
    split = BfsSolution(Status.OPTIMAL, (half, half, half, half))
    c = lemma1_classify(split, state)
    assert not c.integral_edges and c.light_groups == {0, 1}
    assert c.weights == (1, 1)


def test_couples_get_prop1_and_prop2():
    rng = random.Random(8)
    for _ in range(50):
        inst = random_instance(rng, [2] * rng.randint(2, 4), rng.randint(1, 9), 20)
        res = run_iterative_rounding_detailed(inst, ALL)
        for g in range(inst.n):
            assert is_prop_k(inst, res.allocation, AgentId(g, 1), 1)
            assert is_prop_k(inst, res.allocation, AgentId(g, 2), 2)


def test_identical_singletons_are_prop():
    inst = Instance(6, [[[1] * 6]] * 3)
    alloc = run_iterative_rounding(inst)
    assert all(is_prop_k(inst, alloc, a, 0) for a in inst.agents())


def test_never_eliminated_agents_are_prop():
    rng = random.Random(2)
    for _ in range(100):
        inst = random_instance(rng, [1] * rng.randint(2, 4), rng.randint(1, 7), 9)
        res = run_iterative_rounding_detailed(inst, ALL)
        for agent in inst.agents():
            assert is_prop_k(inst, res.allocation, agent, res.bound(agent))
    # PROP is impossible here, so someone must be eliminated
    inst = Instance(6, [[[3, 1, 4, 1, 5, 9]]] * 3)
    res = run_iterative_rounding_detailed(inst, ALL)
    assert res.eliminations
    assert all(is_prop_k(inst, res.allocation, a, res.bound(a)) for a in inst.agents())


def test_single_group_gets_everything():
    inst = Instance(3, [[[1, 2, 3], [0, 0, 1]]])
    alloc = run_iterative_rounding(inst)
    assert alloc.owner == (0, 0, 0)
    assert is_fpo(inst, alloc)


def test_no_goods():
    assert run_iterative_rounding(Instance(0, [[[]], [[]]])).owner == ()


def test_elimination_log():
    inst = Instance(5, [[[5, 1, 1, 1, 1], [1, 5, 1, 1, 1]], [[1, 1, 5, 1, 1], [1, 1, 1, 5, 1]]])
    res = run_iterative_rounding_detailed(inst, ALL)
    for e in res.eliminations:
        assert e.top_value >= e.deficit
        assert e.bound <= e.agent.position
    assert res.iterations == len(res.classifications)


def check_run(inst, policy):
    res = run_iterative_rounding_detailed(inst, policy)
    alloc = res.allocation
    assert len(alloc.owner) == inst.m and all(0 <= g < inst.n for g in alloc.owner)
    v = is_fpo(inst, alloc)
    assert v and v.optimum == 0
    assert all(not c.empty for c in res.classifications)
    for agent in inst.agents():
        k = agent.position if policy is ALL else len(inst.groups[agent.group])
        assert is_prop_k(inst, alloc, agent, k)
        assert res.bound(agent) <= k
    return res


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([ALL, BEST]))
def test_fuzz(seed, policy):
    rng = random.Random(seed)
    sizes = [rng.randint(1, 3) for _ in range(rng.randint(1, 4))]
    check_run(random_instance(rng, sizes, rng.randint(0, 8), rng.choice([1, 5, 100])), policy)


def test_deterministic():
    rng = random.Random(0)
    inst = random_instance(rng, [2, 3, 1], 7, 30)
    for policy in (ALL, BEST):
        assert run_iterative_rounding(inst, policy) == run_iterative_rounding(inst, policy)
