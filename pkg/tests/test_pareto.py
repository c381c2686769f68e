import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import instance_and_allocation, random_instance
from groupfair.core import DiscreteAllocation, FractionalAllocation, Instance, fractional_utility
from groupfair.pareto import WeightVector, check_weighted_support, is_fpo


def test_single_owner_is_fpo():
    inst = Instance(3, [[[1, 2, 3], [0, 1, 0]]])
    assert is_fpo(inst, DiscreteAllocation((0, 0, 0)))


def test_wrong_owner_is_dominated():
    inst = Instance(1, [[[1]], [[0]]])
    v = is_fpo(inst, DiscreteAllocation((1,)))
    assert not v and v.optimum == 1
    assert v.dominator.shares[0] == (1, 0)


def test_weighted_support_examples():
    inst = Instance(1, [[[2]], [[1]]])
    unit = WeightVector.uniform(inst)
    assert check_weighted_support(inst, DiscreteAllocation((0,)), unit)
    assert not check_weighted_support(inst, DiscreteAllocation((1,)), unit)
    zero = Instance(2, [[[0, 0]], [[0, 0]]])
    assert check_weighted_support(zero, DiscreteAllocation((1, 0)), WeightVector.uniform(zero))


def test_weights_must_be_positive():
    with pytest.raises(ValueError):
        WeightVector(((1, 0),))


def test_fractional_input():
    inst = Instance(2, [[[1, 0]], [[0, 1]]])
    half = FractionalAllocation(((Fraction(1, 2), Fraction(1, 2)), (0, 1)))
    v = is_fpo(inst, half)
    assert not v
    for g in range(2):
        agent = next(a for a in inst.agents() if a.group == g)
        assert fractional_utility(inst, agent, v.dominator.column(g)) >= fractional_utility(
            inst, agent, half.column(g))


@settings(max_examples=150, deadline=None)
@given(instance_and_allocation(max_groups=3, max_size=2, max_goods=5, min_groups=2))
def test_dominator_really_dominates(case):
    inst, alloc = case
    v = is_fpo(inst, alloc)
    x = FractionalAllocation.from_discrete(alloc, inst.n)
    if v:
        assert v.optimum == 0
        return
    better = False
    for agent in inst.agents():
        old = fractional_utility(inst, agent, x.column(agent.group))
        new = fractional_utility(inst, agent, v.dominator.column(agent.group))
        assert new >= old
        better |= new > old
    assert better


def test_weighted_support_implies_fpo():
    rng = random.Random(3)
    for _ in range(200):
        inst = random_instance(rng, [rng.randint(1, 2) for _ in range(rng.randint(2, 3))], rng.randint(1, 5), 6)
        w = WeightVector(tuple(tuple(rng.randint(1, 4) for _ in g) for g in inst.groups))
        # the weighted-welfare argmax allocation (lowest index on ties)
        owner = []
        for a in range(inst.m):
            score = [sum(w.w[g][i] * inst.groups[g][i][a] for i in range(len(inst.groups[g])))
                     for g in range(inst.n)]
            owner.append(score.index(max(score)))
        alloc = DiscreteAllocation(tuple(owner))
        assert check_weighted_support(inst, alloc, w)
        assert is_fpo(inst, alloc)


def test_support_shrinking_keeps_fpo():
    rng = random.Random(4)
    checked = 0
    while checked < 60:
        inst = random_instance(rng, [1, 2, 1], rng.randint(1, 4), 4)
        # welfare-maximising split with ties shared equally
        shares = []
        for a in range(inst.m):
            score = [sum(row[a] for row in g) for g in inst.groups]
            best = [g for g in range(inst.n) if score[g] == max(score)]
            shares.append(tuple(Fraction(int(g in best), len(best)) for g in range(inst.n)))
        x = FractionalAllocation(tuple(shares))
        if not is_fpo(inst, x):
            continue
        checked += 1
        # any discrete allocation inside the support
        owner = tuple(rng.choice([g for g in range(inst.n) if shares[a][g] > 0]) for a in range(inst.m))
        assert is_fpo(inst, DiscreteAllocation(owner))
