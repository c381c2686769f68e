import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from groupfair.core import Instance

# group f = 0, group s = 1; goods 1..4 are indices 0..3
TABLE_TWO_COUPLES = [
    [[1, 0, "0.1", "0.1"], [0, 1, "0.1", "0.1"]],
    [["0.5", "0.5", "0.1", "0.1"], ["0.2", 0, "0.5", "0.5"]],
]

# three couples f, s, t over five goods: no EF1 allocation
TABLE_NO_EF1 = [
    [[2, 2, 0, 0, 1], [0, 0, 2, 2, 1]],
    [[0, 2, 0, 2, 1], [2, 0, 2, 0, 1]],
    [[2, 0, 0, 2, 1], [0, 2, 2, 0, 1]],
]

# one group of three; five identical copies have no PROP1 allocation
TRIPLE_NO_PROP1 = [
    [1, 1, 1, 1, 1, 1, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 1, 1, 1],
    [0, 0, 0, 1, 1, 1, 1, 1, 1],
]


@pytest.fixture
def two_couples():
    return Instance(4, TABLE_TWO_COUPLES)


@pytest.fixture
def no_ef1():
    return Instance(5, TABLE_NO_EF1)


@pytest.fixture
def no_prop1():
    return Instance(9, [TRIPLE_NO_PROP1] * 5)


def random_instance(rng: random.Random, sizes, m: int, hi: int = 100) -> Instance:
    return Instance(m, [[[rng.randint(0, hi) for _ in range(m)] for _ in range(s)] for s in sizes])


@st.composite
def instances(draw, max_groups=3, max_size=3, max_goods=6, max_value=10, min_groups=1):
    n = draw(st.integers(min_groups, max_groups))
    m = draw(st.integers(0, max_goods))
    sizes = [draw(st.integers(1, max_size)) for _ in range(n)]
    value = st.integers(0, max_value)
    groups = [[[draw(value) for _ in range(m)] for _ in range(s)] for s in sizes]
    return Instance(m, groups)


@st.composite
def instance_and_allocation(draw, **kw):
    inst = draw(instances(**kw))
    owner = tuple(draw(st.integers(0, inst.n - 1)) for _ in range(inst.m))
    from groupfair.core import DiscreteAllocation
    return inst, DiscreteAllocation(owner)


def frac(x) -> Fraction:
    return Fraction(x)
