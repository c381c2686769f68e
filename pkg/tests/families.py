"""Random instances from each special-case precondition family."""
import random

from groupfair.core import Instance


def _ranked_row(rng, partition, levels):
    """Values that make ``partition`` (a list of blocks) the segment partition, blocks ranked by ``levels``."""
    row = {}
    for block, level in zip(partition, levels):
        for a in block:
            row[a] = 10 * level + rng.randint(1, 9)
    return [row[a] for a in range(sum(len(b) for b in partition))]


def _random_partition(rng, n, m):
    goods = list(range(m))
    rng.shuffle(goods)
    return [goods[j:j + n] for j in range(0, m, n)]


def same_segments(rng: random.Random) -> Instance:
    n = rng.randint(2, 4)
    m = n * rng.randint(1, 3)
    groups = []
    for _ in range(n):
        part = _random_partition(rng, n, m)
        depth = list(range(len(part), 0, -1))
        other = depth[:] if rng.random() < 0.3 else rng.sample(depth, len(depth))
        if rng.random() < 0.3:
            other = depth[::-1]          # opposite ranking of the blocks
        groups.append([_ranked_row(rng, part, depth), _ranked_row(rng, part, other)])
    return Instance(m, groups)


def m_le_2n(rng: random.Random) -> Instance:
    n = rng.randint(2, 4)
    m = rng.randint(1, 2 * n)
    hi = rng.choice([1, 5, 100])
    return Instance(m, [[[rng.randint(0, hi) for _ in range(m)] for _ in range(2)] for _ in range(n)])


def binary_uniform(rng: random.Random) -> Instance:
    n = rng.randint(2, 4)
    k = rng.randint(0, 2)
    m = rng.randint((k + 1) * n, (k + 2) * n + 1)
    groups = []
    for _ in range(n):
        group = []
        for _ in range(2):
            count = rng.randint(k * n + 1, (k + 1) * n)
            liked = set(rng.sample(range(m), count))
            group.append([int(a in liked) for a in range(m)])
        groups.append(group)
    return Instance(m, groups)


def three_binary(rng: random.Random) -> Instance:
    m = rng.randint(0, 12)
    p = rng.random()
    return Instance(m, [[[int(rng.random() < p) for _ in range(m)] for _ in range(2)] for _ in range(3)])


def common_first_segments(rng: random.Random) -> Instance:
    n = rng.randint(1, 4)
    m = n * rng.randint(1, 3)
    part = _random_partition(rng, n, m)
    depth = list(range(len(part), 0, -1))
    hi = rng.choice([1, 5, 100])
    groups = [[_ranked_row(rng, part, depth), [rng.randint(0, hi) for _ in range(m)]] for _ in range(n)]
    return Instance(m, groups)


FAMILIES = {
    "segments": same_segments,
    "m2n": m_le_2n,
    "binary-uniform": binary_uniform,
    "three-binary": three_binary,
    "ef1-segments": common_first_segments,
}
