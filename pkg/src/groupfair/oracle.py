"""Exhaustive allocation search, and the instances the algorithms cannot beat.

Two search engines:

* ``prune=False``: every one of the ``n**m`` allocations, evaluated in
  numpy chunks on integer-scaled values.  Used when a claim of nonexistence
  should rest on plain enumeration.
* ``prune=True``: depth-first over goods with bounds that can only get worse
  as more goods are placed, so a pruned subtree never contains a witness.

Both count their work against a budget and raise :class:`BudgetExceeded`
when it runs out, which is never reported as "no allocation exists".
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from .core import (AgentId, DiscreteAllocation, Instance, is_balanced, is_ef_k, is_efx, is_prop_k)

DEFAULT_BUDGET = 10 ** 8
_CHUNK = 1 << 15
_QUICK = 20_000    # DFS effort spent before asking the MILP


class BudgetExceeded(RuntimeError):
    """The search was cut off; nothing is known about existence."""

    def __init__(self, budget: int, needed: int | None = None):
        self.budget, self.needed = budget, needed
        more = f" (needs {needed})" if needed is not None else ""
        super().__init__(f"search budget of {budget} evaluations exhausted{more}")


# --------------------------------------------------------------------------
# predicates

@dataclass(frozen=True)
class Predicate:
    """``kind`` is ``ef`` (EF-k), ``efx`` or ``prop`` (PROP-k); optionally balanced too."""

    kind: str
    k: int = 0
    balanced: bool = False

    def __post_init__(self):
        if self.kind not in ("ef", "efx", "prop"):
            raise ValueError(f"unknown predicate kind {self.kind!r}")
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    @property
    def name(self) -> str:
        base = "EFX" if self.kind == "efx" else f"{self.kind.upper()}{self.k or ''}"
        return f"balanced+{base}" if self.balanced else base

    def agent_holds(self, instance: Instance, alloc: DiscreteAllocation, agent: AgentId) -> bool:
        if self.kind == "ef":
            return is_ef_k(instance, alloc, agent, self.k).holds
        if self.kind == "efx":
            return is_efx(instance, alloc, agent).holds
        return is_prop_k(instance, alloc, agent, self.k).holds

    def holds(self, instance: Instance, alloc: DiscreteAllocation) -> bool:
        if self.balanced and not is_balanced(alloc, instance.n):
            return False
        return all(self.agent_holds(instance, alloc, a) for a in instance.agents())


EF, EF1, EFX = Predicate("ef"), Predicate("ef", 1), Predicate("efx")
PROP, PROP1, PROP2 = Predicate("prop"), Predicate("prop", 1), Predicate("prop", 2)
BALANCED_EF1 = Predicate("ef", 1, balanced=True)


def parse_predicate(text: str) -> Predicate:
    """``EF``, ``EF1``, ``EF-3``, ``EFX``, ``PROP``, ``PROP2``, ``balanced-EF1`` (any case)."""
    s = text.strip().lower().replace("_", "-")
    balanced = False
    for prefix in ("balanced+", "balanced-", "balanced"):
        if s.startswith(prefix):
            balanced, s = True, s[len(prefix):]
            break
    if s == "efx":
        return Predicate("efx", 0, balanced)
    m = re.fullmatch(r"(ef|prop)-?(\d*)", s)
    if not m:
        raise ValueError(f"unknown predicate {text!r}")
    return Predicate(m.group(1), int(m.group(2) or 0), balanced)


# --------------------------------------------------------------------------
# search

@dataclass(frozen=True)
class SearchResult:
    witness: DiscreteAllocation | None
    evaluations: int
    engine: str

    @property
    def exists(self) -> bool:
        return self.witness is not None


def _scaled_rows(instance: Instance) -> list[list[int]]:
    """Each agent's values times the lcm of their denominators (verdicts are scale-free)."""
    rows = []
    for agent in instance.agents():
        vals = instance.values(agent)
        scale = math.lcm(*(v.denominator for v in vals)) if vals else 1
        rows.append([int(v * scale) for v in vals])
    return rows


def exists_allocation(instance: Instance, predicate: Predicate | str, budget: int = DEFAULT_BUDGET,
                      prune: bool = True, hints: Iterable[DiscreteAllocation] = ()) -> DiscreteAllocation | None:
    """A satisfying allocation, or None when provably none exists."""
    return search_allocation(instance, predicate, budget, prune, hints).witness


def search_allocation(instance: Instance, predicate: Predicate | str, budget: int = DEFAULT_BUDGET,
                      prune: bool = True, hints: Iterable[DiscreteAllocation] = (),
                      milp_nodes: int | None = None) -> SearchResult:
    """Hints first; with ``milp_nodes`` set, a short DFS and a MILP witness hunt; then the engine.

    Only the final engine can conclude nonexistence; the MILP is floating
    point, so it is trusted only for witnesses that pass the exact check.
    """
    if isinstance(predicate, str):
        predicate = parse_predicate(predicate)
    used = 0
    for h in hints:
        used += 1
        if predicate.holds(instance, h):
            return SearchResult(h, used, "hint")
    if milp_nodes is not None and instance.m and prune:
        try:
            witness, evals = _dfs(instance, predicate, min(_QUICK, budget - used))
            return SearchResult(witness, used + evals, "pruned")
        except BudgetExceeded:
            used += min(_QUICK, budget - used)
        used += 1
        w = milp_witness(instance, predicate, milp_nodes)
        if w is not None and predicate.holds(instance, w):
            return SearchResult(w, used, "milp")
    if instance.m == 0:
        empty = DiscreteAllocation(())
        if not predicate.holds(instance, empty):
            return SearchResult(None, used + 1, "trivial")
        return SearchResult(empty, used + 1, "trivial")
    if prune:
        witness, evals = _dfs(instance, predicate, budget - used)
        engine = "pruned"
    else:
        witness, evals = _exhaustive(instance, predicate, budget - used)
        engine = "exhaustive"
    if witness is not None and not predicate.holds(instance, witness):
        raise AssertionError(f"{engine} search returned a non-witness")
    return SearchResult(witness, used + evals, engine)


def _topk_sum(masked: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros(masked.shape[0], dtype=masked.dtype)
    if k == 1:
        return masked.max(axis=1)
    if k >= masked.shape[1]:
        return masked.sum(axis=1)
    return -np.sort(-masked, axis=1)[:, :k].sum(axis=1)


def _chunk_ok(owners: np.ndarray, rows, groups_of, n: int, m: int, pred: Predicate) -> np.ndarray:
    ok = np.ones(owners.shape[0], dtype=bool)
    if pred.balanced:
        counts = np.stack([(owners == h).sum(axis=1) for h in range(n)], axis=1)
        ok &= counts.max(axis=1) - counts.min(axis=1) <= 1
    onehot = [owners == h for h in range(n)]
    for v, g in zip(rows, groups_of):
        if not ok.any():
            break
        vmat = np.broadcast_to(v, owners.shape)
        zero = np.zeros((), dtype=v.dtype)
        own = np.where(onehot[g], vmat, zero).sum(axis=1)
        if pred.kind == "prop":
            total = v.sum()
            outside = np.where(onehot[g], zero, vmat)
            ok &= n * (own + _topk_sum(outside, pred.k)) >= total
            continue
        for h in range(n):
            if h == g:
                continue
            masked = np.where(onehot[h], vmat, zero)
            other = masked.sum(axis=1)
            if pred.kind == "ef":
                ok &= own >= other - _topk_sum(masked, pred.k)
            else:
                big = v.max() + 1
                pos = np.where(onehot[h] & (vmat > 0), vmat, big).min(axis=1)
                pos = np.where(pos == big, zero, pos)
                ok &= own >= other - pos
    return ok


def _exhaustive(instance: Instance, pred: Predicate, budget: int):
    n, m = instance.n, instance.m
    total = n ** m
    if total > budget:
        raise BudgetExceeded(budget, total)
    scaled = _scaled_rows(instance)
    biggest = max((sum(r) for r in scaled), default=0) * (n + 1)
    dtype = np.int64 if biggest < 2 ** 62 else object
    rows = [np.array(r, dtype=dtype) for r in scaled]
    groups_of = [a.group for a in instance.agents()]
    powers = np.array([n ** a for a in range(m)], dtype=np.int64)
    done = 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        owners = (idx[:, None] // powers[None, :]) % n
        ok = _chunk_ok(owners, rows, groups_of, n, m, pred)
        done += len(idx)
        hit = np.flatnonzero(ok)
        if hit.size:
            return DiscreteAllocation(tuple(int(o) for o in owners[hit[0]])), start + int(hit[0]) + 1
    return None, done


def _dfs(instance: Instance, pred: Predicate, budget: int):
    n, m = instance.n, instance.m
    agents = list(instance.agents())
    vals = _scaled_rows(instance)
    grp = [a.group for a in agents]
    totals = [sum(r) for r in vals]
    k = pred.k
    # most contested goods first: bounds bite earlier
    order = sorted(range(m), key=lambda a: (-sum(Fraction(vals[j][a], max(totals[j], 1))
                                                 for j in range(len(agents))), a))
    owner = [-1] * m
    own = [0] * len(agents)
    rest = list(totals)                       # value of unplaced goods
    bundle = [[[] for _ in range(n)] for _ in agents]   # per agent, per group: placed values
    sums = [[0] * n for _ in agents]
    bar = [0] * len(agents)                   # EF-type: max over other groups of the "hard part"
    outside_top = [[] for _ in agents]        # PROP: top-k values placed outside own group
    members = [[j for j in range(len(agents)) if grp[j] == g and totals[j]] for g in range(n)]
    sizes = [0] * n
    hi, lo = -(-m // n), m // n
    evals = 0

    def hard_part(j, h):
        b = bundle[j][h]
        if pred.kind == "ef":
            return sums[j][h] - sum(sorted(b, reverse=True)[:k])
        pos = [x for x in b if x > 0]
        return sums[j][h] - (min(pos) if pos else 0)

    def feasible(j) -> bool:
        if pred.kind == "prop":
            return n * (own[j] + rest[j] + sum(outside_top[j])) >= totals[j]
        return own[j] + rest[j] >= bar[j]

    def place(depth: int):
        nonlocal evals
        if depth == m:
            return True
        a = order[depth]
        # poorest group first (by its worst-off agent's share so far): witnesses come early
        for h in sorted(range(n), key=lambda g: (min((own[j] / totals[j] for j in members[g]), default=2.0), g)):
            evals += 1
            if evals > budget:
                raise BudgetExceeded(budget)
            if pred.balanced:
                if sizes[h] >= hi:
                    continue
                left = m - depth - 1
                need = sum(max(0, lo - (sizes[g] + (g == h))) for g in range(n))
                if need > left:
                    continue
            saved = []
            for j in range(len(agents)):
                x = vals[j][a]
                rest[j] -= x
                if grp[j] == h:
                    own[j] += x
                    saved.append(None)
                    continue
                bundle[j][h].append(x)
                sums[j][h] += x
                if pred.kind == "prop":
                    prev = outside_top[j]
                    outside_top[j] = sorted(prev + [x], reverse=True)[:k] if k else prev
                    saved.append(prev)
                else:
                    prev = bar[j]
                    bar[j] = max(bar[j], hard_part(j, h))
                    saved.append(prev)
            owner[a] = h
            sizes[h] += 1
            if all(feasible(j) for j in range(len(agents))) and place(depth + 1):
                return True
            sizes[h] -= 1
            owner[a] = -1
            for j in range(len(agents)):
                x = vals[j][a]
                rest[j] += x
                if grp[j] == h:
                    own[j] -= x
                    continue
                bundle[j][h].pop()
                sums[j][h] -= x
                if pred.kind == "prop":
                    outside_top[j] = saved[j]
                else:
                    bar[j] = saved[j]
        return False

    found = place(0)
    return (DiscreteAllocation(tuple(owner)) if found else None), evals


def milp_witness(instance: Instance, pred: Predicate, node_limit: int = 2000) -> DiscreteAllocation | None:
    """Look for a witness with HiGHS.  None means "not found", never "does not exist".

    Binary ``x[a, g]`` assigns good ``a`` to group ``g``.  EF-k and PROP-k get
    binary "forgiven good" indicators ``w``; EFX gets one big-M row per good
    that could sit in the envied bundle.
    """
    pred = parse_predicate(pred) if isinstance(pred, str) else pred
    n, m = instance.n, instance.m
    agents = list(instance.agents())
    vals = _scaled_rows(instance)
    rows, cols, data, lo, hi = [], [], [], [], []
    nvar = m * n

    def x(a, g):
        return a * n + g

    def new_var():
        nonlocal nvar
        nvar += 1
        return nvar - 1

    def row(entries, low, high):
        r = len(lo)
        for c, v in entries:
            rows.append(r)
            cols.append(c)
            data.append(v)
        lo.append(low)
        hi.append(high)

    for a in range(m):
        row([(x(a, g), 1) for g in range(n)], 1, 1)
    if pred.balanced:
        for g in range(n):
            row([(x(a, g), 1) for a in range(m)], m // n, -(-m // n))
    for j, agent in enumerate(agents):
        v, g, total = vals[j], agent.group, sum(vals[j])
        pos = [a for a in range(m) if v[a]]
        if not total:
            continue
        if pred.kind == "prop":
            entries = [(x(a, g), n * v[a]) for a in pos]
            if pred.k:
                ws = []
                for a in pos:
                    w = new_var()
                    ws.append(w)
                    entries.append((w, n * v[a]))
                    row([(w, 1), (x(a, g), 1)], -np.inf, 1)
                row([(w, 1) for w in ws], -np.inf, pred.k)
            row(entries, total, np.inf)
            continue
        for h in range(n):
            if h == g:
                continue
            gap = [(x(a, g), v[a]) for a in pos] + [(x(a, h), -v[a]) for a in pos]
            if pred.kind == "efx":
                for b in pos:
                    row(gap + [(x(b, h), -total)], -total - v[b], np.inf)
            elif pred.k:
                ws = []
                for a in pos:
                    w = new_var()
                    ws.append(w)
                    row([(w, 1), (x(a, h), -1)], -np.inf, 0)
                row([(w, 1) for w in ws], -np.inf, pred.k)
                row(gap + [(w, v[a]) for w, a in zip(ws, pos)], 0, np.inf)
            else:
                row(gap, 0, np.inf)
    if not lo:
        return DiscreteAllocation((0,) * m)
    A = coo_matrix((data, (rows, cols)), shape=(len(lo), nvar)).tocsr()
    res = milp(np.zeros(nvar), constraints=LinearConstraint(A, lo, hi),
               integrality=np.ones(nvar), bounds=Bounds(0, 1),
               options={"node_limit": node_limit, "presolve": True})
    if res.x is None:
        return None
    xs = res.x[:m * n].reshape(m, n)
    return DiscreteAllocation(tuple(int(np.argmax(xs[a])) for a in range(m)))


def all_allocations(n: int, m: int) -> Iterable[DiscreteAllocation]:
    """Plain generator over the ``n**m`` allocations (reference for tests)."""
    for owner in product(range(n), repeat=m):
        yield DiscreteAllocation(owner)


# --------------------------------------------------------------------------
# counterexamples

_EF1_PATTERNS = (
    ((2, 2, 0, 0), (0, 0, 2, 2)),
    ((0, 2, 0, 2), (2, 0, 2, 0)),
    ((2, 0, 0, 2), (0, 2, 2, 0)),
)


def gen_ef1_counterexample(n: int) -> Instance:
    """``n`` couples with no EF1 allocation.

    Goods 0..3 are special; goods 4..n+1 are worth 1 to everyone.  Group
    ``g`` uses pattern ``g mod 3`` on the special goods, so all three
    patterns occur once ``n >= 3``.
    """
    if n < 3:
        raise ValueError("needs at least 3 couples")
    ones = (1,) * (n - 2)
    return Instance(n + 2, tuple(tuple(row + ones for row in _EF1_PATTERNS[g % 3]) for g in range(n)))


def gen_prop1_counterexample(n: int, layout: str = "blocks") -> Instance:
    """``n`` identical groups of three with no PROP1 allocation; ``2n - 1`` binary goods.

    ``modular``: agent ``i`` (1-based) dislikes goods ``a`` (1-based) with
    ``a = i mod 3``.  ``blocks``: the same instance with the goods relabelled
    so that each agent's disliked goods are contiguous, the third agent's
    first and the first agent's last.  For ``n = 5`` ``blocks`` gives agent 1
    goods 1-6, agent 2 goods 1-3 and 7-9, agent 3 goods 4-9.
    """
    if n < 5:
        raise ValueError("needs at least 5 groups")
    m = 2 * n - 1
    modular = [[0 if a % 3 == i % 3 else 1 for a in range(1, m + 1)] for i in (1, 2, 3)]
    if layout == "modular":
        rows = modular
    elif layout == "blocks":
        order = [a for r in (0, 2, 1) for a in range(1, m + 1) if a % 3 == r]
        rows = [[row[a - 1] for a in order] for row in modular]
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return Instance(m, tuple(tuple(tuple(r) for r in rows) for _ in range(n)))


# --------------------------------------------------------------------------
# 3-dimensional matching reduction

@dataclass(frozen=True)
class ThreeDmInstance:
    """Parts ``X1, X2, X3`` of size ``k`` and triples of indices into them."""

    k: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(tuple(t) for t in self.triples))
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        for t in self.triples:
            if len(t) != 3 or not all(0 <= x < self.k for x in t):
                raise ValueError(f"malformed triple {t}")

    @property
    def y_size(self) -> int:
        return 3 * (self.k + len(self.triples) + 2)

    @property
    def u_size(self) -> int:
        return 2 * self.k + len(self.triples) + 3

    def is_perfect_matching(self, chosen: Sequence[int]) -> bool:
        if len(chosen) != self.k or len(set(chosen)) != self.k:
            return False
        if not all(0 <= c < len(self.triples) for c in chosen):
            return False
        return all(len({self.triples[c][p] for c in chosen}) == self.k for p in range(3))

    def perfect_matchings(self) -> Iterable[tuple[int, ...]]:
        from itertools import combinations
        for chosen in combinations(range(len(self.triples)), self.k):
            if self.is_perfect_matching(chosen):
                yield chosen


def reduce_3dm(tdm: ThreeDmInstance) -> Instance:
    """Goods: ``X1`` (0..k-1), ``X2``, ``X3``, then ``Y``.  Groups: one per triple, then ``U``.

    Triple agent ``i`` likes ``x_i`` and all of ``Y``; agent ``i`` of a
    ``U`` group likes the ``Y`` goods whose 1-based index is not ``i`` mod 3.
    """
    k, ny = tdm.k, tdm.y_size
    m = 3 * k + ny
    groups = []
    for t in tdm.triples:
        grp = []
        for i in range(3):
            row = [0] * m
            row[i * k + t[i]] = 1
            row[3 * k:] = [1] * ny
            grp.append(row)
        groups.append(grp)
    for _ in range(tdm.u_size):
        groups.append([[0] * (3 * k) + [0 if y % 3 == i % 3 else 1 for y in range(1, ny + 1)]
                       for i in (1, 2, 3)])
    return Instance(m, groups)


def forward_alloc(tdm: ThreeDmInstance, matching: Sequence[int]) -> DiscreteAllocation:
    """The allocation a perfect matching (indices into ``triples``) induces."""
    if not tdm.is_perfect_matching(matching):
        raise ValueError(f"{list(matching)} is not a perfect matching")
    k, nt = tdm.k, len(tdm.triples)
    owner = [-1] * (3 * k + tdm.y_size)
    for c in matching:
        for i, x in enumerate(tdm.triples[c]):
            owner[i * k + x] = c
    y = 3 * k
    for t in range(nt):
        if t not in matching:
            owner[y] = t
            y += 1
    for u in range(tdm.u_size):
        owner[y] = owner[y + 1] = nt + u
        y += 2
    if y != len(owner) or -1 in owner:
        raise AssertionError("reduction bookkeeping is off")
    return DiscreteAllocation(tuple(owner))
