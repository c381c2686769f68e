"""Exact rational linear programming that returns vertices.

The solver is a bounded-variable primal simplex (largest-coefficient pivoting,
falling back to Bland's rule on degenerate stalls), run in
exact rational arithmetic (``gmpy2.mpq`` internally, ``Fraction`` at the
interface).  Single-variable constraints are absorbed as variable bounds;
every other constraint becomes a tableau row.  After the simplex finishes,
the point is walked to a vertex of the caller's polyhedron if needed (free
variables can leave the simplex at a non-vertex optimum), so the returned
point always has ``num_vars`` linearly independent tight constraints when
the polyhedron has vertices at all.

Worst-case running time is exponential (simplex), which is irrelevant at the
sizes this package works with.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = (LE, EQ, GE)
_MAX_ITERATIONS = 200_000
_DEGENERATE_STREAK = 10


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, Fraction]  # sparse: variable index -> coefficient
    relation: str
    rhs: Fraction

    def lhs(self, x: Sequence) -> Fraction:
        return sum((c * x[j] for j, c in self.coeffs.items()), Fraction(0))

    def satisfied(self, x: Sequence) -> bool:
        v = self.lhs(x)
        return v <= self.rhs if self.relation == LE else v >= self.rhs if self.relation == GE else v == self.rhs

    def dense(self, n: int) -> list[Fraction]:
        row = [Fraction(0)] * n
        for j, c in self.coeffs.items():
            row[j] = c
        return row


@dataclass
class LinearProgram:
    num_vars: int
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, Fraction] = field(default_factory=dict)
    maximize: bool = True
    names: list[str] | None = None

    def add(self, coeffs, relation: str, rhs) -> int:
        """Add a constraint; ``coeffs`` is a dense sequence or a {var: coef} map."""
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        if isinstance(coeffs, Mapping):
            items = coeffs.items()
        else:
            if len(coeffs) != self.num_vars:
                raise ValueError(f"coefficient vector has length {len(coeffs)}, expected {self.num_vars}")
            items = enumerate(coeffs)
        sparse = {}
        for j, c in items:
            if not 0 <= j < self.num_vars:
                raise ValueError(f"variable {j} out of range")
            c = Fraction(c)
            if c:
                sparse[j] = sparse.get(j, Fraction(0)) + c
        self.constraints.append(Constraint(sparse, relation, Fraction(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, coeffs, maximize: bool = True) -> None:
        items = coeffs.items() if isinstance(coeffs, Mapping) else enumerate(coeffs)
        self.objective = {j: Fraction(c) for j, c in items if c}
        self.maximize = maximize

    def objective_value(self, x: Sequence) -> Fraction:
        return sum((c * x[j] for j, c in self.objective.items()), Fraction(0))

    def is_feasible(self, x: Sequence) -> bool:
        return all(con.satisfied(x) for con in self.constraints)

    def tight_rows(self, x: Sequence) -> frozenset[int]:
        return frozenset(i for i, con in enumerate(self.constraints) if con.lhs(x) == con.rhs)


@dataclass(frozen=True)
class BfsSolution:
    status: Status
    values: tuple[Fraction, ...] = ()
    tight_rows: frozenset[int] = frozenset()
    objective_value: Fraction | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def count_fractional(values: Sequence, indices: Iterable[int] | None = None) -> int:
    if indices is None:
        indices = range(len(values))
    return sum(1 for j in indices if 0 < values[j] < 1)


# --------------------------------------------------------------------------
# exact linear algebra helpers

def rank_and_null_vector(rows: Sequence[Sequence], n: int):
    """Rank of ``rows`` and one nonzero vector in their null space (or None)."""
    mat = [[mpq(v) for v in r] for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        p = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        pr = mat[r]
        inv = 1 / pr[col]
        for c in range(col, n):
            pr[c] *= inv
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                row = mat[i]
                for c in range(col, n):
                    if pr[c]:
                        row[c] -= f * pr[c]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    if len(pivots) == n:
        return n, None
    free = next(c for c in range(n) if c not in pivots)
    vec = [mpq(0)] * n
    vec[free] = mpq(1)
    for i, pc in enumerate(pivots):
        vec[pc] = -mat[i][free]
    return len(pivots), vec


# --------------------------------------------------------------------------
# simplex

class _Unbounded(Exception):
    pass


class _Tableau:
    """Sparse tableau: one {column: coefficient} dict per basic row."""

    def __init__(self, rows, basis, upper, values):
        self.rows = rows
        self.basis = basis
        self.upper = upper
        self.values = values
        self.col_rows: dict[int, set[int]] = {}
        for r, row in enumerate(rows):
            for c in row:
                self.col_rows.setdefault(c, set()).add(r)

    def pivot(self, r: int, j: int, obj: dict) -> None:
        prow = self.rows[r]
        a = prow[j]
        if a != 1:
            inv = 1 / a
            for c in prow:
                prow[c] *= inv
        for i in list(self.col_rows.get(j, ())):
            if i == r:
                continue
            self._eliminate(self.rows[i], i, prow, j)
        if j in obj:
            f = obj[j]
            for c, v in prow.items():
                nv = obj.get(c, 0) - f * v
                if nv:
                    obj[c] = nv
                else:
                    obj.pop(c, None)
        self.basis[r] = j

    def _eliminate(self, row, i, prow, j):
        f = row[j]
        for c, v in prow.items():
            nv = row.get(c, 0) - f * v
            if nv:
                if c not in row:
                    self.col_rows.setdefault(c, set()).add(i)
                row[c] = nv
            else:
                if c in row:
                    del row[c]
                    self.col_rows[c].discard(i)

    def run(self, obj: dict, frozen: set[int]) -> None:
        """Maximise; ``obj`` is the reduced-cost row and is kept current.

        Entering variable: largest reduced cost (smallest index on ties).
        After ``_DEGENERATE_STREAK`` pivots in a row without progress the
        rule falls back to Bland's until the objective moves again; cycling
        can only happen inside such a streak, so this terminates.
        """
        basic = set(self.basis)
        upper, values = self.upper, self.values
        stalled = 0
        for _ in range(_MAX_ITERATIONS):
            bland = stalled >= _DEGENERATE_STREAK
            entering, best = None, None
            for j in sorted(obj):
                if j in basic or j in frozen:
                    continue
                d = obj[j]
                u = upper[j]
                if d > 0 and values[j] == 0 and (u is None or u > 0):
                    step = 1
                elif d < 0 and u is not None and values[j] == u and u > 0:
                    step = -1
                else:
                    continue
                if bland:
                    entering, delta = j, step
                    break
                if best is None or abs(d) > best:
                    entering, delta, best = j, step, abs(d)
            if entering is None:
                return
            j = entering
            best_t = upper[j]
            leave_row, leave_col, leave_to = None, j, None
            for r in self.col_rows.get(j, ()):
                a = self.rows[r][j]
                b = self.basis[r]
                rate = -delta * a  # change of basic b per unit step
                if rate < 0:
                    t = values[b] / -rate
                    to = 0
                elif upper[b] is not None:
                    t = (upper[b] - values[b]) / rate
                    to = upper[b]
                else:
                    continue
                if best_t is None or t < best_t or (t == best_t and b < leave_col):
                    best_t, leave_row, leave_col, leave_to = t, r, b, to
            if best_t is None:
                raise _Unbounded
            t = best_t
            stalled = 0 if t else stalled + 1
            if t:
                values[j] += delta * t
                for r in self.col_rows.get(j, ()):
                    b = self.basis[r]
                    values[b] -= delta * self.rows[r][j] * t
            if leave_row is None:
                values[j] = upper[j] if delta == 1 else mpq(0)
                continue
            values[leave_col] = leave_to
            basic.discard(leave_col)
            basic.add(j)
            self.pivot(leave_row, j, obj)
        raise RuntimeError("simplex iteration limit reached")


def _simplex(lp: LinearProgram):
    """Return (status, x, loose); x is optimal and a vertex unless ``loose``."""
    n = lp.num_vars
    lower: list = [None] * n
    upper: list = [None] * n
    general: list[Constraint] = []
    for con in lp.constraints:
        if len(con.coeffs) == 0:
            if not con.satisfied([0] * n):
                return Status.INFEASIBLE, None, False
            continue
        if len(con.coeffs) > 1:
            general.append(con)
            continue
        (j, a), = con.coeffs.items()
        bound = mpq(con.rhs) / mpq(a)
        rel = con.relation
        if a < 0 and rel != EQ:
            rel = GE if rel == LE else LE
        if rel in (GE, EQ) and (lower[j] is None or bound > lower[j]):
            lower[j] = bound
        if rel in (LE, EQ) and (upper[j] is None or bound < upper[j]):
            upper[j] = bound
    for j in range(n):
        if lower[j] is not None and upper[j] is not None and lower[j] > upper[j]:
            return Status.INFEASIBLE, None, False

    # x_j = offset_j + sum(sign * z_col)
    offset = [mpq(0)] * n
    cols: list[list[tuple[int, int]]] = []
    zupper: list = []
    for j in range(n):
        if lower[j] is not None:
            offset[j] = lower[j]
            cols.append([(len(zupper), 1)])
            zupper.append(None if upper[j] is None else upper[j] - lower[j])
        elif upper[j] is not None:
            offset[j] = upper[j]
            cols.append([(len(zupper), -1)])
            zupper.append(None)
        else:
            cols.append([(len(zupper), 1), (len(zupper) + 1, -1)])
            zupper.extend([None, None])
    nz = len(zupper)

    rows, rhs, slack_sign = [], [], []
    for con in general:
        row: dict[int, mpq] = {}
        b = mpq(con.rhs)
        for j, a in con.coeffs.items():
            a = mpq(a)
            b -= a * offset[j]
            for c, s in cols[j]:
                row[c] = row.get(c, 0) + s * a
        row = {c: v for c, v in row.items() if v}
        s = 1 if con.relation == LE else -1 if con.relation == GE else 0
        if b < 0:
            row = {c: -v for c, v in row.items()}
            b, s = -b, -s
        rows.append(row)
        rhs.append(b)
        slack_sign.append(s)

    upper_all = list(zupper)
    values = [mpq(0)] * nz
    basis = []
    artificials = []
    for r, s in enumerate(slack_sign):
        if s:
            c = len(upper_all)
            rows[r][c] = mpq(s)
            upper_all.append(None)
            values.append(mpq(0))
        if s == 1:
            basis.append(c)
            values[c] = rhs[r]
        else:
            c = len(upper_all)
            rows[r][c] = mpq(1)
            upper_all.append(None)
            values.append(rhs[r])
            basis.append(c)
            artificials.append(c)

    tab = _Tableau(rows, basis, upper_all, values)
    art = set(artificials)
    if artificials:
        obj: dict = {}
        for r, b in enumerate(basis):
            if b in art:
                for c, v in rows[r].items():
                    if c not in art:
                        obj[c] = obj.get(c, 0) + v
        obj = {c: v for c, v in obj.items() if v}
        tab.run(obj, frozen=set())
        if any(values[c] != 0 for c in artificials):
            return Status.INFEASIBLE, None, False
        # drive zero-level artificials out of the basis
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] in art:
                row = tab.rows[r]
                j = min((c for c in row if c not in art), default=None)
                if j is None:
                    for c in row:
                        tab.col_rows[c].discard(r)
                    del tab.rows[r], tab.basis[r]
                    # reindex rows after deletion
                    tab.col_rows = {}
                    for i, rw in enumerate(tab.rows):
                        for c in rw:
                            tab.col_rows.setdefault(c, set()).add(i)
                    continue
                tab.pivot(r, j, {})
            r += 1
        for c in artificials:
            upper_all[c] = mpq(0)

    # phase 2 objective in z-space
    sign = 1 if lp.maximize else -1
    cz: dict[int, mpq] = {}
    for j, c in lp.objective.items():
        for col, s in cols[j]:
            cz[col] = cz.get(col, 0) + sign * s * mpq(c)
    obj = {c: v for c, v in cz.items() if v}
    for r, b in enumerate(tab.basis):
        f = cz.get(b)
        if f:
            for c, v in tab.rows[r].items():
                nv = obj.get(c, 0) - f * v
                if nv:
                    obj[c] = nv
                else:
                    obj.pop(c, None)
    try:
        tab.run(obj, frozen=art)
    except _Unbounded:
        return Status.UNBOUNDED, None, False
    x = []
    for j in range(n):
        v = offset[j]
        for c, s in cols[j]:
            v += s * values[c]
        x.append(v)
    basic = set(tab.basis)
    # a free variable with both halves nonbasic sits at 0 without a tight row
    loose = any(len(cj) == 2 and not (cj[0][0] in basic or cj[1][0] in basic) for cj in cols)
    return Status.OPTIMAL, x, loose


def _to_vertex(lp: LinearProgram, x: list) -> list:
    """Move an optimal point along objective-neutral directions until it is a vertex."""
    n = lp.num_vars
    cons = [(dict((j, mpq(a)) for j, a in c.coeffs.items()), c.relation, mpq(c.rhs)) for c in lp.constraints]
    while True:
        lhs = [sum((a * x[j] for j, a in co.items()), mpq(0)) for co, _, _ in cons]
        tight = [i for i, (co, rel, b) in enumerate(cons) if lhs[i] == b]
        dense = [[cons[i][0].get(j, 0) for j in range(n)] for i in tight]
        rank, d = rank_and_null_vector(dense, n)
        if d is None:
            return x
        if sum((mpq(c) * d[j] for j, c in lp.objective.items()), mpq(0)) != 0:
            raise RuntimeError("non-vertex point is not optimal")
        tight_set = set(tight)
        for direction in (1, -1):
            step = None
            for i, (co, rel, b) in enumerate(cons):
                if i in tight_set:
                    continue
                s = direction * sum((a * d[j] for j, a in co.items()), mpq(0))
                if rel == LE and s > 0:
                    t = (b - lhs[i]) / s
                elif rel == GE and s < 0:
                    t = (lhs[i] - b) / -s
                else:
                    continue
                if step is None or t < step:
                    step = t
            if step is not None:
                x = [x[j] + direction * step * d[j] for j in range(n)]
                break
        else:
            # the feasible set contains a line: no vertex exists
            return x


def solve_to_optimal_bfs(lp: LinearProgram) -> BfsSolution:
    """Optimal vertex of ``lp``; ``status`` reports infeasible/unbounded LPs."""
    status, x, loose = _simplex(lp)
    if status is not Status.OPTIMAL:
        return BfsSolution(status)
    if loose:
        x = _to_vertex(lp, x)
    values = tuple(Fraction(int(v.numerator), int(v.denominator)) for v in x)
    return BfsSolution(Status.OPTIMAL, values, lp.tight_rows(values), lp.objective_value(values))


def tight_rank(lp: LinearProgram, sol: BfsSolution) -> int:
    rows = [lp.constraints[i].dense(lp.num_vars) for i in sorted(sol.tight_rows)]
    return rank_and_null_vector(rows, lp.num_vars)[0]
