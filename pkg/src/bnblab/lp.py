"""Exact bounded-variable simplex (primal, with dual repair on warm starts).

The working tableau is kept in dictionary form: for every basic column ``b``
in row ``i``::

    x[b] = beta_i - sum_j (rows[i][j] / den) * x[nonbasic[j]]

``rows`` holds integers and ``den`` is the absolute basis determinant of the
row-scaled integer constraint matrix, so pivots use the fraction-free update
``(a * p - f * b) / den`` whose division is exact.

Nonbasic columns sit at a finite bound (or at zero when free).  Values and
reduced costs are ``gmpy2.mpq``; everything leaving this module is a
``Fraction``.

Column layout: structural variables ``0..n-1``, one slack per constraint
``n..n+m-1`` (``a.x + s = b``), then phase-one artificials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import math

from gmpy2 import mpq, mpz

from .model import EQ, GE, LE, MipInstance, validate

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

# consecutive degenerate pivots before switching from Dantzig to Bland
BLAND_AFTER = 25
MAX_PIVOTS = 1_000_000
# dual pivots allowed on a warm start before falling back to a cold solve
DUAL_PIVOT_BUDGET = 500
# pending lazy pivots before every row is brought up to date
MATERIALIZE_AFTER = 12

ZERO = mpq(0)


class LpError(RuntimeError):
    pass


def _q(x) -> mpq | None:
    if x is None:
        return None
    return mpq(x.numerator, x.denominator)


def _frac(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


@dataclass(frozen=True)
class LpProblem:
    """LP relaxation of ``instance`` with per-variable bound overrides.

    An override is a ``(lower, upper)`` pair; ``None`` keeps the base bound.
    """

    instance: MipInstance
    overrides: Mapping[int, tuple] = field(default_factory=dict)

    def bounds(self, i: int) -> tuple[Fraction | None, Fraction | None]:
        var = self.instance.variables[i]
        lo, hi = var.lower, var.upper
        if i in self.overrides:
            olo, ohi = self.overrides[i]
            if olo is not None:
                lo = olo
            if ohi is not None:
                hi = ohi
        return lo, hi

    def tighten(self, i: int, lower=None, upper=None) -> "LpProblem":
        lo, hi = self.bounds(i)
        if lower is not None and (lo is None or lower > lo):
            lo = Fraction(lower)
        if upper is not None and (hi is None or upper < hi):
            hi = Fraction(upper)
        ov = dict(self.overrides)
        ov[i] = (lo, hi)
        return LpProblem(self.instance, ov)

    def check(self) -> list[str]:
        problems = validate(self.instance)
        for i, (olo, ohi) in self.overrides.items():
            if not 0 <= i < self.instance.n:
                problems.append(f"override on missing variable {i}")
                continue
            var = self.instance.variables[i]
            if olo is not None and var.lower is not None and olo < var.lower:
                problems.append(f"override loosens lower bound of {var.label}")
            if ohi is not None and var.upper is not None and ohi > var.upper:
                problems.append(f"override loosens upper bound of {var.label}")
        return problems


@dataclass(frozen=True)
class LpOutcome:
    status: str
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None
    # one entry per structural column then per slack: basic / lower / upper / free
    basis: tuple[str, ...] | None = None
    pivots: int = 0
    tableau: "_Tableau | None" = field(default=None, repr=False, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Simplex state with lazily applied pivots.

    Row ``i`` is stored as an integer vector valid at pivot level ``lvl[i]``
    plus the multipliers of every later pivot that touched it.  Pivots append
    to ``etas``; single columns and single rows are brought up to date on
    demand, and whole rows only when the tableau is reused or inspected.
    """

    __slots__ = ("n", "m", "lo", "hi", "cost", "basis", "nonbasic", "rows", "lvl", "mult", "etas",
                 "den", "x", "obj", "pivots", "_col")

    def copy(self) -> "_Tableau":
        self.materialize()
        t = _Tableau.__new__(_Tableau)
        t.n, t.m = self.n, self.m
        t.lo, t.hi, t.cost = self.lo[:], self.hi[:], self.cost
        t.basis, t.nonbasic = self.basis[:], self.nonbasic[:]
        # row vectors are replaced, never mutated in place, so sharing them is safe
        t.rows = self.rows[:]
        t.lvl = [0] * len(self.rows)
        t.mult = [[] for _ in self.rows]
        t.etas = []
        t.den = self.den
        t.x = self.x[:]
        t.obj = self.obj
        t.pivots = 0
        t._col = None
        return t

    def _reset_lazy(self) -> None:
        self.lvl = [0] * len(self.rows)
        self.mult = [[] for _ in self.rows]
        self.etas = []
        self._col = None

    # -- lazy access --------------------------------------------------------

    def row(self, i: int) -> list:
        """Current integer row ``i`` (scaled by ``den``)."""
        level = len(self.etas)
        start = self.lvl[i]
        if start == level:
            return self.rows[i]
        v = self.rows[i]
        for g, (_, q, pr, d, p) in zip(self.mult[i], self.etas[start:]):
            if g:
                v = [(a * p - g * b) // d for a, b in zip(v, pr)]
                v[q] = -g
            elif p != d:
                v = [a * p // d for a in v]
        self.rows[i], self.lvl[i], self.mult[i] = v, level, []
        return v

    def col(self, q: int) -> list:
        """Current integer column ``q`` over all rows (scaled by ``den``)."""
        level = len(self.etas)
        if self._col is not None and self._col[0] == level and self._col[1] == q:
            return self._col[2]
        etas = self.etas
        out = []
        for i, v0 in enumerate(self.rows):
            v = v0[q]
            start = self.lvl[i]
            if start < level:
                for g, (_, eq, pr, d, p) in zip(self.mult[i], etas[start:]):
                    if eq == q:
                        v = -g
                    elif g:
                        v = (v * p - g * pr[q]) // d
                    elif p != d:
                        v = v * p // d
            out.append(v)
        self._col = (level, q, out)
        return out

    def materialize(self) -> None:
        if self.etas:
            for i in range(len(self.rows)):
                self.row(i)
            self._reset_lazy()

    @property
    def pending(self) -> int:
        return len(self.etas)

    # -- basic moves ------------------------------------------------------

    def pivot(self, r: int, q: int, obj: list | None) -> list | None:
        den = self.den
        column = self.col(q)
        row_r = self.row(r)
        p = row_r[q]
        sign = 1 if p > 0 else -1
        new_den = abs(p)
        level = len(self.etas)
        for i, f in enumerate(column):
            if i != r:
                self.mult[i].append(sign * f)
        self.etas.append((r, q, row_r, den, new_den))
        new_r = [sign * a for a in row_r]
        new_r[q] = sign * den
        self.rows[r], self.lvl[r], self.mult[r] = new_r, level + 1, []
        if obj is not None and obj[q]:
            c = obj[q] / p
            obj = [o - c * b for o, b in zip(obj, row_r)]
            obj[q] = -c * den
        self.den = new_den
        self.basis[r], self.nonbasic[q] = self.nonbasic[q], self.basis[r]
        self.pivots += 1
        self._col = None
        if len(self.etas) >= MATERIALIZE_AFTER:
            self.materialize()
        return obj

    def move(self, q: int, delta: mpq) -> None:
        """Shift nonbasic position ``q`` by ``delta``, updating basic values."""
        if not delta:
            return
        x = self.x
        x[self.nonbasic[q]] += delta
        step = delta / self.den
        for i, c in enumerate(self.col(q)):
            if c:
                x[self.basis[i]] -= c * step

    def delete_nonbasic(self, cols: set) -> None:
        keep = [j for j, c in enumerate(self.nonbasic) if c not in cols]
        if len(keep) == len(self.nonbasic):
            return
        self.materialize()
        self.nonbasic = [self.nonbasic[j] for j in keep]
        self.rows = [[row[j] for j in keep] for row in self.rows]
        self._col = None

    def objective_row(self) -> list:
        """Reduced costs of the true objective for the current basis."""
        cost = self.cost
        obj = [cost[c] for c in self.nonbasic]
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                c = cb / self.den
                obj = [o - c * a for o, a in zip(obj, self.row(i))]
        return obj

    def value(self) -> mpq:
        return sum((c * self.x[j] for j, c in enumerate(self.cost) if c), ZERO)

    # -- simplex ------------------------------------------------------------

    def optimize(self, obj: list):
        """Run primal simplex on reduced-cost row ``obj`` (maximisation).

        Returns (status, obj) with status optimal or unbounded.
        """
        x, lo, hi = self.x, self.lo, self.hi
        degenerate = 0
        while True:
            bland = degenerate >= BLAND_AFTER
            q, sign = self._entering(obj, bland)
            if q is None:
                return OPTIMAL, obj
            e = self.nonbasic[q]
            best_t, leave, leave_at = None, None, None
            if lo[e] is not None and hi[e] is not None:
                best_t = hi[e] - lo[e]
            for i, a in enumerate(self.col(q)):
                if not a:
                    continue
                b = self.basis[i]
                rate = -a if sign > 0 else a
                if rate < 0:
                    bound = lo[b]
                    if bound is None:
                        continue
                    t = (x[b] - bound) * self.den / -rate
                else:
                    bound = hi[b]
                    if bound is None:
                        continue
                    t = (bound - x[b]) * self.den / rate
                if best_t is None or t < best_t or (t == best_t and leave is not None and b < self.basis[leave]):
                    best_t, leave, leave_at = t, i, bound
            if best_t is None:
                return UNBOUNDED, obj
            degenerate = degenerate + 1 if best_t == 0 else 0
            self.move(q, best_t if sign > 0 else -best_t)
            if leave is not None:
                b = self.basis[leave]
                x[b] = leave_at
                obj = self.pivot(leave, q, obj)
            if self.pivots > MAX_PIVOTS:
                raise LpError("pivot limit exceeded")

    def dual_repair(self, obj: list):
        """Bounded dual simplex until every basic column is within bounds.

        Returns (status, obj): ``optimal`` once primal feasible, ``infeasible``
        when a violated row cannot be repaired, None past the pivot budget.
        """
        x, lo, hi = self.x, self.lo, self.hi
        degenerate = 0
        for _ in range(DUAL_PIVOT_BUDGET):
            bland = degenerate >= BLAND_AFTER
            r, excess = None, None
            for i, b in enumerate(self.basis):
                if hi[b] is not None and x[b] > hi[b]:
                    e = x[b] - hi[b]
                elif lo[b] is not None and x[b] < lo[b]:
                    e = lo[b] - x[b]
                else:
                    continue
                if r is None or (b < self.basis[r] if bland else (e > excess or (e == excess and b < self.basis[r]))):
                    r, excess = i, e
            if r is None:
                return OPTIMAL, obj
            b = self.basis[r]
            over = hi[b] is not None and x[b] > hi[b]
            target = hi[b] if over else lo[b]
            row = self.row(r)
            q, best, best_col = None, None, None
            for j, a in enumerate(row):
                if not a:
                    continue
                c = self.nonbasic[j]
                l, h, v = lo[c], hi[c], x[c]
                if l is not None and h is not None and l == h:
                    continue
                # x_b moves by -a per unit increase of x_c
                up = (a > 0) == over
                if up and h is not None and v == h:
                    continue
                if not up and l is not None and v == l:
                    continue
                ratio = abs(obj[j] / a)
                if best is None or ratio < best or (ratio == best and c < best_col):
                    q, best, best_col = j, ratio, c
            if q is None:
                return INFEASIBLE, obj
            degenerate = degenerate + 1 if best == 0 else 0
            self.move(q, (x[b] - target) * self.den / row[q])
            x[b] = target
            obj = self.pivot(r, q, obj)
        return None, obj

    def _entering(self, obj, bland):
        x, lo, hi = self.x, self.lo, self.hi
        best_q, best_sign, best_mag, best_col = None, 0, None, None
        for j, d in enumerate(obj):
            if not d:
                continue
            c = self.nonbasic[j]
            l, h, v = lo[c], hi[c], x[c]
            if l is not None and h is not None and l == h:
                continue
            if d > 0:
                if h is not None and v == h:
                    continue
                sign, mag = 1, d
            else:
                if l is not None and v == l:
                    continue
                sign, mag = -1, -d
            if bland:
                if best_col is None or c < best_col:
                    best_q, best_sign, best_col = j, sign, c
            elif best_mag is None or mag > best_mag or (mag == best_mag and c < best_col):
                best_q, best_sign, best_mag, best_col = j, sign, mag, c
        return best_q, best_sign


def _effective_bounds(problem: LpProblem):
    inst = problem.instance
    lo, hi = [], []
    for i in range(inst.n):
        l, h = problem.bounds(i)
        lo.append(_q(l))
        hi.append(_q(h))
    return lo, hi


def _slack_bounds(sense):
    if sense == LE:
        return ZERO, None
    if sense == GE:
        return None, ZERO
    return ZERO, ZERO


def _cold_tableau(problem: LpProblem) -> tuple[_Tableau | None, set]:
    inst = problem.instance
    n, m = inst.n, len(inst.constraints)
    lo, hi = _effective_bounds(problem)
    if any(l is not None and h is not None and l > h for l, h in zip(lo, hi)):
        return None, set()
    x = [l if l is not None else (h if h is not None else ZERO) for l, h in zip(lo, hi)]

    dense_rows, resids = [], []
    slack_lo, slack_hi = [], []
    for con in inst.constraints:
        dense = [ZERO] * n
        resid = _q(con.rhs)
        for i, c in con.coefficients.items():
            qc = _q(c)
            dense[i] = qc
            resid -= qc * x[i]
        sl, sh = _slack_bounds(con.sense)
        dense_rows.append(dense)
        resids.append(resid)
        slack_lo.append(sl)
        slack_hi.append(sh)

    bad = [k for k in range(m)
           if (slack_lo[k] is not None and resids[k] < slack_lo[k])
           or (slack_hi[k] is not None and resids[k] > slack_hi[k])]
    t = _Tableau()
    t.n, t.m, t.pivots = n, m, 0
    t.lo = lo + slack_lo + [ZERO] * len(bad)
    t.hi = hi + slack_hi + [None] * len(bad)
    t.cost = [ZERO] * (n + m + len(bad))
    for i, c in inst.objective.items():
        t.cost[i] = _q(c)
    t.x = x + [ZERO] * (m + len(bad))
    # slacks of rows needing an artificial start nonbasic at zero
    t.nonbasic = list(range(n)) + [n + k for k in bad]
    extra = {k: n + j for j, k in enumerate(bad)}
    t.basis, t.rows = [], []
    arts = set()
    for k in range(m):
        row = dense_rows[k] + [ZERO] * len(bad)
        if k in extra:
            sigma = 1 if resids[k] > 0 else -1
            if sigma < 0:
                row = [-a for a in row]
            row[extra[k]] = mpq(sigma)
            col = n + m + len(arts)
            arts.add(col)
            t.basis.append(col)
            t.x[col] = abs(resids[k])
        else:
            t.basis.append(n + k)
            t.x[n + k] = resids[k]
        t.rows.append(row)
    _integerise(t)
    return t, arts


def _integerise(t: _Tableau) -> None:
    """Scale each initial row to integers; the determinant is the product of scales."""
    den = 1
    for row in t.rows:
        den *= math.lcm(*(int(a.denominator) for a in row)) if row else 1
    t.den = mpz(den)
    t.rows = [[mpz(a * den) for a in row] for row in t.rows]
    t.obj = None
    t._reset_lazy()


def _phase_one(t: _Tableau, arts: set) -> bool:
    """Drive artificials to zero; return False when the LP is infeasible."""
    width = len(t.nonbasic)
    obj = [ZERO] * width
    for i, b in enumerate(t.basis):
        if b in arts:
            obj = [o + mpq(a, t.den) for o, a in zip(obj, t.rows[i])]
    status, _ = t.optimize(obj)
    if any(t.x[a] for a in arts):
        return False
    # pivot zero-valued artificials out of the basis where possible
    for r, b in enumerate(t.basis):
        if b not in arts:
            continue
        row = t.row(r)
        for q, c in enumerate(t.nonbasic):
            if c not in arts and row[q]:
                t.pivot(r, q, None)
                break
        else:
            t.hi[b] = ZERO  # redundant row: artificial stays basic, fixed at zero
    t.delete_nonbasic(arts)
    for a in arts:
        t.hi[a] = ZERO
    return True


def _finish(t: _Tableau, problem: LpProblem, status: str) -> LpOutcome:
    if status == UNBOUNDED:
        return LpOutcome(UNBOUNDED, pivots=t.pivots)
    n, m = t.n, t.m
    basic = set(t.basis)
    labels = []
    for c in range(n + m):
        if c in basic:
            labels.append("basic")
        elif t.lo[c] is not None and t.x[c] == t.lo[c]:
            labels.append("lower")
        elif t.hi[c] is not None and t.x[c] == t.hi[c]:
            labels.append("upper")
        else:
            labels.append("free")
    point = tuple(_frac(v) for v in t.x[:n])
    return LpOutcome(OPTIMAL, _frac(t.value()), point, tuple(labels), t.pivots, t)


def _solve_cold(problem: LpProblem) -> LpOutcome:
    t, arts = _cold_tableau(problem)
    if t is None:
        return LpOutcome(INFEASIBLE)
    if arts and not _phase_one(t, arts):
        return LpOutcome(INFEASIBLE, pivots=t.pivots)
    status, t.obj = t.optimize(t.objective_row())
    return _finish(t, problem, status)


def _solve_warm(problem: LpProblem, parent: _Tableau) -> LpOutcome | None:
    """Re-optimise from a parent's optimal tableau after bound changes.

    Basic columns pushed outside their new bounds are repaired by bounded dual
    simplex pivots, then a primal pass confirms optimality.  Returns None when
    the warm start does not apply (shape mismatch or too many dual pivots).
    """
    lo, hi = _effective_bounds(problem)
    t = parent.copy()
    n = t.n
    if t.m != len(problem.instance.constraints) or n != problem.instance.n:
        return None
    pos = {c: j for j, c in enumerate(t.nonbasic)}
    for i in range(n):
        if lo[i] == t.lo[i] and hi[i] == t.hi[i]:
            continue
        if lo[i] is not None and hi[i] is not None and lo[i] > hi[i]:
            return LpOutcome(INFEASIBLE)
        t.lo[i], t.hi[i] = lo[i], hi[i]
        if i in pos:
            v = t.x[i]
            if v == lo[i] or v == hi[i]:
                continue
            if lo[i] is not None and v < lo[i]:
                t.move(pos[i], lo[i] - v)
            elif hi[i] is not None and v > hi[i]:
                t.move(pos[i], hi[i] - v)
    # bound changes leave reduced costs untouched
    obj = t.obj if t.obj is not None else t.objective_row()
    status, obj = t.dual_repair(obj)
    if status == INFEASIBLE:
        return LpOutcome(INFEASIBLE, pivots=t.pivots)
    if status is None:
        return None
    status, t.obj = t.optimize(obj)
    return _finish(t, problem, status)


def solve_lp(problem: LpProblem, warm: LpOutcome | None = None) -> LpOutcome:
    """Solve the LP relaxation exactly.

    ``warm`` may carry the optimal outcome of an LP over the same constraint
    rows; it only changes the starting basis, never the status or value.
    """
    if warm is not None and warm.tableau is not None:
        out = _solve_warm(problem, warm.tableau)
        if out is not None:
            return out
    return _solve_cold(problem)


def vertex_table(problem: LpProblem, faces: Sequence[Mapping[int, object]]) -> list[LpOutcome]:
    """Solve ``problem`` on each face given as ``{variable: fixed value}``."""
    out = []
    for face in faces:
        p = problem
        for i, v in face.items():
            p = p.tighten(i, Fraction(v), Fraction(v))
        out.append(solve_lp(p))
    return out


def dump_tableau(outcome: LpOutcome) -> str:
    """Human-readable tableau of an optimal outcome, for debugging."""
    t = outcome.tableau
    if t is None:
        return f"<no tableau: {outcome.status}>"

    def name(c):
        if c < t.n:
            return f"x{c}"
        if c < t.n + t.m:
            return f"s{c - t.n}"
        return f"a{c - t.n - t.m}"

    lines = ["basic | value | " + " ".join(name(c) for c in t.nonbasic)]
    t.materialize()
    for b, row in zip(t.basis, t.rows):
        lines.append(f"{name(b)} | {t.x[b]} | " + " ".join(str(mpq(a, t.den)) for a in row))
    return "\n".join(lines)
