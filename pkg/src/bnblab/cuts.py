"""Cover-cut separation for knapsack rows.

For a row ``sum a_i x_i <= b`` and an LP point ``x*`` the separating cover is
found by the binary program

    d* = max  sum_i (x*_i - 1) w_i + 1   s.t.  sum_i a_i w_i >= b + 1,

whose optimal support ``C`` gives the cover inequality
``sum_{i in C} x_i <= |C| - 1``; it cuts off ``x*`` exactly when ``d* > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .engine import EngineOptions, solve
from .lp import LpProblem, solve_lp
from .model import GE, LE, LinearConstraint, MipInstance, Variable, make_constraint, make_instance


class SeparationError(ValueError):
    pass


@dataclass(frozen=True)
class CoverCut:
    cover: tuple[int, ...]
    source: str
    violation: Fraction

    @property
    def rhs(self) -> int:
        return len(self.cover) - 1

    def constraint(self, label: str) -> LinearConstraint:
        return make_constraint({i: 1 for i in self.cover}, LE, self.rhs, label)

    def to_record(self, instance: MipInstance, x_star=None) -> dict:
        rec = {
            "source": self.source,
            "cover": [instance.variables[i].label for i in self.cover],
            "d_star": str(self.violation),
        }
        if x_star is not None:
            rec["depth"] = cut_depth(self, x_star)
        return rec


@dataclass(frozen=True)
class Separation:
    """Outcome of one cut-generating IP: a violated cover, nothing, or a redundant row."""

    cut: CoverCut | None
    d_star: Fraction | None
    redundant: bool = False


def is_knapsack_row(instance: MipInstance, con: LinearConstraint) -> bool:
    if con.sense != LE or not con.coefficients:
        return False
    for i, a in con.coefficients.items():
        if a < 0 or a.denominator != 1:
            return False
        v = instance.variables[i]
        if not (v.is_integer and v.lower == 0 and v.upper == 1):
            return False
    return con.rhs.denominator == 1


def separate_cover(instance: MipInstance, row: int, x_star: Sequence[Fraction]) -> Separation:
    con = instance.constraints[row]
    if con.sense != LE:
        raise SeparationError(f"row {con.label} is not a <= row")
    for i, a in con.coefficients.items():
        v = instance.variables[i]
        if not (v.is_integer and v.lower == 0 and v.upper == 1):
            raise SeparationError(f"variable {v.label} in row {con.label} is not binary")
        if a < 0 or a.denominator != 1:
            raise SeparationError(f"row {con.label} has a non-integer or negative weight")

    n = instance.n
    w = [Variable(i, Fraction(0), Fraction(1), True, f"w{i + 1}") for i in range(n)]
    cover_row = make_constraint(dict(con.coefficients), GE, con.rhs + 1, "cover")
    objective = {i: Fraction(x_star[i]) - 1 for i in range(n)}
    cgip = make_instance(w, [cover_row], objective, f"cgip_{con.label}")
    res = solve(cgip, EngineOptions(rule="most-fractional"))
    if res.status != "optimal":
        return Separation(None, None, redundant=True)
    d_star = res.value + 1
    if d_star <= 0:
        return Separation(None, d_star)
    cover = tuple(i for i, wi in enumerate(res.incumbent.point) if wi == 1)
    return Separation(CoverCut(cover, con.label, d_star), d_star)


def find_all_covers(instance: MipInstance, x_star: Sequence[Fraction]) -> list[CoverCut]:
    """One separation per knapsack row; violated covers, deduplicated by cover set."""
    cuts, seen = [], set()
    for j, con in enumerate(instance.constraints):
        if not is_knapsack_row(instance, con):
            continue
        sep = separate_cover(instance, j, x_star)
        if sep.cut is not None and sep.cut.cover not in seen:
            seen.add(sep.cut.cover)
            cuts.append(sep.cut)
    return cuts


def apply_cuts(instance: MipInstance, cuts: Sequence[CoverCut]) -> MipInstance:
    if not cuts:
        return instance
    base = len(instance.constraints)
    rows = [cut.constraint(f"cover{base + k + 1}_{cut.source}") for k, cut in enumerate(cuts)]
    return instance.with_constraints(rows)


def cut_violation(cut: CoverCut, x_star: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(x_star[i]) for i in cut.cover), Fraction(0)) - cut.rhs


def cut_depth(cut: CoverCut, x_star: Sequence[Fraction]) -> float:
    """Euclidean distance from ``x_star`` to the cut hyperplane."""
    d = cut_violation(cut, x_star)
    if d <= 0:
        raise SeparationError("cut is not violated at x*")
    return float(d) / math.sqrt(len(cut.cover))


def rounds_of_cuts(instance: MipInstance, max_rounds: int) -> list[MipInstance]:
    """Instances after 0, 1, ... rounds of root cover separation.

    Stops early once the root LP is integral or nothing separates.
    """
    out = [instance]
    current = instance
    for _ in range(max_rounds):
        lp = solve_lp(LpProblem(current))
        if not lp.optimal:
            break
        if all(lp.point[i].denominator == 1 for i in current.integer_indices()):
            break
        cuts = find_all_covers(current, lp.point)
        if not cuts:
            break
        current = apply_cuts(current, cuts)
        out.append(current)
    return out
