"""Exact data model for mixed-integer linear programs.

All numeric data is held as :class:`fractions.Fraction`.  The objective sense
is always maximisation.  Unbounded variable bounds are represented by ``None``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

Rational = Fraction

LE, GE, EQ = "<=", ">=", "="
SENSES = (LE, GE, EQ)

MAX_LATTICE = 2 ** 24


class ModelError(ValueError):
    pass


class LatticeTooLarge(ModelError):
    pass


def rational(value) -> Fraction:
    """Coerce ``value`` to an exact Fraction.

    Strings may be decimals (``"8.5"``) or ratios (``"17/2"``).  Floats are read
    through their shortest repr so that ``0.3`` means three tenths.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    # gmpy2.mpq and other numbers.Rational implementations
    return Fraction(value)


def is_integral(value: Fraction) -> bool:
    return value.denominator == 1


@dataclass(frozen=True)
class Variable:
    index: int
    lower: Fraction | None = Fraction(0)
    upper: Fraction | None = None
    is_integer: bool = False
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or f"v{self.index}"


@dataclass(frozen=True)
class LinearConstraint:
    coefficients: Mapping[int, Fraction]
    sense: str
    rhs: Fraction
    label: str = ""

    def activity(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * point[i] for i, c in self.coefficients.items()), Fraction(0))

    def satisfied_by(self, point: Sequence[Fraction]) -> bool:
        lhs = self.activity(point)
        if self.sense == LE:
            return lhs <= self.rhs
        if self.sense == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class MipInstance:
    variables: tuple[Variable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: Mapping[int, Fraction]
    name: str = "instance"

    @property
    def n(self) -> int:
        return len(self.variables)

    def objective_value(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * point[i] for i, c in self.objective.items()), Fraction(0))

    def integer_indices(self) -> list[int]:
        return [v.index for v in self.variables if v.is_integer]

    def is_feasible(self, point: Sequence[Fraction], integrality: bool = True) -> bool:
        if len(point) != self.n:
            return False
        for v, x in zip(self.variables, point):
            if v.lower is not None and x < v.lower:
                return False
            if v.upper is not None and x > v.upper:
                return False
            if integrality and v.is_integer and not is_integral(x):
                return False
        return all(con.satisfied_by(point) for con in self.constraints)

    def with_constraints(self, extra: Iterable[LinearConstraint], name: str | None = None) -> "MipInstance":
        return replace(self, constraints=self.constraints + tuple(extra), name=name or self.name)


@dataclass(frozen=True)
class OptResult:
    status: str
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def make_constraint(terms: Mapping[int, object], sense: str, rhs, label: str) -> LinearConstraint:
    """Build a constraint, dropping zero coefficients."""
    coefs = {}
    for i, c in terms.items():
        c = rational(c)
        if c != 0:
            coefs[int(i)] = c
    return LinearConstraint(dict(sorted(coefs.items())), sense, rational(rhs), label)


def make_instance(variables: Sequence[Variable], constraints: Sequence[LinearConstraint],
                  objective: Mapping[int, object], name: str) -> MipInstance:
    obj = {int(i): rational(c) for i, c in objective.items() if rational(c) != 0}
    return MipInstance(tuple(variables), tuple(constraints), dict(sorted(obj.items())), name)


def validate(instance: MipInstance) -> list[str]:
    """Return a description of every broken invariant (empty when valid)."""
    problems = []
    n = instance.n
    if n == 0:
        problems.append("instance has no variables")
    if not instance.name:
        problems.append("instance name is empty")
    for pos, v in enumerate(instance.variables):
        if not v.name:
            problems.append(f"variable #{pos}: empty name")
        if v.index != pos:
            problems.append(f"variable {v.label}: index {v.index} at position {pos}")
        if v.lower is not None and v.upper is not None and v.lower > v.upper:
            problems.append(f"variable {v.label}: lower {v.lower} > upper {v.upper}")
    for k, con in enumerate(instance.constraints):
        tag = con.label or f"#{k}"
        if not con.label:
            problems.append(f"constraint #{k}: empty label")
        if con.sense not in SENSES:
            problems.append(f"constraint {tag}: unknown sense {con.sense!r}")
        for i, c in con.coefficients.items():
            if not 0 <= i < n:
                problems.append(f"constraint {tag}: references missing variable {i}")
            if c == 0:
                problems.append(f"constraint {tag}: zero coefficient on variable {i}")
    for i in instance.objective:
        if not 0 <= i < n:
            problems.append(f"objective references missing variable {i}")
    return problems


# ---------------------------------------------------------------------------
# brute-force oracle


def _int_rows(instance: MipInstance):
    """Rows scaled to integers as (coef vector, sense, rhs)."""
    rows = []
    for con in instance.constraints:
        den = math.lcm(con.rhs.denominator, *(c.denominator for c in con.coefficients.values()))
        vec = np.zeros(instance.n, dtype=object)
        for i, c in con.coefficients.items():
            vec[i] = int(c * den)
        rhs = int(con.rhs * den)
        rows.append((vec, con.sense, rhs))
    return rows


def brute_force_opt(instance: MipInstance) -> OptResult:
    """Exact optimum by enumerating every integer assignment.

    Continuous variables, if any, are optimised by an LP for each assignment.
    Ties keep the lexicographically first assignment.
    """
    ints = instance.integer_indices()
    for i in ints:
        v = instance.variables[i]
        if v.lower is None or v.upper is None:
            raise ModelError(f"integer variable {v.label} needs finite bounds")
    ranges = [range(math.ceil(instance.variables[i].lower), math.floor(instance.variables[i].upper) + 1)
              for i in ints]
    size = math.prod(len(r) for r in ranges)
    if size > MAX_LATTICE:
        raise LatticeTooLarge(f"lattice has {size} points (limit {MAX_LATTICE})")
    if size == 0:
        return OptResult("infeasible")
    if len(ints) == instance.n:
        return _enumerate_pure(instance, ints, ranges)
    return _enumerate_mixed(instance, ints, ranges)


def _enumerate_pure(instance: MipInstance, ints, ranges) -> OptResult:
    n = instance.n
    obj_den = math.lcm(1, *(c.denominator for c in instance.objective.values()))
    obj = np.zeros(n, dtype=object)
    for i, c in instance.objective.items():
        obj[i] = int(c * obj_den)
    rows = _int_rows(instance)
    best_key, best_pt = None, None
    chunk = 1 << 16
    it = itertools.product(*ranges)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            break
        pts = np.array(block, dtype=object)
        ok = np.ones(len(block), dtype=bool)
        for vec, sense, rhs in rows:
            lhs = pts.dot(vec)
            if sense == LE:
                ok &= (lhs <= rhs).astype(bool)
            elif sense == GE:
                ok &= (lhs >= rhs).astype(bool)
            else:
                ok &= (lhs == rhs).astype(bool)
        if not ok.any():
            continue
        feas = pts[ok]
        vals = feas.dot(obj)
        k = int(np.argmax(vals))
        if best_key is None or vals[k] > best_key:
            best_key, best_pt = vals[k], tuple(Fraction(int(x)) for x in feas[k])
    if best_pt is None:
        return OptResult("infeasible")
    return OptResult("optimal", instance.objective_value(best_pt), best_pt)


def _enumerate_mixed(instance: MipInstance, ints, ranges) -> OptResult:
    from .lp import LpProblem, solve_lp

    best = None
    for combo in itertools.product(*ranges):
        overrides = {i: (Fraction(x), Fraction(x)) for i, x in zip(ints, combo)}
        out = solve_lp(LpProblem(instance, overrides))
        if out.status == "unbounded":
            raise ModelError("continuous part is unbounded")
        if out.status != "optimal":
            continue
        if best is None or out.value > best.value:
            best = OptResult("optimal", out.value, out.point)
    return best or OptResult("infeasible")


# ---------------------------------------------------------------------------
# file format


def _num(x: Fraction | None):
    return None if x is None else str(x)


def to_document(instance: MipInstance) -> dict:
    return {
        "name": instance.name,
        "variables": [
            {"name": v.name, "lower": _num(v.lower), "upper": _num(v.upper), "integer": v.is_integer}
            for v in instance.variables
        ],
        "constraints": [
            {
                "label": con.label,
                "terms": [{"var": instance.variables[i].label, "coef": str(c)}
                          for i, c in con.coefficients.items()],
                "sense": con.sense,
                "rhs": str(con.rhs),
            }
            for con in instance.constraints
        ],
        "objective": [{"var": instance.variables[i].label, "coef": str(c)}
                      for i, c in instance.objective.items()],
    }


def from_document(doc: Mapping) -> MipInstance:
    variables = []
    by_name = {}
    for k, item in enumerate(doc["variables"]):
        lo, hi = item.get("lower"), item.get("upper")
        var = Variable(k, None if lo is None else rational(lo), None if hi is None else rational(hi),
                       bool(item.get("integer", False)), item["name"])
        if var.label in by_name:
            raise ModelError(f"duplicate variable name {var.label!r}")
        by_name[var.label] = k
        variables.append(var)

    def index(name):
        try:
            return by_name[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    constraints = []
    for item in doc.get("constraints", []):
        sense = item["sense"]
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        terms = {}
        for t in item["terms"]:
            i = index(t["var"])
            terms[i] = terms.get(i, Fraction(0)) + rational(t["coef"])
        constraints.append(make_constraint(terms, sense, item["rhs"], item["label"]))
    objective = {}
    for t in doc.get("objective", []):
        i = index(t["var"])
        objective[i] = objective.get(i, Fraction(0)) + rational(t["coef"])
    return make_instance(variables, constraints, objective, doc["name"])


def dumps(instance: MipInstance) -> str:
    return json.dumps(to_document(instance), indent=1) + "\n"


def loads(text: str) -> MipInstance:
    return from_document(json.loads(text))


def save(instance: MipInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(instance))


def load(path) -> MipInstance:
    with open(path) as fh:
        return loads(fh.read())


__all__ = [
    "Rational", "rational", "is_integral", "Variable", "LinearConstraint", "MipInstance", "OptResult",
    "make_constraint", "make_instance", "validate", "brute_force_opt", "ModelError", "LatticeTooLarge",
    "LE", "GE", "EQ", "dumps", "loads", "save", "load", "to_document", "from_document",
]
