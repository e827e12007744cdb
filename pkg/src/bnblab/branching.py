"""Branching rules over fractional variables.

Full strong branching probes both children of every fractional candidate and
aggregates the two LP gains with a product, linear or ratio score.  Infeasible
children outrank any finite score: a variable with two infeasible children
wins outright, then one infeasible child ranked by the feasible side's gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .lp import INFEASIBLE, OPTIMAL, LpOutcome, LpProblem, solve_lp
from .model import MipInstance

PRODUCT_EPS = Fraction(1, 10 ** 6)
LINEAR_MU = Fraction(1, 6)
RATIO_FLOOR = Fraction(1, 10 ** 6)
RATIO_TOL = 1e-12

RULES = ("fsb-product", "fsb-linear", "fsb-ratio", "most-fractional", "fixed-order")

TIER_FINITE, TIER_ONE_INFEASIBLE, TIER_BOTH_INFEASIBLE = 0, 1, 2


class BranchingError(RuntimeError):
    pass


@dataclass(frozen=True)
class GainPair:
    """LP gains of the down and up child; ``None`` marks an infeasible child."""

    down: Fraction | None
    up: Fraction | None

    @property
    def infeasible_count(self) -> int:
        return (self.down is None) + (self.up is None)


@dataclass(frozen=True, order=True)
class BranchScore:
    tier: int
    key: object = 0

    def __str__(self):
        if self.tier == TIER_BOTH_INFEASIBLE:
            return "inf/inf"
        if self.tier == TIER_ONE_INFEASIBLE:
            return f"inf({self.key})"
        return str(self.key)


def _tiered(g: GainPair) -> BranchScore | None:
    k = g.infeasible_count
    if k == 2:
        return BranchScore(TIER_BOTH_INFEASIBLE, 0)
    if k == 1:
        return BranchScore(TIER_ONE_INFEASIBLE, g.up if g.down is None else g.down)
    return None


def product_score(g: GainPair, epsilon: Fraction = PRODUCT_EPS) -> BranchScore:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return _tiered(g) or BranchScore(TIER_FINITE, max(g.down, epsilon) * max(g.up, epsilon))


def linear_score(g: GainPair, mu: Fraction = LINEAR_MU) -> BranchScore:
    if not 0 <= mu <= 1:
        raise ValueError("mu must lie in [0, 1]")
    tier = _tiered(g)
    if tier:
        return tier
    lo, hi = sorted((g.down, g.up))
    return BranchScore(TIER_FINITE, (1 - mu) * lo + mu * hi)


def ratio_root(down: float, up: float, tol: float = RATIO_TOL) -> float:
    """Root greater than one of phi**max - phi**|down - up| - 1 (positive gains)."""
    top, small = max(down, up), min(down, up)
    diff = top - small

    # sign of p(phi) equals the sign of diff*log(phi) + log(phi**small - 1)
    def h(log_phi):
        return diff * log_phi + math.log(math.expm1(small * log_phi))

    log_hi = math.log(2.0) / small
    if log_hi < 700.0:
        lo, hi = 1.0 + 1e-12, 2.0 ** (1.0 / small) + 1.0
        if h(math.log(lo)) >= 0:
            return lo
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if h(math.log(mid)) < 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    # bracket not representable: bisect on log(phi) instead
    lo, hi = 0.0, log_hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    # the root itself may exceed the float range (both gains tiny); its score is then 0
    return math.exp(mid) if mid < 709.0 else math.inf


def ratio_score(g: GainPair, floor_eps: Fraction = RATIO_FLOOR, tol: float = RATIO_TOL) -> BranchScore:
    if floor_eps <= 0 or tol <= 0:
        raise ValueError("floor_eps and tol must be positive")
    tier = _tiered(g)
    if tier:
        return tier
    down = float(max(g.down, floor_eps))
    up = float(max(g.up, floor_eps))
    phi = ratio_root(down, up, tol)
    return BranchScore(TIER_FINITE, 1.0 / phi)


def most_fractional_score(v: Fraction) -> BranchScore:
    f = v - math.floor(v)
    return BranchScore(TIER_FINITE, min(f, 1 - f))


@dataclass(frozen=True)
class Rule:
    name: str
    epsilon: Fraction = PRODUCT_EPS
    mu: Fraction = LINEAR_MU
    floor_eps: Fraction = RATIO_FLOOR
    tol: float = RATIO_TOL
    priority: tuple[int, ...] = ()

    def __post_init__(self):
        if self.name not in RULES:
            raise ValueError(f"unknown rule {self.name!r}; choose from {', '.join(RULES)}")

    @property
    def strong(self) -> bool:
        return self.name.startswith("fsb-")

    def score(self, g: GainPair) -> BranchScore:
        if self.name == "fsb-product":
            return product_score(g, self.epsilon)
        if self.name == "fsb-linear":
            return linear_score(g, self.mu)
        return ratio_score(g, self.floor_eps, self.tol)


def make_rule(rule) -> Rule:
    return rule if isinstance(rule, Rule) else Rule(rule)


@dataclass(frozen=True)
class Probe:
    """Both tentative children of one candidate."""

    var: int
    floor: Fraction
    down: LpProblem
    down_lp: LpOutcome
    up: LpProblem
    up_lp: LpOutcome
    gains: GainPair


@dataclass(frozen=True)
class BranchDecision:
    var: int
    floor: Fraction
    rule: str
    scores: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    probe: Probe | None = field(default=None, repr=False, compare=False)
    probe_count: int = 0


def fractional_candidates(point: Sequence[Fraction], instance: MipInstance) -> list[int]:
    return [v.index for v in instance.variables if v.is_integer and point[v.index].denominator != 1]


def _gain(parent: LpOutcome, child: LpOutcome) -> Fraction | None:
    if child.status == INFEASIBLE:
        return None
    if child.status != OPTIMAL:
        raise BranchingError("unbounded child LP")
    return parent.value - child.value


def probe(problem: LpProblem, parent: LpOutcome, var: int) -> Probe:
    v = parent.point[var]
    fl = Fraction(math.floor(v))
    down = problem.tighten(var, upper=fl)
    up = problem.tighten(var, lower=fl + 1)
    down_lp = solve_lp(down, warm=parent)
    up_lp = solve_lp(up, warm=parent)
    return Probe(var, fl, down, down_lp, up, up_lp, GainPair(_gain(parent, down_lp), _gain(parent, up_lp)))


def lp_gains(problem: LpProblem, parent: LpOutcome, var: int) -> GainPair:
    if not problem.instance.variables[var].is_integer or parent.point[var].denominator == 1:
        raise BranchingError(f"variable {var} is not a fractional integer variable")
    return probe(problem, parent, var).gains


def _fixed_order(problem: LpProblem, rule: Rule, lp: LpOutcome) -> BranchDecision:
    inst = problem.instance
    order = list(rule.priority) or inst.integer_indices()
    for i in order:
        lo, hi = problem.bounds(i)
        if lo is None or hi is None or lo < hi:
            v = lp.point[i]
            fl = Fraction(math.floor(v))
            if hi is not None and fl >= hi:
                fl = hi - 1
            if lo is not None and fl < lo:
                fl = lo
            return BranchDecision(i, fl, rule.name)
    raise BranchingError("every prioritised variable is already fixed")


def select_branch_var(problem: LpProblem, rule, lp: LpOutcome) -> BranchDecision:
    """Pick the highest-scoring fractional variable; ties go to the lowest index."""
    rule = make_rule(rule)
    if rule.name == "fixed-order":
        return _fixed_order(problem, rule, lp)
    cands = fractional_candidates(lp.point, problem.instance)
    if not cands:
        raise BranchingError("no fractional candidates")
    scores, gains = {}, {}
    best, best_probe = None, None
    for i in cands:
        if rule.strong:
            pr = probe(problem, lp, i)
            gains[i] = pr.gains
            s = rule.score(pr.gains)
        else:
            pr = None
            s = most_fractional_score(lp.point[i])
        scores[i] = s
        if best is None or s > scores[best]:
            best, best_probe = i, pr
    floor = Fraction(math.floor(lp.point[best]))
    n_probes = 2 * len(cands) if rule.strong else 0
    return BranchDecision(best, floor, rule.name, scores, gains, best_probe, n_probes)
