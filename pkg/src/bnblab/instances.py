"""Instance constructors: seeded multi-dimensional knapsacks and the three
counterexample families (two-dimensional pair, Q_n / Q'_n, cross-polytope)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .model import EQ, LE, MipInstance, Variable, make_constraint, make_instance

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 stream (Steele, Lea & Flood); the sole randomness source.

    Output for seed ``s`` is fully defined by the constants below, so instances
    reproduce bit-for-bit on any platform.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        """Uniform integer in [0, k) by rejection (no modulo bias)."""
        if k <= 0:
            raise ValueError("k must be positive")
        limit = ((1 << 64) // k) * k
        while True:
            u = self.next_u64()
            if u < limit:
                return u % k

    def bernoulli(self, p: Fraction) -> bool:
        return self.next_u64() * p.denominator < p.numerator << 64


@dataclass(frozen=True)
class MkpConfig:
    n: int
    m: int
    seed: int
    zero_prob: Fraction = Fraction(1, 4)
    weight_max: int = 1000
    capacity_ratio: Fraction = Fraction(1, 2)
    price_resolution: int = 10 ** 9

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be at least 1")
        if not 0 <= self.zero_prob < 1:
            raise ValueError("zero_prob must lie in [0, 1)")
        if self.weight_max < 1:
            raise ValueError("weight_max must be at least 1")


def _binary(i: int, name: str) -> Variable:
    return Variable(i, Fraction(0), Fraction(1), True, name)


def gen_mkp(config: MkpConfig) -> MipInstance:
    """Random multi-dimensional knapsack.

    Draw order: weights row by row (a zero/non-zero coin, then the weight),
    then prices.  Prices are ``k / price_resolution`` with ``k`` uniform.
    """
    rng = SplitMix64(config.seed)
    weights = []
    for _ in range(config.m):
        row = []
        for _ in range(config.n):
            if rng.bernoulli(Fraction(config.zero_prob)):
                row.append(0)
            else:
                row.append(1 + rng.below(config.weight_max))
        weights.append(row)
    prices = [Fraction(rng.below(config.price_resolution), config.price_resolution) for _ in range(config.n)]

    variables = [_binary(i, f"x{i + 1}") for i in range(config.n)]
    constraints = []
    for j, row in enumerate(weights):
        cap = (Fraction(config.capacity_ratio) * sum(row)).__floor__()
        constraints.append(make_constraint(dict(enumerate(row)), LE, cap, f"knap{j + 1}"))
    name = f"mkp_n{config.n}_m{config.m}_s{config.seed}"
    return make_instance(variables, constraints, dict(enumerate(prices)), name)


# ---------------------------------------------------------------------------
# two-dimensional pair and Q_n

_P_ROWS = (({0: -7, 1: 1}, "0.3"), ({0: 5, 1: 8}, "8.5"), ({0: 3, 1: 2}, "3.7"))
_CUT = ({0: 13, 1: 10}, 14)
OBJ_X, OBJ_Y = 6, 5


def build_two_dim(tight: bool = False) -> MipInstance:
    """max 6x + 5y over P (or P' = P with 13x + 10y <= 14), x, y binary."""
    variables = [_binary(0, "x"), _binary(1, "y")]
    rows = [make_constraint(c, LE, b, f"p{k + 1}") for k, (c, b) in enumerate(_P_ROWS)]
    if tight:
        rows.append(make_constraint(_CUT[0], LE, _CUT[1], "cut"))
    return make_instance(variables, rows, {0: OBJ_X, 1: OBJ_Y}, "two_dim_tight" if tight else "two_dim")


def build_qn(n: int, tight: bool = False) -> MipInstance:
    """n decoupled copies of the two-dimensional MIP linked through a free z.

    Variables are ordered x1, y1, x2, y2, ..., z.  The tight variant appends
    the single row ``z <= 14``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    variables = []
    for i in range(n):
        variables.append(_binary(2 * i, f"x{i + 1}"))
        variables.append(_binary(2 * i + 1, f"y{i + 1}"))
    z = 2 * n
    variables.append(Variable(z, None, None, False, "z"))
    rows = []
    for i in range(n):
        xi, yi = 2 * i, 2 * i + 1
        for k, (c, b) in enumerate(_P_ROWS):
            rows.append(make_constraint({xi: c[0], yi: c[1]}, LE, b, f"p{k + 1}_{i + 1}"))
        rows.append(make_constraint({xi: 13, yi: 10, z: -1}, LE, 0, f"link_{i + 1}"))
    rows.append(make_constraint({z: 1}, LE, "16.7", "zcap"))
    if tight:
        rows.append(make_constraint({z: 1}, LE, 14, "cut"))
    objective = {}
    for i in range(n):
        objective[2 * i] = OBJ_X
        objective[2 * i + 1] = OBJ_Y
    return make_instance(variables, rows, objective, f"q{n}_tight" if tight else f"q{n}")


# ---------------------------------------------------------------------------
# cross-polytope pair


def cross_vertices(tight: bool) -> list[tuple[Fraction, ...]]:
    """Vertices of Q (three groups of four), plus v0 = (1, 1, 1, 1/2) unless tight."""
    half = Fraction(1, 2)
    verts = []
    for frac_pos, x4 in ((0, 0), (1, 1), (2, 1)):
        for a, b in itertools.product((0, 1), repeat=2):
            v = [a, b]
            v.insert(frac_pos, half)
            verts.append(tuple(Fraction(c) for c in v) + (Fraction(x4),))
    if not tight:
        verts.append((Fraction(1), Fraction(1), Fraction(1), half))
    return verts


def build_cross(tight: bool = False, eps: Fraction = Fraction(1, 100)) -> MipInstance:
    """Extended (convex-combination) formulation of Q or P = conv(Q + v0).

    x1..x4 are binary; one continuous weight per vertex.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    verts = cross_vertices(tight)
    variables = [_binary(k, f"x{k + 1}") for k in range(4)]
    for j in range(len(verts)):
        variables.append(Variable(4 + j, Fraction(0), None, False, f"lam{j + 1}"))
    rows = []
    for k in range(4):
        terms = {k: 1}
        for j, v in enumerate(verts):
            if v[k]:
                terms[4 + j] = -v[k]
        rows.append(make_constraint(terms, EQ, 0, f"link{k + 1}"))
    rows.append(make_constraint({4 + j: 1 for j in range(len(verts))}, EQ, 1, "convex"))
    objective = {0: 1, 1: 1, 2: 1, 3: 1 - eps}
    return make_instance(variables, rows, objective, "cross_q" if tight else "cross_p")


FAMILIES = ("mkp", "two-dim", "qn", "cross")
