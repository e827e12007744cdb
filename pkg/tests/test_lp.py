import itertools
import random
from fractions import Fraction

import pytest

from bnblab.instances import MkpConfig, build_cross, build_qn, build_two_dim, gen_mkp
from bnblab.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, dump_tableau, solve_lp, vertex_table
from bnblab.model import EQ, GE, LE, Variable, make_constraint, make_instance


def _solve_square(a, b):
    """Exact Gaussian elimination; None when singular."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c] / m[c][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[i][n] / m[i][i] for i in range(n)]


def vertex_oracle(inst):
    """Best objective over all basic feasible points (bounded instances only)."""
    n = inst.n
    hyperplanes = []
    for con in inst.constraints:
        hyperplanes.append(([con.coefficients.get(i, Fraction(0)) for i in range(n)], con.rhs))
    for v in inst.variables:
        e = [Fraction(int(i == v.index)) for i in range(n)]
        hyperplanes.append((e, v.lower))
        hyperplanes.append((e, v.upper))
    best = None
    for combo in itertools.combinations(hyperplanes, n):
        pt = _solve_square([h[0] for h in combo], [h[1] for h in combo])
        if pt is None or not inst.is_feasible(pt, integrality=False):
            continue
        val = inst.objective_value(pt)
        if best is None or val > best:
            best = val
    return best


def random_lp(rng, n=3, m=3):
    xs = [Variable(i, Fraction(rng.randint(-2, 0)), Fraction(rng.randint(1, 3)), False, f"x{i}") for i in range(n)]
    # most instances are built around an interior point so that they are feasible
    anchor = [Fraction(rng.randint(0, 4), 4) * (v.upper - v.lower) + v.lower for v in xs] if rng.random() < 0.8 else None
    rows = []
    for k in range(m):
        coefs = {i: Fraction(rng.randint(-5, 5), rng.choice((1, 1, 2, 3))) for i in range(n)}
        sense = rng.choice((LE, LE, GE, EQ))
        if anchor is None:
            rhs = Fraction(rng.randint(-6, 8), rng.choice((1, 2)))
        else:
            act = sum(c * anchor[i] for i, c in coefs.items())
            slack = Fraction(rng.randint(0, 6), 2)
            rhs = act + slack if sense == LE else act - slack if sense == GE else act
        rows.append(make_constraint(coefs, sense, rhs, f"r{k}"))
    obj = {i: Fraction(rng.randint(-7, 7), rng.choice((1, 3))) for i in range(n)}
    return make_instance(xs, rows, obj, "rand")


@pytest.mark.parametrize("seed", range(150))
def test_matches_vertex_enumeration(seed):
    inst = random_lp(random.Random(seed), n=random.Random(seed).choice((2, 3)))
    out = solve_lp(LpProblem(inst))
    expected = vertex_oracle(inst)
    if expected is None:
        assert out.status == INFEASIBLE
    else:
        assert out.status == OPTIMAL
        assert out.value == expected
        assert inst.is_feasible(out.point, integrality=False)
        assert inst.objective_value(out.point) == out.value


def test_two_dim_root_and_faces():
    p = LpProblem(build_two_dim(False))
    root = solve_lp(p)
    assert root.point == (Fraction(9, 10), Fraction(1, 2)) and root.value == Fraction(79, 10)
    faces = vertex_table(p, [{0: 0}, {0: 1}, {1: 0}, {1: 1}])
    assert [f.value for f in faces] == [Fraction(3, 2), Fraction(31, 4), 6, Fraction(28, 5)]
    assert faces[0].point == (0, Fraction(3, 10))
    assert faces[1].point == (1, Fraction(7, 20))


def test_two_dim_tight_root():
    p = LpProblem(build_two_dim(True))
    root = solve_lp(p)
    assert root.point == (Fraction(1, 2), Fraction(3, 4)) and root.value == Fraction(27, 4)
    face = vertex_table(p, [{0: 1}])[0]
    assert face.value == Fraction(13, 2) and face.point == (1, Fraction(1, 10))


@pytest.mark.parametrize("n", [1, 3, 6])
def test_qn_root_values(n):
    assert solve_lp(LpProblem(build_qn(n))).value == Fraction(79, 10) * n
    assert solve_lp(LpProblem(build_qn(n, True))).value == Fraction(27, 4) * n


def test_cross_roots_are_fractional_but_feasible():
    for tight in (False, True):
        out = solve_lp(LpProblem(build_cross(tight)))
        assert out.optimal
        assert any(v.denominator != 1 for v in out.point[:4])


def test_infeasible_and_unbounded():
    xs = [Variable(0, Fraction(0), Fraction(1), False, "x")]
    inf = make_instance(xs, [make_constraint({0: 1}, GE, 2, "high")], {0: 1}, "inf")
    assert solve_lp(LpProblem(inf)).status == INFEASIBLE
    free = [Variable(0, None, None, False, "x"), Variable(1, Fraction(0), None, False, "y")]
    unb = make_instance(free, [make_constraint({0: 1, 1: -1}, LE, 3, "r")], {1: 1}, "unb")
    assert solve_lp(LpProblem(unb)).status == UNBOUNDED
    crossed = LpProblem(build_two_dim(False), {0: (Fraction(1), Fraction(0))})
    assert solve_lp(crossed).status == INFEASIBLE


def test_redundant_equalities():
    xs = [Variable(i, Fraction(0), Fraction(5), False, f"x{i}") for i in range(2)]
    rows = [make_constraint({0: 1, 1: 1}, EQ, 3, "a"), make_constraint({0: 2, 1: 2}, EQ, 6, "b")]
    out = solve_lp(LpProblem(make_instance(xs, rows, {0: 2, 1: 1}, "dup")))
    assert out.value == 6 and out.point == (3, 0)


def test_overrides_only_tighten():
    p = LpProblem(build_two_dim(False))
    q = p.tighten(0, upper=Fraction(5)).tighten(0, lower=Fraction(-1))
    assert q.bounds(0) == (0, 1)
    assert p.tighten(0, upper=0).bounds(0) == (0, 0)
    assert LpProblem(build_two_dim(False), {0: (Fraction(-1), None)}).check()


def test_warm_start_agrees_with_cold_solve():
    rng = random.Random(5)
    for seed in (1, 2):
        inst = gen_mkp(MkpConfig(12, 10, seed))
        root = solve_lp(LpProblem(inst))
        for _ in range(120):
            p = LpProblem(inst)
            for _ in range(rng.randint(1, 5)):
                i = rng.randrange(inst.n)
                v = rng.randint(0, 1)
                p = p.tighten(i, v, v)
            warm, cold = solve_lp(p, warm=root), solve_lp(p)
            assert warm.status == cold.status
            assert warm.value == cold.value


def test_deterministic_outcomes():
    inst = gen_mkp(MkpConfig(20, 50, 4))
    a, b = solve_lp(LpProblem(inst)), solve_lp(LpProblem(inst))
    assert (a.value, a.point, a.basis, a.pivots) == (b.value, b.point, b.basis, b.pivots)


def test_basis_labels_and_dump():
    out = solve_lp(LpProblem(build_two_dim(False)))
    assert len(out.basis) == 2 + 3
    assert out.basis.count("basic") == 3
    text = dump_tableau(out)
    assert text.splitlines()[0].startswith("basic | value")


@pytest.mark.parametrize("seed", range(60))
def test_warm_start_after_random_tightening(seed):
    rng = random.Random(1000 + seed)
    inst = random_lp(rng, n=3, m=3)
    root = solve_lp(LpProblem(inst))
    if not root.optimal:
        return
    p = LpProblem(inst)
    for _ in range(rng.randint(1, 3)):
        i = rng.randrange(inst.n)
        lo, hi = p.bounds(i)
        cut = lo + (hi - lo) * Fraction(rng.randint(0, 4), 4)
        p = p.tighten(i, lower=cut) if rng.random() < 0.5 else p.tighten(i, upper=cut)
    tightened = make_instance(
        [Variable(i, *p.bounds(i), False, v.name) for i, v in enumerate(inst.variables)],
        inst.constraints, inst.objective, "tightened")
    expected = vertex_oracle(tightened)
    warm = solve_lp(p, warm=root)
    assert warm.status == (INFEASIBLE if expected is None else OPTIMAL)
    assert warm.value == expected
