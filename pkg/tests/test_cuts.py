import itertools
import math
from fractions import Fraction

import pytest

from bnblab.cuts import (
    CoverCut, SeparationError, apply_cuts, cut_depth, cut_violation, find_all_covers, rounds_of_cuts,
    separate_cover,
)
from bnblab.instances import MkpConfig, gen_mkp
from bnblab.lp import LpProblem, solve_lp
from bnblab.model import GE, LE, Variable, make_constraint, make_instance


def knapsack(rows, n=2):
    xs = [Variable(i, Fraction(0), Fraction(1), True, f"x{i + 1}") for i in range(n)]
    cons = [make_constraint(c, LE, b, f"k{j + 1}") for j, (c, b) in enumerate(rows)]
    return make_instance(xs, cons, {i: 1 for i in range(n)}, "knap")


HALF = (Fraction(3, 4), Fraction(3, 4))


def test_two_variable_cover():
    inst = knapsack([({0: 2, 1: 2}, 3)])
    sep = separate_cover(inst, 0, HALF)
    assert sep.cut.cover == (0, 1) and sep.d_star == Fraction(1, 2)
    con = sep.cut.constraint("c")
    assert dict(con.coefficients) == {0: 1, 1: 1} and con.rhs == 1
    assert cut_depth(sep.cut, HALF) == pytest.approx(0.35355, abs=1e-5)
    assert cut_violation(sep.cut, HALF) == sep.d_star


def test_no_cut_at_integral_point():
    inst = knapsack([({0: 2, 1: 2}, 3)])
    sep = separate_cover(inst, 0, (Fraction(1), Fraction(0)))
    assert sep.cut is None and sep.d_star == 0


def test_redundant_row_signalled():
    inst = knapsack([({0: 1, 1: 1}, 5)])
    sep = separate_cover(inst, 0, HALF)
    assert sep.redundant and sep.cut is None


def test_invalid_rows_raise():
    xs = [Variable(0, Fraction(0), Fraction(2), True, "a"), Variable(1, Fraction(0), Fraction(1), True, "b")]
    inst = make_instance(xs, [make_constraint({0: 1, 1: 1}, LE, 1, "r"),
                              make_constraint({1: 1}, GE, 0, "g")], {0: 1}, "bad")
    with pytest.raises(SeparationError):
        separate_cover(inst, 0, (Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(SeparationError):
        separate_cover(inst, 1, (Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(SeparationError):
        cut_depth(CoverCut((0, 1), "r", Fraction(0)), (Fraction(1), Fraction(0)))


def test_depth_of_size_four_cover():
    cut = CoverCut((0, 1, 2, 3), "r", Fraction(1))
    assert cut_depth(cut, [Fraction(1)] * 4) == pytest.approx(0.5)


def test_duplicate_rows_give_one_cut():
    inst = knapsack([({0: 2, 1: 2}, 3), ({0: 2, 1: 2}, 3)])
    assert len(find_all_covers(inst, HALF)) == 1


def test_apply_cuts_appends_rows():
    inst = knapsack([({0: 2, 1: 2}, 3)])
    assert apply_cuts(inst, []) is inst
    cut = separate_cover(inst, 0, HALF).cut
    out = apply_cuts(inst, [cut])
    assert len(out.constraints) == 2 and len(inst.constraints) == 1
    assert out.constraints[-1].label == "cover2_k1"


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_root_covers_are_valid_and_violated(seed):
    inst = gen_mkp(MkpConfig(10, 8, seed))
    x = solve_lp(LpProblem(inst)).point
    feasible = [p for p in itertools.product((0, 1), repeat=inst.n) if inst.is_feasible(p)]
    for cut in find_all_covers(inst, x):
        assert cut.violation > 0 and cut_violation(cut, x) == cut.violation
        assert cut_depth(cut, x) * math.sqrt(len(cut.cover)) == pytest.approx(float(cut.violation), abs=1e-9)
        row = inst.constraints[[c.label for c in inst.constraints].index(cut.source)]
        assert sum(row.coefficients.get(i, 0) for i in cut.cover) >= row.rhs + 1
        con = cut.constraint("c")
        assert all(con.satisfied_by(p) for p in feasible)


def test_rounds_monotone_and_grow_by_cut_count():
    inst = gen_mkp(MkpConfig(20, 50, 1))
    rounds = rounds_of_cuts(inst, 3)
    assert 1 <= len(rounds) <= 4
    values = [solve_lp(LpProblem(r)).value for r in rounds]
    assert values == sorted(values, reverse=True)
    for prev, cur in zip(rounds, rounds[1:]):
        x = solve_lp(LpProblem(prev)).point
        assert len(cur.constraints) - len(prev.constraints) == len(find_all_covers(prev, x))


def test_rounds_stop_at_integral_root():
    inst = knapsack([({0: 1, 1: 1}, 2)])
    assert rounds_of_cuts(inst, 5) == [inst]
