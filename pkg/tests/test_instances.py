import itertools
from fractions import Fraction

import pytest

from bnblab.instances import MkpConfig, SplitMix64, build_cross, build_qn, build_two_dim, cross_vertices, gen_mkp
from bnblab.lp import LpProblem, solve_lp
from bnblab.model import brute_force_opt


def test_splitmix_reference_stream():
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_below_and_bernoulli_ranges():
    rng = SplitMix64(7)
    assert all(0 <= rng.below(5) < 5 for _ in range(200))
    with pytest.raises(ValueError):
        rng.below(0)
    assert not any(rng.bernoulli(Fraction(0)) for _ in range(50))


def test_mkp_is_deterministic():
    a, b = gen_mkp(MkpConfig(20, 50, 3)), gen_mkp(MkpConfig(20, 50, 3))
    assert a == b and a.name == "mkp_n20_m50_s3"
    assert gen_mkp(MkpConfig(20, 50, 4)) != a


def test_mkp_rows_and_prices():
    inst = gen_mkp(MkpConfig(20, 50, 1))
    assert inst.n == 20 and len(inst.constraints) == 50
    for con in inst.constraints:
        total = sum(con.coefficients.values())
        assert con.rhs == total // 2 and 0 <= con.rhs <= total
        assert all(1 <= a <= 1000 for a in con.coefficients.values())
    assert all(0 <= c < 1 for c in inst.objective.values())
    assert all(v.is_integer and (v.lower, v.upper) == (0, 1) for v in inst.variables)


def test_zero_weight_fraction():
    inst = gen_mkp(MkpConfig(100, 100, 11))
    zeros = sum(100 - len(c.coefficients) for c in inst.constraints)
    assert 0.24 <= zeros / 10 ** 4 <= 0.26


@pytest.mark.parametrize("bad", [dict(n=0, m=1), dict(n=1, m=0), dict(zero_prob=Fraction(1)), dict(weight_max=0)])
def test_config_validation(bad):
    args = dict(n=2, m=2, seed=1) | bad
    with pytest.raises(ValueError):
        MkpConfig(**args)


def test_two_dim_formulations_share_integer_points():
    loose, tight = build_two_dim(False), build_two_dim(True)
    for p in itertools.product((0, 1), repeat=2):
        assert loose.is_feasible(p) == tight.is_feasible(p)
    assert len(tight.constraints) == len(loose.constraints) + 1


def test_qn_shape_and_hull():
    inst = build_qn(3, True)
    assert inst.n == 7 and len(inst.integer_indices()) == 6
    assert not inst.variables[6].is_integer
    for n in (1, 2, 3):
        assert brute_force_opt(build_qn(n)).value == brute_force_opt(build_qn(n, True)).value == 6 * n


def test_cross_formulations():
    assert len(cross_vertices(True)) == 12 and len(cross_vertices(False)) == 13
    eps = Fraction(1, 100)
    loose = solve_lp(LpProblem(build_cross(False, eps)))
    assert loose.value == 3 + (1 - eps) / 2
    assert loose.point[:4] == (1, 1, 1, Fraction(1, 2))
    tight = solve_lp(LpProblem(build_cross(True, eps)))
    assert tight.value < loose.value
