import io
from fractions import Fraction

import pytest

from bnblab.experiments import (
    CSV_HEADER, ExperimentRecord, Truncated, all_cuts_experiment, baseline, read_csv, rounds_experiment,
    run_batch, single_cut_experiment, summarize, to_csv,
)
from bnblab.instances import MkpConfig, gen_mkp
from bnblab.model import LE, Variable, make_constraint, make_instance


def rec(T_hat, z_hat=Fraction(9), mode="single-cut", k=0, T=10, z=Fraction(10), z_ip=Fraction(8)):
    return ExperimentRecord("inst", 1, "fsb-product", mode, k, z, z_hat, z_ip, T, T_hat)


def test_record_arithmetic():
    r = rec(15)
    assert r.delta_G == Fraction(1, 2) and r.delta_T == Fraction(1, 2)
    assert rec(10, z=Fraction(8)).delta_G is None
    row = rec(7, Fraction(26, 3)).row()
    assert len(row) == len(CSV_HEADER)
    assert row[5:] == ["10", "26/3", "8", "10", "7", "0.666666666667", "-0.3", ""]


def test_summarize_examples():
    s = summarize([rec(10), rec(10)])
    assert s.fraction_unchanged == 1
    s = summarize([rec(15), rec(5)])
    assert (s.fraction_increased, s.fraction_decreased, s.fraction_unchanged) == (0.5, 0.5, 0)
    assert s.bucket_count["[0.5,1]"] == 2 and s.bucket_mean["[0.5,1]"] == 0
    assert "tree size up" in s.report()
    with pytest.raises(ValueError):
        summarize([])


def test_summary_buckets_and_round_jump():
    records = [rec(10, Fraction(10), "rounds", 0), rec(12, Fraction(19, 2), "rounds", 1),
               rec(9, Fraction(9), "rounds", 2), rec(20, Fraction(8))]
    s = summarize(records)
    assert s.bucket_count == {"[0,0.1)": 1, "[0.1,0.2)": 0, "[0.2,0.5)": 1, "[0.5,1]": 2}
    assert s.max_round_jump == pytest.approx(0.2)
    assert s.bucket_median["[0.1,0.2)"] is None


def test_csv_round_trip_and_header_check():
    text = to_csv([rec(15), rec(10, z=Fraction(8))])
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    rows = read_csv(io.StringIO(text))
    assert rows[1]["delta_G"] == "" and rows[0]["delta_T"] == "0.5"
    with pytest.raises(ValueError):
        read_csv(io.StringIO("a,b\n1,2\n"))


def test_no_cuts_gives_no_records():
    xs = [Variable(0, Fraction(0), Fraction(1), True, "x1")]
    inst = make_instance(xs, [make_constraint({0: 1}, LE, 1, "k1")], {0: 1}, "trivial")
    assert single_cut_experiment(inst) == []
    assert all_cuts_experiment(inst).T_hat == 1


@pytest.fixture(scope="module")
def small():
    inst = gen_mkp(MkpConfig(12, 10, 2))
    return inst, baseline(inst)


def test_single_and_all_cut_records(small):
    inst, base = small
    singles = single_cut_experiment(inst, seed=2, base=base)
    assert singles
    for r in singles:
        assert r.T == base.T and r.z == base.z and r.z_ip == base.z_ip
        assert r.z_ip <= r.z_hat <= r.z and 0 <= r.delta_G <= 1
        assert r.delta_d > 0
    every = all_cuts_experiment(inst, seed=2, base=base)
    assert every.round_or_cut == len(singles)
    assert every.z_hat <= min(r.z_hat for r in singles)


def test_rounds_records(small):
    inst, base = small
    records = rounds_experiment(inst, max_rounds=3, base=base)
    assert (records[0].delta_G, records[0].delta_T) == (0, 0)
    gaps = [r.delta_G for r in records]
    assert gaps == sorted(gaps)


def test_batch_is_ordered_and_reports_exclusions():
    batch = run_batch(8, 4, [3, 1, 2], modes=("all-cuts", "single-cut"))
    seeds = [r.seed for r in batch.records]
    assert seeds == sorted(seeds)
    first = [r.mode for r in batch.records if r.seed == 1]
    assert first[-1] == "all-cuts" and set(first[:-1]) <= {"single-cut"}
    capped = run_batch(20, 50, [1], modes=("all-cuts",), node_cap=3)
    assert capped.records == [] and capped.excluded[0][0] == 1
    with pytest.raises(Truncated):
        baseline(gen_mkp(MkpConfig(20, 50, 1)), node_cap=3)
