"""Cut/tree-size measurement harness.

For an instance with root LP value ``z``, integer optimum ``z_ip`` and tree
size ``T``, a tightened formulation with root value ``z_hat`` and tree size
``T_hat`` yields

    delta_G = (z - z_hat) / (z - z_ip)      (absent when z == z_ip)
    delta_T = (T_hat - T) / T
"""

from __future__ import annotations

import csv
import io
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .cuts import apply_cuts, cut_depth, find_all_covers, rounds_of_cuts
from .engine import BnbResult, EngineOptions, solve
from .instances import MkpConfig, gen_mkp
from .model import MipInstance

log = logging.getLogger(__name__)

CSV_HEADER = ["instance", "seed", "rule", "mode", "round_or_cut", "z", "z_hat", "z_ip",
              "T", "T_hat", "delta_G", "delta_T", "delta_d"]
MODES = ("single-cut", "all-cuts", "rounds")
BUCKETS = ((Fraction(0), Fraction(1, 10)), (Fraction(1, 10), Fraction(1, 5)),
           (Fraction(1, 5), Fraction(1, 2)), (Fraction(1, 2), Fraction(1)))
DEFAULT_NODE_CAP = 10 ** 6
WORKERS_ENV = "BNBLAB_WORKERS"


class Truncated(RuntimeError):
    """A solve hit its node cap; the instance cannot be measured."""


@dataclass(frozen=True)
class ExperimentRecord:
    instance: str
    seed: int | None
    rule: str
    mode: str
    round_or_cut: int
    z: Fraction
    z_hat: Fraction
    z_ip: Fraction
    T: int
    T_hat: int
    delta_d: float | None = None

    @property
    def delta_G(self) -> Fraction | None:
        if self.z == self.z_ip:
            return None
        return (self.z - self.z_hat) / (self.z - self.z_ip)

    @property
    def delta_T(self) -> Fraction:
        return Fraction(self.T_hat - self.T, self.T)

    def row(self) -> list[str]:
        g = self.delta_G
        return [
            self.instance,
            "" if self.seed is None else str(self.seed),
            self.rule,
            self.mode,
            str(self.round_or_cut),
            str(self.z),
            str(self.z_hat),
            str(self.z_ip),
            str(self.T),
            str(self.T_hat),
            "" if g is None else _fmt(g),
            _fmt(self.delta_T),
            "" if self.delta_d is None else _fmt(self.delta_d),
        ]


def _fmt(x) -> str:
    return format(float(x), ".12g")


@dataclass
class Baseline:
    instance: MipInstance
    result: BnbResult

    @property
    def z(self) -> Fraction:
        return self.result.root_lp.value

    @property
    def z_ip(self) -> Fraction:
        return self.result.value

    @property
    def T(self) -> int:
        return self.result.node_count


def _solve(instance: MipInstance, rule, node_cap: int | None) -> BnbResult:
    res = solve(instance, EngineOptions(rule=rule, node_limit=node_cap))
    if res.truncated:
        raise Truncated(f"{instance.name}: more than {node_cap} nodes")
    if res.status != "optimal":
        raise ValueError(f"{instance.name}: no integer solution")
    return res


def baseline(instance: MipInstance, rule="fsb-product", node_cap: int | None = DEFAULT_NODE_CAP) -> Baseline:
    return Baseline(instance, _solve(instance, rule, node_cap))


def _record(base: Baseline, rule, mode, k, tightened: BnbResult, seed, delta_d=None) -> ExperimentRecord:
    return ExperimentRecord(base.instance.name, seed, _rule_name(rule), mode, k, base.z,
                            tightened.root_lp.value, base.z_ip, base.T, tightened.node_count, delta_d)


def _rows_key(instance: MipInstance) -> tuple:
    return tuple((c.label, tuple(sorted(c.coefficients.items())), c.sense, c.rhs) for c in instance.constraints)


def _rule_name(rule) -> str:
    return rule if isinstance(rule, str) else rule.name


def single_cut_experiment(instance: MipInstance, rule="fsb-product", seed: int | None = None,
                          base: Baseline | None = None, node_cap: int | None = DEFAULT_NODE_CAP):
    """One record per violated root cover, each cut added on its own."""
    base = base or baseline(instance, rule, node_cap)
    x_star = base.result.root_lp.point
    records = []
    for k, cut in enumerate(find_all_covers(instance, x_star)):
        res = _solve(apply_cuts(instance, [cut]), rule, node_cap)
        records.append(_record(base, rule, "single-cut", k, res, seed, cut_depth(cut, x_star)))
    return records


def all_cuts_experiment(instance: MipInstance, rule="fsb-product", seed: int | None = None,
                        base: Baseline | None = None, node_cap: int | None = DEFAULT_NODE_CAP):
    base = base or baseline(instance, rule, node_cap)
    cuts = find_all_covers(instance, base.result.root_lp.point)
    res = _solve(apply_cuts(instance, cuts), rule, node_cap) if cuts else base.result
    return _record(base, rule, "all-cuts", len(cuts), res, seed)


def rounds_experiment(instance: MipInstance, rule="fsb-product", max_rounds: int = 10, seed: int | None = None,
                      base: Baseline | None = None, node_cap: int | None = DEFAULT_NODE_CAP, _cache=None):
    base = base or baseline(instance, rule, node_cap)
    records = []
    for k, inst in enumerate(rounds_of_cuts(instance, max_rounds)):
        if k == 0:
            res = base.result
        elif _cache is not None and _rows_key(inst) in _cache:
            res = _cache[_rows_key(inst)]
        else:
            res = _solve(inst, rule, node_cap)
        records.append(_record(base, rule, "rounds", k, res, seed))
    return records


# ---------------------------------------------------------------------------
# batches


@dataclass
class BatchResult:
    records: list[ExperimentRecord]
    excluded: list[tuple[int, str]] = field(default_factory=list)


def run_instance(config: MkpConfig, rule="fsb-product", modes: Sequence[str] = MODES, max_rounds: int = 10,
                 node_cap: int | None = DEFAULT_NODE_CAP) -> list[ExperimentRecord]:
    """Every requested experiment for one generated instance, sharing the baseline solve."""
    inst = gen_mkp(config)
    base = baseline(inst, rule, node_cap)
    records = []
    cache = {}
    if "single-cut" in modes:
        records += single_cut_experiment(inst, rule, config.seed, base, node_cap)
    if "all-cuts" in modes:
        cuts = find_all_covers(inst, base.result.root_lp.point)
        tightened = apply_cuts(inst, cuts)
        res = _solve(tightened, rule, node_cap) if cuts else base.result
        cache[_rows_key(tightened)] = res
        records.append(_record(base, rule, "all-cuts", len(cuts), res, config.seed))
    if "rounds" in modes:
        records += rounds_experiment(inst, rule, max_rounds, config.seed, base, node_cap, cache)
    return records


def _run_one(args):
    config, rule, modes, max_rounds, node_cap = args
    try:
        return config.seed, run_instance(config, rule, modes, max_rounds, node_cap), None
    except Truncated as exc:
        return config.seed, [], str(exc)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_batch(n: int, m: int, seeds: Iterable[int], rule="fsb-product", modes: Sequence[str] = MODES,
              max_rounds: int = 10, node_cap: int | None = DEFAULT_NODE_CAP, workers: int | None = None,
              progress=None) -> BatchResult:
    """Run a seeded MKP batch; output order is by seed regardless of completion order."""
    jobs = [(MkpConfig(n, m, s), rule, tuple(modes), max_rounds, node_cap) for s in seeds]
    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = []
        for job in jobs:
            outcomes.append(_run_one(job))
            if progress:
                progress(outcomes[-1])
    outcomes.sort(key=lambda o: o[0])
    result = BatchResult([])
    mode_rank = {m: k for k, m in enumerate(MODES)}
    for seed, recs, err in outcomes:
        if err:
            log.warning("seed %s excluded: %s", seed, err)
            result.excluded.append((seed, err))
        result.records += sorted(recs, key=lambda r: (mode_rank[r.mode], r.round_or_cut))
    return result


def write_csv(records: Iterable[ExperimentRecord], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())


def to_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(fh) -> list[dict]:
    reader = csv.DictReader(fh)
    if reader.fieldnames != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return list(reader)


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class Summary:
    count: int
    fraction_increased: float
    fraction_decreased: float
    fraction_unchanged: float
    bucket_mean: dict
    bucket_median: dict
    bucket_count: dict
    max_round_jump: float | None

    def report(self) -> str:
        lines = [
            f"records:            {self.count}",
            f"tree size up:       {self.fraction_increased:.4f}",
            f"tree size down:     {self.fraction_decreased:.4f}",
            f"tree size same:     {self.fraction_unchanged:.4f}",
            "delta_G bucket      n     mean dT     median dT",
        ]
        for label in self.bucket_count:
            mean, med = self.bucket_mean[label], self.bucket_median[label]
            lines.append(f"{label:<16}{self.bucket_count[label]:>5}  "
                         f"{'-' if mean is None else f'{mean:+.4f}':>10}  {'-' if med is None else f'{med:+.4f}':>12}")
        jump = "-" if self.max_round_jump is None else f"{self.max_round_jump:+.4f}"
        lines.append(f"max one-round jump: {jump}")
        return "\n".join(lines) + "\n"


def _bucket_label(lo, hi) -> str:
    close = "]" if hi == 1 else ")"
    return f"[{float(lo):g},{float(hi):g}{close}"


def summarize(records: Sequence[ExperimentRecord]) -> Summary:
    if not records:
        raise ValueError("no records to summarise")
    n = len(records)
    up = sum(r.delta_T > 0 for r in records)
    down = sum(r.delta_T < 0 for r in records)
    groups = {_bucket_label(lo, hi): [] for lo, hi in BUCKETS}
    for r in records:
        g = r.delta_G
        if g is None:
            continue
        for lo, hi in BUCKETS:
            if lo <= g < hi or (hi == 1 and g == 1):
                groups[_bucket_label(lo, hi)].append(r.delta_T)
                break
    mean = {k: (float(sum(v) / len(v)) if v else None) for k, v in groups.items()}
    median = {k: (float(statistics.median(v)) if v else None) for k, v in groups.items()}
    counts = {k: len(v) for k, v in groups.items()}

    jumps = []
    by_instance = {}
    for r in records:
        if r.mode == "rounds":
            by_instance.setdefault((r.instance, r.seed, r.rule), []).append(r)
    for seq in by_instance.values():
        seq.sort(key=lambda r: r.round_or_cut)
        for prev, cur in zip(seq, seq[1:]):
            jumps.append(Fraction(cur.T_hat - prev.T_hat, prev.T_hat))
    return Summary(n, up / n, down / n, (n - up - down) / n, mean, median, counts,
                   float(max(jumps)) if jumps else None)
