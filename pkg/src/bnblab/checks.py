"""Reproduction checks shared by ``bnblab verify-paper`` and the acceptance tests.

Each check returns a :class:`CheckResult` whose ``output`` is a canonical text
rendering of everything it computed, so determinism can be verified by
comparing two runs byte for byte.
"""

from __future__ import annotations

import io
import itertools
import math
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

from .branching import select_branch_var
from .cuts import cut_depth, cut_violation, find_all_covers, rounds_of_cuts
from .engine import EngineOptions, replay_certificate, solve
from .experiments import read_csv, run_batch, to_csv
from .instances import MkpConfig, build_cross, build_qn, build_two_dim, gen_mkp
from .lp import LpProblem, solve_lp
from .model import brute_force_opt

FRACTIONAL_RULES = ("fsb-product", "fsb-linear", "fsb-ratio", "most-fractional")
BATCH_SEEDS = tuple(range(1, 101))
QN_MAX = 24
QN_MIN_VERIFIED = 18
QN_BUDGET = 1800.0


@dataclass(frozen=True)
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    output: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:>2}. {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number: int, title: str, body: Callable[[], tuple[bool, str, str]]) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail, output = body()
    return CheckResult(number, title, passed, detail, output, time.perf_counter() - t0)


def check_cross_counts() -> CheckResult:
    def body():
        lines, ok = [], True
        for rule in FRACTIONAL_RULES:
            for tight, expected in ((False, 11), (True, 15)):
                res = solve(build_cross(tight), EngineOptions(rule=rule))
                good = res.status == "infeasible" and res.node_count == expected
                ok &= good
                lines.append(f"{rule} {'Q' if tight else 'P'} {res.status} nodes={res.node_count}")
        return ok, "P 11 nodes, Q 15 nodes for all fractional rules" if ok else "; ".join(lines), "\n".join(lines)

    res = _timed(1, "cross-polytope tree sizes", body)
    if res.seconds >= 1.0:
        return CheckResult(1, res.title, False, res.detail + " (over 1s)", res.output, res.seconds)
    return res


def root_score_table(tight: bool) -> dict[str, Fraction]:
    inst = build_two_dim(tight)
    problem = LpProblem(inst)
    decision = select_branch_var(problem, "fsb-product", solve_lp(problem))
    return {inst.variables[i].label: s.key for i, s in decision.scores.items()}


def check_root_scores() -> CheckResult:
    expected = {
        False: {"x": Fraction("0.96"), "y": Fraction("4.37")},
        True: {"x": Fraction("1.3125"), "y": Fraction("0.8625")},
    }

    def body():
        got = {tight: root_score_table(tight) for tight in (False, True)}
        ok = got == expected
        text = "\n".join(f"{'tight' if t else 'loose'} " + " ".join(f"{k}={v}" for k, v in sorted(got[t].items()))
                         for t in (False, True))
        return ok, text.replace("\n", "; "), text

    res = _timed(2, "root product scores", body)
    if res.seconds >= 1.0:
        return CheckResult(2, res.title, False, res.detail + " (over 1s)", res.output, res.seconds)
    return res


def check_qn_linear(n_max: int = 8) -> CheckResult:
    def body():
        counts = [solve(build_qn(n)).node_count for n in range(1, n_max + 1)]
        ok = all(c <= 4 * n + 1 for n, c in enumerate(counts, 1))
        return ok, f"node counts {counts} vs 4n+1", " ".join(map(str, counts))

    res = _timed(3, "Q_n linear tree size", body)
    if res.seconds >= 60:
        return CheckResult(3, res.title, False, res.detail + " (over 1 min)", res.output, res.seconds)
    return res


def qn_lower_bound(n: int) -> int:
    return 6 * (2 ** (n // 9) - 1)


def check_qn_tight(n_max: int = QN_MAX, budget: float = QN_BUDGET, min_verified: int = QN_MIN_VERIFIED,
                   log: Callable[[str], None] | None = None) -> CheckResult:
    def body():
        t0 = time.perf_counter()
        rows, failures, verified = [], [], 0
        for n in range(1, n_max + 1):
            if time.perf_counter() - t0 > budget:
                break
            loose = solve(build_qn(n)).node_count
            tight = solve(build_qn(n, True)).node_count
            rows.append(f"{n} {loose} {tight}")
            if log:
                log(f"  n={n}: Q_n {loose} nodes, Q'_n {tight} nodes")
            if tight < qn_lower_bound(n) or tight <= loose:
                failures.append(f"n={n}: {tight} vs {loose} (bound {qn_lower_bound(n)})")
            verified = n
        first = rows[0].split() if rows else []
        if first[1:] != ["3", "5"]:
            failures.append(f"n=1 counts {first[1:]} differ from 3/5")
        required = n_max if verified == n_max else min_verified
        if verified < required:
            failures.append(f"budget exhausted at n={verified}")
        detail = f"verified n=1..{verified}" + ("" if not failures else "; " + "; ".join(failures))
        return not failures, detail, "\n".join(rows)

    return _timed(4, "Q'_n exponential growth", body)


def check_lp_landmarks(n_max: int = 8) -> CheckResult:
    def body():
        bad, rows = [], []
        for n in range(1, n_max + 1):
            z_loose = solve_lp(LpProblem(build_qn(n))).value
            tight = solve(build_qn(n, True))
            rows.append(f"{n} {z_loose} {tight.root_lp.value} {tight.value}")
            if z_loose != Fraction("7.9") * n:
                bad.append(f"Q_{n} root {z_loose}")
            if tight.root_lp.value != Fraction("6.75") * n:
                bad.append(f"Q'_{n} root {tight.root_lp.value}")
            if tight.value != 6 * n:
                bad.append(f"Q'_{n} optimum {tight.value}")
        return not bad, "7.9n / 6.75n / 6n exact for n<=8" if not bad else "; ".join(bad), "\n".join(rows)

    return _timed(5, "LP landmark values", body)


def certificate_pairs():
    yield "two-dim", build_two_dim(False), build_two_dim(True)
    yield "cross", build_cross(False), build_cross(True)
    for n in (1, 2, 4, 8):
        yield f"qn{n}", build_qn(n, False), build_qn(n, True)


def check_certificates() -> CheckResult:
    def body():
        rows, bad = [], []
        for name, loose, tight in certificate_pairs():
            tree = solve(loose, EngineOptions(keep_tree=True)).tree
            rep = replay_certificate(tree, tight)
            rows.append(f"{name} verified={rep.verified} nodes={rep.replay_node_count}")
            if not rep.verified:
                bad.append(f"{name}: {rep.failures[:2]}")
        return not bad, "loose trees certify tight formulations" if not bad else "; ".join(bad), "\n".join(rows)

    return _timed(6, "certificate monotonicity", body)


def check_oracle(seeds: Sequence[int] = tuple(range(1, 51)), n: int = 12, m: int = 10) -> CheckResult:
    def body():
        rows, bad = [], []
        for seed in seeds:
            inst = gen_mkp(MkpConfig(n, m, seed))
            res = solve(inst)
            oracle = brute_force_opt(inst)
            if res.value != oracle.value:
                bad.append(f"seed {seed}: engine {res.value} oracle {oracle.value}")
            cut_rows = []
            root = res.root_lp.point
            cut_rows += [c.constraint("root") for c in find_all_covers(inst, root)]
            rounds = rounds_of_cuts(inst, 3)
            cut_rows += list(rounds[-1].constraints[len(inst.constraints):])
            feasible = [p for p in itertools.product((0, 1), repeat=n) if inst.is_feasible(p)]
            for row in cut_rows:
                if not all(row.satisfied_by(p) for p in feasible):
                    bad.append(f"seed {seed}: cut {row.label} removes an integer point")
            rows.append(f"{seed} {res.value} {oracle.value} cuts={len(cut_rows)} points={len(feasible)}")
        detail = f"{len(seeds)} instances agree, all cuts valid" if not bad else "; ".join(bad[:3])
        return not bad, detail, "\n".join(rows)

    return _timed(7, "oracle equivalence", body)


@dataclass(frozen=True)
class BatchOutcome:
    csv: str
    excluded: tuple
    single_increase: float | None
    all_cuts_increases: int
    high_gap_mean: float | None
    seconds: float = 0.0


def batch_outcome(seeds: Sequence[int] = BATCH_SEEDS, workers: int | None = None, progress=None) -> BatchOutcome:
    t0 = time.perf_counter()
    batch = run_batch(20, 50, seeds, "fsb-product", workers=workers, progress=progress)
    recs = batch.records
    single = [r for r in recs if r.mode == "single-cut"]
    frac = sum(r.delta_T > 0 for r in single) / len(single) if single else None
    all_up = sum(1 for r in recs if r.mode == "all-cuts" and r.delta_T > 0)
    high = [r.delta_T for r in recs if r.delta_G is not None and r.delta_G > Fraction(1, 5)]
    mean = float(sum(high) / len(high)) if high else None
    return BatchOutcome(to_csv(recs), tuple(batch.excluded), frac, all_up, mean, time.perf_counter() - t0)


def check_batch(outcome: BatchOutcome) -> CheckResult:
    def body():
        o = outcome
        a = o.single_increase is not None and 0.05 <= o.single_increase <= 0.40
        b = o.all_cuts_increases >= 1
        c = o.high_gap_mean is not None and o.high_gap_mean < 0
        excluded = ", ".join(str(s) for s, _ in o.excluded) or "none"
        fmt = (lambda v: "n/a" if v is None else f"{v:.4f}")
        detail = (f"(a) single-cut increase fraction {fmt(o.single_increase)} {'ok' if a else 'outside [0.05, 0.40]'}; "
                  f"(b) all-cuts increases {o.all_cuts_increases}; "
                  f"(c) mean delta_T at delta_G>0.2 {fmt(o.high_gap_mean)}; excluded: {excluded}")
        return a and b and c, detail, o.csv

    res = _timed(8, "cut/tree-size batch", body)
    # the batch itself ran before this check; report its wall time
    return replace(res, seconds=res.seconds + outcome.seconds)


def check_harness_arithmetic(csv_text: str, tol: float = 1e-9) -> CheckResult:
    def body():
        rows = read_csv(io.StringIO(csv_text))
        bad = []
        covers_by_seed = {}
        for row in rows:
            z, zh, zi = (Fraction(row[k]) for k in ("z", "z_hat", "z_ip"))
            T, Th = int(row["T"]), int(row["T_hat"])
            g = None if z == zi else (z - zh) / (z - zi)
            if (g is None) != (row["delta_G"] == "") or (g is not None and abs(float(g) - float(row["delta_G"])) > tol):
                bad.append(f"delta_G {row['instance']}/{row['round_or_cut']}")
            if abs((Th - T) / T - float(row["delta_T"])) > tol:
                bad.append(f"delta_T {row['instance']}/{row['round_or_cut']}")
            if row["mode"] == "single-cut":
                seed = int(row["seed"])
                if seed not in covers_by_seed:
                    inst = gen_mkp(MkpConfig(20, 50, seed))
                    x_star = solve_lp(LpProblem(inst)).point
                    covers_by_seed[seed] = (x_star, find_all_covers(inst, x_star))
                x_star, cuts = covers_by_seed[seed]
                cut = cuts[int(row["round_or_cut"])]
                d_star = cut.violation
                if cut_violation(cut, x_star) != d_star:
                    bad.append(f"d* identity {row['instance']}/{row['round_or_cut']}")
                depth = float(d_star) / math.sqrt(len(cut.cover))
                if abs(depth - float(row["delta_d"])) > tol or abs(cut_depth(cut, x_star) - depth) > tol:
                    bad.append(f"delta_d {row['instance']}/{row['round_or_cut']}")
        detail = f"{len(rows)} rows recomputed" if not bad else f"{len(bad)} mismatches: {bad[:3]}"
        return not bad and bool(rows), detail, ""

    return _timed(9, "harness arithmetic", body)


def check_determinism(first: Sequence[CheckResult], second: Sequence[CheckResult]) -> CheckResult:
    def body():
        diff = [a.number for a, b in zip(first, second) if a.output != b.output]
        if len(first) != len(second):
            diff.append(-1)
        covered = ",".join(str(r.number) for r in first)
        return not diff, f"criteria {covered} identical on rerun" if not diff else f"outputs differ for {diff}", ""

    return _timed(10, "determinism", body)


def deterministic_checks(seeds: Sequence[int] = BATCH_SEEDS, qn_max: int = QN_MAX, qn_budget: float = QN_BUDGET,
                         workers: int | None = None, log: Callable[[str], None] | None = None):
    """Criteria 1-8 in order; also returns the batch outcome for criterion 9."""
    results = []
    for fn in (check_cross_counts, check_root_scores, check_qn_linear):
        results.append(fn())
        if log:
            log(results[-1].line())
    results.append(check_qn_tight(qn_max, qn_budget, min(QN_MIN_VERIFIED, qn_max), log))
    if log:
        log(results[-1].line())
    for fn in (check_lp_landmarks, check_certificates, check_oracle):
        results.append(fn())
        if log:
            log(results[-1].line())
    outcome = batch_outcome(seeds, workers)
    results.append(check_batch(outcome))
    if log:
        log(results[-1].line())
    return results, outcome


def run_all(seeds: Sequence[int] = BATCH_SEEDS, qn_max: int = QN_MAX, qn_budget: float = QN_BUDGET,
            workers: int | None = None, log: Callable[[str], None] | None = print) -> list[CheckResult]:
    first, outcome = deterministic_checks(seeds, qn_max, qn_budget, workers, log)
    results = list(first)
    results.append(check_harness_arithmetic(outcome.csv))
    if log:
        log(results[-1].line())
        log("rerunning criteria 1-8 for the determinism check")
    second, _ = deterministic_checks(seeds, qn_max, qn_budget, workers, None)
    results.append(check_determinism(first, second))
    if log:
        log(results[-1].line())
    return results


__all__ = [
    "CheckResult", "BatchOutcome", "batch_outcome", "check_batch", "check_certificates", "check_cross_counts",
    "check_determinism", "check_harness_arithmetic", "check_lp_landmarks", "check_oracle", "check_qn_linear",
    "check_qn_tight", "check_root_scores", "deterministic_checks", "root_score_table", "run_all",
]
