"""Best-bound branch-and-bound with exact node accounting.

Every created node is counted, including infeasible children and children
that are later pruned.  Strong-branching probes are LP solves, not nodes.

Processing order: open nodes are popped by largest LP bound (ties: smallest
id).  A popped node whose bound is at most the incumbent (or the cutoff) is
pruned; otherwise both children are created and solved at once.  Integral
children update the incumbent immediately.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .branching import Rule, make_rule, select_branch_var
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpOutcome, LpProblem, solve_lp
from .model import MipInstance, ModelError, OptResult, validate

OPEN = "open"
BRANCHED = "branched"
PRUNED_BOUND = "pruned-by-bound"
PRUNED_INTEGRAL = "pruned-by-integrality"
NODE_INFEASIBLE = "infeasible"
STATUSES = (OPEN, BRANCHED, PRUNED_BOUND, PRUNED_INTEGRAL, NODE_INFEASIBLE)


class EngineError(RuntimeError):
    pass


@dataclass
class Node:
    id: int
    parent: int | None
    overrides: dict
    lp: LpOutcome
    depth: int
    status: str = OPEN
    branch_var: int | None = None       # bound changed to reach this node
    branch_dir: str | None = None       # "down" (x <= floor) or "up" (x >= floor + 1)
    branch_bound: Fraction | None = None
    split_var: int | None = None        # variable this node branched on
    split_floor: Fraction | None = None
    children: tuple = ()

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "branch_var": self.branch_var,
            "branch_direction": self.branch_dir,
            "branch_bound": None if self.branch_bound is None else str(self.branch_bound),
            "lp_status": self.lp.status,
            "lp_value": None if self.lp.value is None else str(self.lp.value),
            "status": self.status,
            "depth": self.depth,
            "split_var": self.split_var,
        }


@dataclass(frozen=True)
class EngineOptions:
    rule: object = "fsb-product"
    cutoff: Fraction | None = None
    node_limit: int | None = None
    keep_tree: bool = False

    def __post_init__(self):
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")


@dataclass
class BnbResult:
    status: str
    incumbent: OptResult
    node_count: int
    lp_solve_count: int
    probe_lp_count: int
    root_lp: LpOutcome
    truncated: bool = False
    tree: list | None = None
    branched_count: int = 0

    @property
    def value(self) -> Fraction | None:
        return self.incumbent.value


def _integral(inst: MipInstance, point) -> bool:
    return all(point[i].denominator == 1 for i in inst.integer_indices())


def solve(instance: MipInstance, options: EngineOptions | None = None) -> BnbResult:
    options = options or EngineOptions()
    problems = validate(instance)
    if problems:
        raise ModelError("; ".join(problems))
    for i in instance.integer_indices():
        v = instance.variables[i]
        if v.lower is None or v.upper is None:
            raise ModelError(f"integer variable {v.label} needs finite bounds")
    rule: Rule = make_rule(options.rule)

    nodes: list[Node] = []
    heap = []
    tableaus = {}
    best: OptResult = OptResult(INFEASIBLE)
    counts = {"lp": 0, "probe": 0, "branched": 0}

    def create(parent: Node | None, problem: LpProblem, lp: LpOutcome, var=None, direction=None, bound=None):
        nonlocal best
        node = Node(len(nodes), None if parent is None else parent.id, dict(problem.overrides),
                    replace(lp, tableau=None), 0 if parent is None else parent.depth + 1,
                    branch_var=var, branch_dir=direction, branch_bound=bound)
        nodes.append(node)
        counts["lp"] += 1
        if lp.status == UNBOUNDED:
            raise EngineError(f"LP relaxation unbounded at node {node.id}")
        if lp.status == INFEASIBLE:
            node.status = NODE_INFEASIBLE
        elif _integral(instance, lp.point):
            node.status = PRUNED_INTEGRAL
            if best.value is None or lp.value > best.value:
                best = OptResult(OPTIMAL, lp.value, lp.point)
        else:
            tableaus[node.id] = lp
            heapq.heappush(heap, (-lp.value, node.id))
        return node

    root_problem = LpProblem(instance)
    root_lp = solve_lp(root_problem)
    create(None, root_problem, root_lp)
    truncated = False

    while heap:
        _, nid = heapq.heappop(heap)
        node = nodes[nid]
        lp = tableaus.pop(nid)
        threshold = best.value
        if options.cutoff is not None and (threshold is None or options.cutoff > threshold):
            threshold = options.cutoff
        if threshold is not None and lp.value <= threshold:
            node.status = PRUNED_BOUND
            continue
        if options.node_limit is not None and len(nodes) + 2 > options.node_limit:
            truncated = True
            heapq.heappush(heap, (-lp.value, nid))
            tableaus[nid] = lp
            break
        problem = LpProblem(instance, node.overrides)
        decision = select_branch_var(problem, rule, lp)
        counts["probe"] += decision.probe_count
        node.status = BRANCHED
        node.split_var, node.split_floor = decision.var, decision.floor
        counts["branched"] += 1
        pr = decision.probe
        if pr is not None:
            down, down_lp, up, up_lp = pr.down, pr.down_lp, pr.up, pr.up_lp
        else:
            down = problem.tighten(decision.var, upper=decision.floor)
            up = problem.tighten(decision.var, lower=decision.floor + 1)
            down_lp = solve_lp(down, warm=lp)
            up_lp = solve_lp(up, warm=lp)
        a = create(node, down, down_lp, decision.var, "down", decision.floor)
        b = create(node, up, up_lp, decision.var, "up", decision.floor + 1)
        node.children = (a.id, b.id)

    status = OPTIMAL if best.value is not None else INFEASIBLE
    return BnbResult(
        status=status,
        incumbent=best,
        node_count=len(nodes),
        lp_solve_count=counts["lp"] + counts["probe"],
        probe_lp_count=counts["probe"],
        root_lp=replace(root_lp, tableau=None),
        truncated=truncated,
        tree=nodes if options.keep_tree else None,
        branched_count=counts["branched"],
    )


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class ReplayResult:
    verified: bool
    replay_node_count: int
    failures: tuple[str, ...] = ()


def replay_certificate(tree: list[Node], instance: MipInstance) -> ReplayResult:
    """Replay the branching decisions of ``tree`` on ``instance``.

    The tree proves ``instance`` when every replayed leaf is infeasible,
    integral, or bounded by the best integral point known to the replay.
    """
    if not tree:
        raise EngineError("empty tree")
    root = tree[0]
    for node in tree:
        for i in node.overrides:
            if not (0 <= i < instance.n and instance.variables[i].is_integer):
                raise EngineError(f"node {node.id} branches on column {i}, not an integer variable of {instance.name}")

    failures = []
    leaves = []
    incumbent = None

    # integer parts of the source tree's integral leaves are certificate
    # candidates, completed by the best continuous part the target allows
    ints = instance.integer_indices()
    for node in tree:
        point = node.lp.point
        if node.status != PRUNED_INTEGRAL or len(point) <= max(ints, default=-1):
            continue
        problem = LpProblem(instance)
        for i in ints:
            problem = problem.tighten(i, point[i], point[i])
        completion = solve_lp(problem)
        if completion.optimal and (incumbent is None or completion.value > incumbent):
            incumbent = completion.value

    count = 0
    stack = [(root, None)]
    while stack:
        src, parent_value = stack.pop()
        count += 1
        lp = solve_lp(LpProblem(instance, src.overrides))
        if lp.status == UNBOUNDED:
            failures.append(f"node {src.id}: unbounded replay LP")
            continue
        if lp.status == OPTIMAL:
            if src.lp.status == INFEASIBLE:
                failures.append(f"node {src.id}: feasible on replay but infeasible in source")
            elif lp.value > src.lp.value:
                failures.append(f"node {src.id}: replay bound {lp.value} exceeds source bound {src.lp.value}")
            if parent_value is not None and lp.value > parent_value:
                failures.append(f"node {src.id}: replay bound increases along the path")
        if lp.status == INFEASIBLE:
            continue
        if _integral(instance, lp.point):
            if incumbent is None or lp.value > incumbent:
                incumbent = lp.value
            continue
        if src.children:
            for cid in reversed(src.children):
                stack.append((tree[cid], lp.value))
        else:
            leaves.append((src.id, lp.value))

    for nid, value in leaves:
        if incumbent is None or value > incumbent:
            failures.append(f"node {nid}: open leaf with bound {value}")
    return ReplayResult(not failures, count, tuple(failures))


# ---------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class TreeStats:
    depth_histogram: dict
    status_counts: dict
    max_depth: int
    node_count: int


def tree_stats(result: BnbResult) -> TreeStats:
    if result.tree is None:
        raise EngineError("result has no tree (solve with keep_tree=True)")
    depths = Counter(n.depth for n in result.tree)
    statuses = Counter(n.status for n in result.tree)
    return TreeStats(dict(sorted(depths.items())), {s: statuses.get(s, 0) for s in STATUSES},
                     max(depths), len(result.tree))


def tree_to_json(tree: list[Node], instance: MipInstance | None = None) -> str:
    records = [n.to_record() for n in tree]
    if instance is not None:
        for rec in records:
            for key in ("branch_var", "split_var"):
                if rec[key] is not None:
                    rec[key] = instance.variables[rec[key]].label
    return json.dumps(records, indent=1) + "\n"


def tree_to_dot(tree: list[Node], instance: MipInstance | None = None) -> str:
    def vname(i):
        return instance.variables[i].label if instance is not None else f"v{i}"

    lines = ["digraph bnb {"]
    for n in tree:
        val = "-" if n.lp.value is None else str(n.lp.value)
        lines.append(f'  n{n.id} [label="{n.id}\\n{val}\\n{n.status}"];')
    for n in tree:
        if n.parent is not None:
            op = "<=" if n.branch_dir == "down" else ">="
            lines.append(f'  n{n.parent} -> n{n.id} [label="{vname(n.branch_var)} {op} {n.branch_bound}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


__all__ = [
    "Node", "EngineOptions", "BnbResult", "solve", "replay_certificate", "ReplayResult",
    "tree_stats", "TreeStats", "tree_to_json", "tree_to_dot", "EngineError",
]
