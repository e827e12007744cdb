"""Exact-arithmetic branch and bound for studying how cuts change tree size."""

from .branching import RULES, select_branch_var
from .cuts import CoverCut, apply_cuts, find_all_covers, rounds_of_cuts, separate_cover
from .engine import BnbResult, EngineOptions, replay_certificate, solve
from .instances import MkpConfig, build_cross, build_qn, build_two_dim, gen_mkp
from .lp import LpOutcome, LpProblem, solve_lp
from .model import LinearConstraint, MipInstance, Variable, brute_force_opt, make_constraint, make_instance

__version__ = "0.1.0"

__all__ = [
    "RULES", "select_branch_var", "CoverCut", "apply_cuts", "find_all_covers", "rounds_of_cuts",
    "separate_cover", "BnbResult", "EngineOptions", "replay_certificate", "solve", "MkpConfig",
    "build_cross", "build_qn", "build_two_dim", "gen_mkp", "LpOutcome", "LpProblem", "solve_lp",
    "LinearConstraint", "MipInstance", "Variable", "brute_force_opt", "make_constraint", "make_instance",
]
