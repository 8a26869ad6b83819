"""Sparse Gaussian graphical models by l0l2-penalized pseudo-likelihood,
solved exactly by branch-and-bound or heuristically by coordinate descent."""

from .bnb import BnBConfig, BnBResult, initial_incumbent, solve_bnb
from .cd import SolverConfig, active_set_solve, solve_restricted
from .data import (eval_metrics, generate_banded, generate_uniform, mcc,
                   sample_gaussian, tune_grid)
from .duality import build_dual, certified_node_bound
from .model import (NodeState, ProblemInstance, SymmetricEstimate, ZBound,
                    load_instance, objective_F0, objective_unified)
from .regularizers import Penalty, PenaltySpec

__all__ = [
    "BnBConfig", "BnBResult", "NodeState", "Penalty", "PenaltySpec",
    "ProblemInstance", "SolverConfig", "SymmetricEstimate", "ZBound",
    "active_set_solve", "build_dual", "certified_node_bound", "eval_metrics",
    "generate_banded", "generate_uniform", "initial_incumbent",
    "load_instance", "mcc", "objective_F0", "objective_unified",
    "sample_gaussian", "solve_bnb", "solve_restricted", "tune_grid",
]
