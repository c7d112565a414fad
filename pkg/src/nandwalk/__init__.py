"""Coined quantum walk evaluation of NAND trees, and a neuroevolved agent built on it."""

from .tree import TailedTree, TreeShape, eval_nand_classical
from .circuits import OracleSpec, build_walk_operator
from .evaluator import DecisionRule, EvalConfig, calibrate_decision_rule, evaluate_formula

__all__ = [
    "DecisionRule",
    "EvalConfig",
    "OracleSpec",
    "TailedTree",
    "TreeShape",
    "build_walk_operator",
    "calibrate_decision_rule",
    "eval_nand_classical",
    "evaluate_formula",
]

__version__ = "0.1.0"
