"""Evolve random k-CNF formulas into instances that are hard for a DPLL solver."""

__version__ = "0.1.0"

from .cnf import (
    CnfFormula,
    RandomFormulaSpec,
    generate_random_clause,
    generate_random_kcnf,
    parse_dimacs,
    write_dimacs,
)
from .evolution import (
    EvolutionConfig,
    Metric,
    SelectionCriterion,
    StagePlan,
    TransitionOperator,
    evolve,
)
from .solver import Heuristic, SolverConfig, SolveStats, SolveStatus, brute_force_sat, solve

__all__ = [
    "CnfFormula",
    "EvolutionConfig",
    "Heuristic",
    "Metric",
    "RandomFormulaSpec",
    "SelectionCriterion",
    "SolveStats",
    "SolveStatus",
    "SolverConfig",
    "StagePlan",
    "TransitionOperator",
    "brute_force_sat",
    "evolve",
    "generate_random_clause",
    "generate_random_kcnf",
    "parse_dimacs",
    "solve",
    "write_dimacs",
]
