"""Instrumented DPLL solver used as the hardness measure.

``solve`` reports how many decisions (binary branch nodes) and unit
propagations (variables fixed by unit resolution) a complete chronological
DPLL search needs.  Counters include work spent in refuted subtrees.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import chain
from typing import Mapping, Optional

import numpy as np

from . import _kernel
from .cnf import CnfFormula

BRUTE_FORCE_MAX_VARS = 24


class SolveStatus(str, enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    LIMIT_EXCEEDED = "LIMIT_EXCEEDED"


class Heuristic(str, enum.Enum):
    STATIC_MIN_INDEX = "static"
    JEROSLOW_WANG = "jw"
    RANDOM = "random"


_HEURISTIC_CODES = {
    Heuristic.STATIC_MIN_INDEX: _kernel.STATIC_MIN_INDEX,
    Heuristic.JEROSLOW_WANG: _kernel.JEROSLOW_WANG,
    Heuristic.RANDOM: _kernel.RANDOM,
}
_STATUS = {
    _kernel.SAT: SolveStatus.SAT,
    _kernel.UNSAT: SolveStatus.UNSAT,
    _kernel.LIMIT: SolveStatus.LIMIT_EXCEEDED,
}


@dataclass(frozen=True)
class SolverConfig:
    heuristic: Heuristic = Heuristic.STATIC_MIN_INDEX
    first_phase: bool = True
    decision_limit: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "heuristic", Heuristic(self.heuristic))
        if self.heuristic is Heuristic.RANDOM and self.seed is None:
            raise ValueError("RANDOM heuristic requires a seed")
        if self.decision_limit is not None and self.decision_limit < 1:
            raise ValueError("decision_limit must be positive")

    def to_dict(self) -> dict:
        return {
            "heuristic": self.heuristic.value,
            "first_phase": self.first_phase,
            "decision_limit": self.decision_limit,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> SolverConfig:
        return cls(**data)


@dataclass(frozen=True)
class SolveStats:
    status: SolveStatus
    decisions: int
    propagations: int
    model: Optional[tuple[int, ...]] = None

    def as_row(self) -> dict:
        return {
            "status": self.status.value,
            "decisions": self.decisions,
            "propagations": self.propagations,
        }


def _flatten(formula: CnfFormula) -> tuple[np.ndarray, np.ndarray]:
    clauses = formula.clauses
    lengths = np.fromiter(map(len, clauses), dtype=np.int64, count=len(clauses))
    starts = np.zeros(len(clauses) + 1, dtype=np.int64)
    np.cumsum(lengths, out=starts[1:])
    lits = np.fromiter(chain.from_iterable(clauses), dtype=np.int32, count=int(starts[-1]))
    return lits, starts


def solve(formula: CnfFormula, config: SolverConfig = SolverConfig()) -> SolveStats:
    lits, starts = _flatten(formula)
    limit = -1 if config.decision_limit is None else config.decision_limit
    code, decisions, props, assign = _kernel.dpll(
        formula.num_variables,
        lits,
        starts,
        _HEURISTIC_CODES[config.heuristic],
        config.first_phase,
        limit,
        config.seed or 0,
    )
    status = _STATUS[code]
    model = None
    if status is SolveStatus.SAT:
        # unassigned variables only occur in satisfied clauses; any value works
        model = tuple(
            v if assign[v] == 1 else -v for v in range(1, formula.num_variables + 1)
        )
    return SolveStats(status, int(decisions), int(props), model)


def unit_propagate(
    formula: CnfFormula, assignment: Mapping[int, bool] | None = None
) -> tuple[dict[int, bool], bool, int]:
    """Apply unit resolution to a fixpoint.

    Returns the extended assignment, whether some clause became falsified,
    and how many variables this call fixed.
    """
    values = dict(assignment or {})
    count = 0
    changed = True
    while changed:
        changed = False
        for clause in formula.clauses:
            free = None
            n_free = 0
            satisfied = False
            for lit in clause:
                val = values.get(abs(lit))
                if val is None:
                    if free != lit:
                        n_free += 1
                    free = lit
                elif val == (lit > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if n_free == 0:
                return values, True, count
            if n_free == 1:
                values[abs(free)] = free > 0
                count += 1
                changed = True
    return values, False, count


def brute_force_sat(formula: CnfFormula) -> SolveStatus:
    """Decide satisfiability by enumerating every assignment (testing oracle)."""
    n = formula.num_variables
    if n > BRUTE_FORCE_MAX_VARS:
        raise ValueError(f"brute force refused for {n} > {BRUTE_FORCE_MAX_VARS} variables")
    if any(len(c) == 0 for c in formula.clauses):
        return SolveStatus.UNSAT
    if not formula.clauses:
        return SolveStatus.SAT
    chunk = 1 << min(n, 20)
    for base in range(0, 1 << n, chunk):
        rows = np.arange(base, base + chunk, dtype=np.int64)
        # bit v-1 of the row index is the value of variable v
        bits = ((rows[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)
        alive = np.ones(chunk, dtype=bool)
        for clause in formula.clauses:
            sat = np.zeros(chunk, dtype=bool)
            for lit in clause:
                col = bits[:, abs(lit) - 1]
                sat |= col if lit > 0 else ~col
            alive &= sat
            if not alive.any():
                break
        if alive.any():
            return SolveStatus.SAT
    return SolveStatus.UNSAT
