"""CNF formulas, uniform random k-CNF generation and DIMACS I/O.

Literals are DIMACS-style signed integers: ``v`` is the variable ``v``,
``-v`` its negation.  A clause is a tuple of literals and a formula keeps
its clauses in a tuple, so clause positions are stable and formulas can be
hashed and compared structurally.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

log = logging.getLogger(__name__)

RNG_ALGORITHM = "python-random-mt19937"

Clause = tuple[int, ...]


class InvalidSpecError(ValueError):
    """Raised when a random formula cannot be generated from the given sizes."""


class DimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def make_rng(seed: int) -> random.Random:
    """Seeded stream used everywhere randomness is consumed."""
    return random.Random(seed)


@dataclass(frozen=True)
class CnfFormula:
    num_variables: int
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self):
        if self.num_variables < 0:
            raise ValueError("num_variables must be non-negative")
        if not isinstance(self.clauses, tuple):
            object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_variables:
                    raise ValueError(
                        f"literal {lit} out of range for {self.num_variables} variables"
                    )

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def with_clauses(self, clauses: Sequence[Clause]) -> CnfFormula:
        # Skips validation; callers only pass clauses built from in-range literals.
        new = object.__new__(CnfFormula)
        object.__setattr__(new, "num_variables", self.num_variables)
        object.__setattr__(new, "clauses", tuple(clauses))
        return new

    def evaluate(self, model: Iterable[int]) -> bool:
        """True iff every clause has a literal made true by ``model``.

        ``model`` is a collection of true literals (signed ints).
        """
        true_lits = set(model)
        return all(any(lit in true_lits for lit in clause) for clause in self.clauses)


@dataclass(frozen=True)
class RandomFormulaSpec:
    num_variables: int
    num_clauses: int
    clause_width: int
    seed: int = 0

    def validate(self) -> None:
        if self.num_variables < 1:
            raise InvalidSpecError("num_variables must be >= 1")
        if self.num_clauses < 0:
            raise InvalidSpecError("num_clauses must be >= 0")
        if not 1 <= self.clause_width <= self.num_variables:
            raise InvalidSpecError(
                f"clause width {self.clause_width} must lie in [1, {self.num_variables}]"
            )
        if not 0 <= self.seed < 2**64:
            raise InvalidSpecError("seed must be a 64-bit unsigned integer")


def generate_random_clause(n: int, k: int, rng: random.Random) -> Clause:
    """Draw ``k`` distinct variables from ``1..n``, each negated with probability 1/2."""
    if not 1 <= k <= n:
        raise InvalidSpecError(f"cannot draw {k} distinct variables out of {n}")
    variables = rng.sample(range(1, n + 1), k)
    bits = rng.getrandbits(k)
    return tuple(v if (bits >> i) & 1 else -v for i, v in enumerate(variables))


def generate_random_kcnf(spec: RandomFormulaSpec, rng: random.Random | None = None) -> CnfFormula:
    spec.validate()
    if rng is None:
        rng = make_rng(spec.seed)
    n, k = spec.num_variables, spec.clause_width
    clauses = tuple(generate_random_clause(n, k, rng) for _ in range(spec.num_clauses))
    return CnfFormula(n, clauses)


def parse_dimacs(text: Union[str, bytes]) -> CnfFormula:
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    num_vars = None
    declared = 0
    clauses: list[Clause] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate header", lineno)
            fields = line.split()
            if len(fields) != 4 or fields[1] != "cnf":
                raise DimacsError(f"bad header {line!r}", lineno)
            try:
                num_vars, declared = int(fields[2]), int(fields[3])
            except ValueError:
                raise DimacsError(f"bad header {line!r}", lineno) from None
            if num_vars < 0 or declared < 0:
                raise DimacsError("negative size in header", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause before 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"non-integer token {tok!r}", lineno) from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > num_vars:
                raise DimacsError(f"variable {abs(lit)} exceeds declared {num_vars}", lineno)
            else:
                current.append(lit)

    if num_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        log.warning("last clause not terminated by 0; keeping it")
        clauses.append(tuple(current))
    if len(clauses) != declared:
        log.warning("header declares %d clauses, found %d", declared, len(clauses))
    return CnfFormula(num_vars, tuple(clauses))


def write_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.num_variables} {formula.num_clauses}"]
    for clause in formula.clauses:
        lines.append(" ".join([*map(str, clause), "0"]))
    return "\n".join(lines) + "\n"


def read_dimacs_file(path: Union[str, Path]) -> CnfFormula:
    return parse_dimacs(Path(path).read_bytes())


def write_dimacs_file(formula: CnfFormula, path: Union[str, Path]) -> None:
    Path(path).write_text(write_dimacs(formula))
