"""Measure formulas with an external DIMACS solver executable."""

from __future__ import annotations

import logging
import math
import os
import re
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .cnf import CnfFormula, write_dimacs
from .solver import SolveStatus

log = logging.getLogger(__name__)

# Stats-line patterns for solvers in common use.  Output formats drift between
# releases, so these are conveniences rather than guarantees.
SOLVER_PRESETS: dict[str, dict[str, str]] = {
    "cryptominisat": {"decisions": r"^c decisions\b", "propagations": r"^c propagations\b"},
    "minisat": {"decisions": r"^decisions\b", "propagations": r"^propagations\b"},
    "kissat": {"decisions": r"^c decisions:", "propagations": r"^c propagations:"},
    "hardsat": {"decisions": r"^c decisions\b", "propagations": r"^c propagations\b"},
}

_INT = re.compile(r"-?\d+")


class ExternalSolverError(RuntimeError):
    def __init__(self, message: str, output: str = ""):
        super().__init__(message)
        self.output = output


@dataclass(frozen=True)
class ExternalSolverSpec:
    executable: str
    stat_patterns: Mapping[str, str]
    extra_args: Sequence[str] = ()
    timeout: float = 60.0

    def __post_init__(self):
        if not self.stat_patterns:
            raise ValueError("at least one stat pattern is required")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class ExternalRunResult:
    status: SolveStatus
    counters: dict[str, int]
    raw_output: str
    elapsed: float
    returncode: int = 0


@dataclass
class TransferReport:
    initial: ExternalRunResult
    final: ExternalRunResult
    ratios: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "initial": {"status": self.initial.status.value, **self.initial.counters},
            "final": {"status": self.final.status.value, **self.final.counters},
            "ratios": self.ratios,
        }


def parse_status(output: str, returncode: int) -> SolveStatus:
    for line in output.splitlines():
        line = line.strip()
        if line == "s SATISFIABLE":
            return SolveStatus.SAT
        if line == "s UNSATISFIABLE":
            return SolveStatus.UNSAT
    if returncode == 10:
        return SolveStatus.SAT
    if returncode == 20:
        return SolveStatus.UNSAT
    raise ExternalSolverError(
        f"solver reported no outcome (exit code {returncode}, no 's' line)", output
    )


def extract_counter(output: str, pattern: str) -> Optional[int]:
    """Integer following the last match of ``pattern``, or its first group if it has one."""
    rx = re.compile(pattern)
    value = None
    for line in output.splitlines():
        m = rx.search(line)
        if not m:
            continue
        if m.groups() and m.group(1) is not None:
            num = _INT.search(m.group(1))
        else:
            num = _INT.search(line, m.end())
        if num:
            value = int(num.group())
    return value


def run_external(formula: CnfFormula, spec: ExternalSolverSpec) -> ExternalRunResult:
    fd, path = tempfile.mkstemp(suffix=".cnf", prefix="hardsat-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(write_dimacs(formula))
        cmd = [spec.executable, *spec.extra_args, path]
        start = time.perf_counter()
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=spec.timeout)
        except subprocess.TimeoutExpired as exc:
            out = exc.stdout or ""
            if isinstance(out, bytes):
                out = out.decode(errors="replace")
            raise ExternalSolverError(f"timed out after {spec.timeout}s: {cmd}", out) from exc
        except OSError as exc:
            raise ExternalSolverError(f"cannot run {spec.executable}: {exc}") from exc
        elapsed = time.perf_counter() - start
    finally:
        os.unlink(path)

    output = proc.stdout + proc.stderr
    status = parse_status(proc.stdout, proc.returncode)
    counters = {}
    for name, pattern in spec.stat_patterns.items():
        value = extract_counter(output, pattern)
        if value is None:
            log.warning("counter %r: pattern %r matched nothing", name, pattern)
        else:
            counters[name] = value
    return ExternalRunResult(status, counters, output, elapsed, proc.returncode)


def counter_ratio(initial: int, final: int) -> float:
    if initial == 0:
        return 1.0 if final == 0 else math.inf
    return final / initial


def transfer_report(initial: CnfFormula, final: CnfFormula, spec: ExternalSolverSpec) -> TransferReport:
    a = run_external(initial, spec)
    b = run_external(final, spec)
    ratios = {
        name: counter_ratio(a.counters[name], b.counters[name])
        for name in spec.stat_patterns
        if name in a.counters and name in b.counters
    }
    return TransferReport(a, b, ratios)
