"""Trace CSV files and formula snapshots."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterator, TextIO, Union

from . import __version__
from .cnf import RNG_ALGORITHM, CnfFormula, write_dimacs_file
from .evolution import Event, GenerationRecord
from .solver import SolveStatus

TRACE_COLUMNS = (
    "generation",
    "score",
    "decisions",
    "propagations",
    "clauses",
    "accepted",
    "status",
    "event",
)


def record_to_row(rec: GenerationRecord) -> list:
    return [
        rec.generation,
        rec.score_value,
        rec.decisions,
        rec.propagations,
        rec.clause_count,
        int(rec.accepted),
        rec.status.value,
        rec.event.value,
    ]


def row_to_record(row: dict) -> GenerationRecord:
    return GenerationRecord(
        generation=int(row["generation"]),
        score_value=int(row["score"]),
        decisions=int(row["decisions"]),
        propagations=int(row["propagations"]),
        clause_count=int(row["clauses"]),
        accepted=row["accepted"] == "1",
        status=SolveStatus(row["status"]),
        event=Event(row["event"]),
    )


class CsvTraceSink:
    """Streams records to a CSV file.  Lines starting with '#' are metadata."""

    def __init__(self, path: Union[str, Path], seed: int | None = None, flush_every: int = 1000):
        self.path = Path(path)
        self._fh: TextIO = open(self.path, "w", newline="")
        meta = f"# hardsat {__version__} rng={RNG_ALGORITHM}"
        if seed is not None:
            meta += f" seed={seed}"
        self._fh.write(meta + "\n")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(TRACE_COLUMNS)
        self._flush_every = flush_every
        self._pending = 0

    def emit(self, record: GenerationRecord, formula: CnfFormula) -> None:
        self._writer.writerow(record_to_row(record))
        self._pending += 1
        if self._pending >= self._flush_every:
            self._fh.flush()
            self._pending = 0

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SnapshotSink:
    """Writes the current formula as DIMACS every ``every`` generations."""

    def __init__(self, directory: Union[str, Path], every: int):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.every = every
        self._due = every

    def emit(self, record: GenerationRecord, formula: CnfFormula) -> None:
        # sinks only see recorded generations, so take the first one at or past the due mark
        if record.generation >= self._due:
            write_dimacs_file(formula, self.directory / f"gen{record.generation:08d}.cnf")
            while self._due <= record.generation:
                self._due += self.every


def read_trace(path: Union[str, Path]) -> list[GenerationRecord]:
    return list(iter_trace(path))


def iter_trace(path: Union[str, Path]) -> Iterator[GenerationRecord]:
    with open(path, newline="") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        for row in csv.DictReader(lines):
            yield row_to_record(row)
