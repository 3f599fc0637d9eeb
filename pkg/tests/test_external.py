import logging
import os

import pytest

from hardsat.cnf import CnfFormula, RandomFormulaSpec, generate_random_kcnf, write_dimacs
from hardsat.external import (
    SOLVER_PRESETS,
    ExternalSolverError,
    ExternalSolverSpec,
    extract_counter,
    parse_status,
    run_external,
    transfer_report,
)
from hardsat.solver import SolveStatus, brute_force_sat

from conftest import make_script

CONTRADICTION = CnfFormula(1, ((1,), (-1,)))
UNIT = CnfFormula(1, ((1,),))


def test_counter_extraction_from_stats_line():
    assert extract_counter("c decisions : 2051\n", "c decisions") == 2051
    out = "c restarts : 3\nc decisions : 17 (1.2 % random)\nc propagations : 900\n"
    assert extract_counter(out, r"^c decisions\b") == 17
    assert extract_counter(out, r"^c propagations") == 900
    assert extract_counter(out, r"conflicts") is None
    assert extract_counter("c stats decisions=42 conflicts=3", r"decisions=(\d+)") == 42
    # the final stats block wins over progress lines
    assert extract_counter("c decisions : 5\nc decisions : 8\n", "c decisions") == 8


def test_status_parsing():
    assert parse_status("c x\ns SATISFIABLE\nv 1 0\n", 10) is SolveStatus.SAT
    assert parse_status("s UNSATISFIABLE\n", 0) is SolveStatus.UNSAT
    assert parse_status("", 10) is SolveStatus.SAT
    assert parse_status("", 20) is SolveStatus.UNSAT
    with pytest.raises(ExternalSolverError):
        parse_status("s UNKNOWN\n", 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExternalSolverSpec("x", {})
    with pytest.raises(ValueError):
        ExternalSolverSpec("x", {"decisions": "d"}, timeout=0)


def test_own_solver_as_external(hardsat_solver):
    spec = ExternalSolverSpec(hardsat_solver, SOLVER_PRESETS["hardsat"])
    r = run_external(CONTRADICTION, spec)
    assert r.status is SolveStatus.UNSAT
    assert r.counters == {"decisions": 0, "propagations": 1}
    assert run_external(UNIT, spec).status is SolveStatus.SAT


def test_quiet_mode_exit_code_fallback(hardsat_solver):
    spec = ExternalSolverSpec(hardsat_solver, {"decisions": "c decisions"}, extra_args=["--quiet"])
    r = run_external(CONTRADICTION, spec)
    assert r.status is SolveStatus.UNSAT and r.returncode == 20
    assert r.counters == {}
    assert run_external(UNIT, spec).status is SolveStatus.SAT


def test_status_cross_validation(hardsat_solver):
    spec = ExternalSolverSpec(hardsat_solver, SOLVER_PRESETS["hardsat"], extra_args=["--heuristic", "jw"])
    for seed in range(10):
        f = generate_random_kcnf(RandomFormulaSpec(10, 43, 3, seed))
        assert run_external(f, spec).status is brute_force_sat(f)


def test_written_file_is_exact_dimacs_and_removed(fake_cms, tmp_path):
    script, copy = fake_cms
    f = generate_random_kcnf(RandomFormulaSpec(20, 30, 3, 1))
    before = set(os.listdir(os.environ.get("TMPDIR", "/tmp")))
    r = run_external(f, ExternalSolverSpec(script, SOLVER_PRESETS["cryptominisat"]))
    assert copy.read_text() == write_dimacs(f)
    assert r.counters == {"decisions": 300, "propagations": 3000}
    after = set(os.listdir(os.environ.get("TMPDIR", "/tmp")))
    assert not {p for p in after - before if p.startswith("hardsat-")}


def test_unmatched_pattern_warns(fake_cms, caplog):
    script, _ = fake_cms
    spec = ExternalSolverSpec(script, {"decisions": "c decisions", "restarts": "c restarts"})
    with caplog.at_level(logging.WARNING):
        r = run_external(UNIT, spec)
    assert "restarts" not in r.counters and r.counters["decisions"] == 10
    assert "restarts" in caplog.text


def test_missing_outcome_is_an_error(tmp_path):
    script = make_script(tmp_path / "mute", "print('c nothing')\n")
    with pytest.raises(ExternalSolverError) as info:
        run_external(UNIT, ExternalSolverSpec(script, {"d": "d"}))
    assert "c nothing" in info.value.output


def test_timeout(tmp_path):
    script = make_script(tmp_path / "slow", "import time\nprint('c hi', flush=True)\ntime.sleep(30)\n")
    with pytest.raises(ExternalSolverError, match="timed out"):
        run_external(UNIT, ExternalSolverSpec(script, {"d": "d"}, timeout=0.5))


def test_missing_executable(tmp_path):
    with pytest.raises(ExternalSolverError):
        run_external(UNIT, ExternalSolverSpec(str(tmp_path / "nope"), {"d": "d"}))


def test_transfer_identity(fake_cms):
    script, _ = fake_cms
    f = generate_random_kcnf(RandomFormulaSpec(20, 30, 3, 2))
    report = transfer_report(f, f, ExternalSolverSpec(script, SOLVER_PRESETS["cryptominisat"]))
    assert report.ratios == {"decisions": 1.0, "propagations": 1.0}


def test_transfer_ratio(fake_cms):
    script, _ = fake_cms
    small = generate_random_kcnf(RandomFormulaSpec(20, 10, 3, 2))
    big = generate_random_kcnf(RandomFormulaSpec(20, 40, 3, 2))
    report = transfer_report(small, big, ExternalSolverSpec(script, SOLVER_PRESETS["cryptominisat"]))
    assert report.ratios["decisions"] == pytest.approx(4.0)
    assert report.as_dict()["final"]["decisions"] == 400
