import csv
import json
import math

import pytest

from hardsat.cli import main
from hardsat.cnf import parse_dimacs, read_dimacs_file
from hardsat.solver import SolveStatus, brute_force_sat, solve
from hardsat.traces import TRACE_COLUMNS, read_trace


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_writes_header(tmp_path):
    out = tmp_path / "f.cnf"
    assert run("gen", "-n", 50, "-m", 100, "-k", 3, "--seed", 1, "-o", out) == 0
    assert out.read_text().splitlines()[0] == "p cnf 50 100"
    again = tmp_path / "g.cnf"
    run("gen", "-n", 50, "-m", 100, "-k", 3, "--seed", 1, "-o", again)
    assert out.read_bytes() == again.read_bytes()


def test_gen_empty_to_stdout(capsys):
    assert run("gen", "-n", 5, "-m", 0, "-k", 3, "--seed", 1) == 0
    assert capsys.readouterr().out == "p cnf 5 0\n"


def test_gen_bad_spec(capsys):
    assert run("gen", "-n", 2, "-m", 1, "-k", 3) == 1
    assert "width" in capsys.readouterr().err


@pytest.fixture
def empty_cnf(tmp_path):
    p = tmp_path / "empty.cnf"
    p.write_text("p cnf 3 0\n")
    return p


@pytest.fixture
def contradiction_cnf(tmp_path):
    p = tmp_path / "contra.cnf"
    p.write_text("p cnf 1 2\n1 0\n-1 0\n")
    return p


def test_solve_empty(empty_cnf, capsys):
    assert run("solve", empty_cnf) == 0
    out = capsys.readouterr().out
    assert "s SATISFIABLE" in out and "c decisions: 0" in out and "c propagations: 0" in out
    assert run("solve", "--quiet", empty_cnf) == 10


def test_solve_contradiction(contradiction_cnf, capsys):
    assert run("solve", "-q", contradiction_cnf) == 20
    assert capsys.readouterr().out == ""
    assert run("solve", "--json", contradiction_cnf) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["status"] == "UNSAT" and record["propagations"] == 1


def test_solve_limit_quiet(tmp_path):
    p = tmp_path / "hard.cnf"
    run("gen", "-n", 50, "-m", 300, "--seed", 1, "-o", p)
    assert run("solve", "-q", "--decision-limit", 1, p) == 0


def test_solve_model_output(tmp_path, capsys):
    p = tmp_path / "f.cnf"
    p.write_text("p cnf 2 1\n-1 2 0\n")
    run("solve", "--model", p)
    v_line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("v ")][0]
    lits = [int(x) for x in v_line.split()[1:-1]]
    assert parse_dimacs(p.read_text()).evaluate(lits)


def test_solve_sweep_matches_oracle(tmp_path):
    for seed in range(30):
        p = tmp_path / f"f{seed}.cnf"
        run("gen", "-n", 10, "-m", 43, "--seed", seed, "-o", p)
        expected = brute_force_sat(read_dimacs_file(p))
        assert run("solve", "-q", p) == (10 if expected is SolveStatus.SAT else 20)


def test_solve_parse_error(tmp_path, capsys):
    p = tmp_path / "bad.cnf"
    p.write_text("p cnf 2 1\n1 3 0\n")
    assert run("solve", p) == 2
    assert "line 2" in capsys.readouterr().err


def test_solve_missing_file(tmp_path):
    assert run("solve", tmp_path / "nope.cnf") == 2


def test_evolve_outputs(tmp_path):
    out = tmp_path / "run"
    assert run("evolve", "--preset", "fig1", "--generations", 250, "--record-every", 100, "--seed", 3, "-o", out) == 0
    for name in ("trace.csv", "manifest.json", "initial.cnf", "final.cnf", "best.cnf"):
        assert (out / name).exists()
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("#") and "rng=python-random-mt19937" in lines[0]
    assert lines[1] == ",".join(TRACE_COLUMNS)
    records = read_trace(out / "trace.csv")
    assert len(records) == math.ceil(250 / 100)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["rng"] == "python-random-mt19937"
    assert manifest["config"]["seed"] == 3
    final = read_dimacs_file(out / "final.cnf")
    stats = solve(final, _fig1_solver())
    assert stats.propagations == manifest["final_stats"]["propagations"]
    assert manifest["best_score"] >= manifest["final_score"]


def _fig1_solver():
    from hardsat.evolution import fig1_config

    return fig1_config().solver_config


def test_evolve_default_record_every(tmp_path):
    out = tmp_path / "run"
    run("evolve", "--preset", "fig1", "-n", 20, "-m", 40, "--generations", 20001, "-o", out)
    assert len(read_trace(out / "trace.csv")) == math.ceil(20001 / 2)


def test_evolve_manifest_reproduces(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("evolve", "--preset", "fig1", "-n", 30, "-m", 60, "--generations", 300, "--seed", 9,
        "--break-window", 20, "--weighted", "-o", a)
    assert run("evolve", "--config", a / "manifest.json", "-o", b) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert (a / "final.cnf").read_bytes() == (b / "final.cnf").read_bytes()


def test_evolve_two_stage_boundary(tmp_path):
    out = tmp_path / "run"
    run("evolve", "--preset", "two-stage-unsat", "-n", 20, "--generations", 200, "--seed", 2, "-o", out)
    records = read_trace(out / "trace.csv")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["stage_ends"] == [10 * 120, 10 * 120 + 200]
    counts = [r.clause_count for r in records[:1200]]
    assert counts[0] <= 120 and all(a >= b for a, b in zip(counts, counts[1:]))


def test_evolve_from_dimacs(tmp_path):
    init = tmp_path / "init.cnf"
    run("gen", "-n", 20, "-m", 40, "--seed", 4, "-o", init)
    out = tmp_path / "run"
    assert run("evolve", "--preset", "fig1", "--initial", init, "--generations", 50, "-o", out) == 0
    assert (out / "initial.cnf").read_bytes() == init.read_bytes()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["initial"] == {"dimacs": "initial.cnf"}


def test_evolve_config_errors(tmp_path, capsys):
    out = tmp_path / "run"
    assert run("evolve", "-o", out) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"initial": {"random": {"n": 5, "m": 5}}, "stages": []}')
    assert run("evolve", "--config", bad, "-o", out) == 1
    # stage-1 demands UNSAT but a sparse formula is SAT
    assert run("evolve", "--preset", "two-stage-unsat", "-n", 20, "--ratio", 1.0, "-o", out) == 1
    assert "requires status" in capsys.readouterr().err


def _summary(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_batch_single_run_matches_manifest(tmp_path):
    out = tmp_path / "batch"
    assert run("batch", "--preset", "fig1", "-n", 20, "-m", 40, "--generations", 100,
               "--runs", 1, "--seed", 5, "-o", out) == 0
    (row,) = _summary(out / "summary.csv")
    manifest = json.loads((out / "run000" / "manifest.json").read_text())
    assert int(row["seed"]) == 5
    assert int(row["initial_score"]) == manifest["initial_score"]
    assert int(row["final_score"]) == manifest["final_score"]
    assert int(row["best_score"]) == manifest["best_score"]


def test_batch_spec_file(tmp_path):
    spec = {
        "base": {
            "initial": {"random": {"n": 20, "m": 40, "k": 3}},
            "stages": [{"operator": "replace", "metric": "decisions", "duration": 30}],
        },
        "num_runs": 3,
        "base_seed": 10,
        "seed_increment": 7,
    }
    path = tmp_path / "batch.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "batch"
    assert run("batch", path, "-o", out) == 0
    rows = _summary(out / "summary.csv")
    assert [int(r["seed"]) for r in rows] == [10, 17, 24]
    assert all(r["error"] == "" for r in rows)


def test_batch_continues_after_failure(tmp_path):
    # near the threshold some initial formulas are SAT, which the first stage refuses
    out = tmp_path / "batch"
    assert run("batch", "--preset", "two-stage-unsat", "-n", 12, "--ratio", 4.6, "--generations", 20,
               "--runs", 6, "--seed", 0, "-o", out) == 0
    rows = _summary(out / "summary.csv")
    assert len(rows) == 6
    failed = [r for r in rows if r["error"]]
    ok = [r for r in rows if not r["error"]]
    assert failed and ok
    assert all("ConfigError" in r["error"] for r in failed)


def test_batch_parallel_workers(tmp_path):
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    args = ["--preset", "fig1", "-n", 20, "-m", 40, "--generations", 50, "--runs", 3, "--seed", 1]
    run("batch", *args, "-o", out1)
    run("batch", *args, "--workers", 2, "-o", out2)
    assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()


def test_crosscheck_identity(tmp_path, hardsat_solver, capsys):
    f = tmp_path / "f.cnf"
    run("gen", "-n", 30, "-m", 128, "--seed", 2, "-o", f)
    report = tmp_path / "report.json"
    assert run("crosscheck", f, f, "--solver", hardsat_solver, "--solver-preset", "hardsat",
               "--report", report) == 0
    out = capsys.readouterr().out
    assert "ratio decisions: 1.000" in out
    assert json.loads(report.read_text())["ratios"]["propagations"] == 1.0


def test_crosscheck_evolved_pair(tmp_path, hardsat_solver, capsys):
    out = tmp_path / "run"
    run("evolve", "--preset", "fig1", "-n", 30, "-m", 60, "--generations", 300, "-o", out)
    capsys.readouterr()
    assert run("crosscheck", out / "initial.cnf", out / "final.cnf", "--solver", hardsat_solver,
               "--pattern", "decisions=^c decisions", "--json") == 0
    report = json.loads(capsys.readouterr().out)
    assert "decisions" in report["ratios"]


def test_crosscheck_missing_executable(tmp_path, capsys):
    f = tmp_path / "f.cnf"
    f.write_text("p cnf 1 1\n1 0\n")
    assert run("crosscheck", f, f, "--solver", tmp_path / "no-such-solver", "--solver-preset", "minisat") != 0
    assert "not found" in capsys.readouterr().err


def test_crosscheck_bad_pattern_degrades(tmp_path, hardsat_solver, capsys, caplog):
    f = tmp_path / "f.cnf"
    f.write_text("p cnf 1 1\n1 0\n")
    assert run("crosscheck", f, f, "--solver", hardsat_solver, "--pattern", "decisions=^nothing") == 0
    assert "absent" in capsys.readouterr().out
    assert "matched nothing" in caplog.text
