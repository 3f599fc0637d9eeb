import os
import stat
import sys
import textwrap
from pathlib import Path

import pytest


def make_script(path: Path, body: str) -> str:
    path.write_text(f"#!{sys.executable}\n" + textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


@pytest.fixture
def hardsat_solver(tmp_path):
    """Executable that runs this package's solver in competition output mode."""
    return make_script(
        tmp_path / "hardsat-solver",
        """
        import sys
        from hardsat.cli import main
        sys.exit(main(["solve", *sys.argv[1:]]))
        """,
    )


@pytest.fixture
def fake_cms(tmp_path):
    """Mimics a cryptominisat-style stats block; copies its input next to itself."""
    copy = tmp_path / "seen.cnf"
    script = make_script(
        tmp_path / "fake-cms",
        f"""
        import shutil, sys
        path = sys.argv[-1]
        shutil.copy(path, {str(copy)!r})
        text = open(path).read()
        n_clauses = sum(1 for l in text.splitlines() if l and l[0] not in "cp")
        print("c decisions : %d    (0.00 %% random)" % (n_clauses * 10))
        print("c propagations : %d" % (n_clauses * 100))
        print("s UNSATISFIABLE" if "-1 0" in text.splitlines() else "s SATISFIABLE")
        sys.exit(0)
        """,
    )
    return script, copy


def pytest_report_header(config):
    return f"external solver: {os.environ.get('HARDSAT_EXTERNAL_SOLVER', 'not configured')}"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
