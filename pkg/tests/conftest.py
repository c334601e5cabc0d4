import shutil

import pytest

from verigb.solver import SolverConfig

HAVE_Z3 = shutil.which("z3") is not None

needs_solver = pytest.mark.skipif(not HAVE_Z3, reason="z3 executable not on PATH")


@pytest.fixture
def solver_cfg():
    if not HAVE_Z3:
        pytest.skip("z3 executable not on PATH")
    return SolverConfig(("z3", "-in", "-smt2"), budget=60.0, kill_grace=2.0)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
