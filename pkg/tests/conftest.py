import numpy as np
import pytest

from moranlab.game import PayoffMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig_payoffs():
    """The N=20 example game used throughout: A=2, B=1, C=3, D=1."""
    return PayoffMatrix(2.0, 1.0, 3.0, 1.0)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record the outcome of one numbered acceptance criterion.

    Usage: ``criterion(5, ok, "max error 8e-4")``. The lines are printed
    together at the end of the run.
    """
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2} [PRIMARY] {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
