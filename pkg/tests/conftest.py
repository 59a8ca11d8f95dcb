import numpy as np
import pytest

from lincap.linop import unitary_from_params


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_unitary(rng, N, size=None):
    shape = (N * N,) if size is None else (size, N * N)
    return unitary_from_params(rng.standard_normal(shape), N)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; all lines are repeated in the terminal summary."""

    def _report(criterion, passed, text):
        line = f"[criterion {criterion}] {'PASS' if passed else 'FAIL'}: {text}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
