import numpy as np
import pytest

from roughpricer.charfn import CharFnTable
from roughpricer.fracriccati import REFERENCE_PARAMS

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def params():
    return REFERENCE_PARAMS


@pytest.fixture
def report(capsys):
    """Print an acceptance line immediately and keep it for the run summary."""

    def emit(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        with capsys.disabled():
            print("\n" + line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])


def bm_table(params, nodes, T, sigma):
    """A characteristic-function table for Brownian motion with volatility sigma.

    Pricing with it must reproduce Black-Scholes, which makes it an oracle for
    the inversion formulas that is independent of the Riccati solver.
    """
    nodes = np.asarray(nodes, dtype=np.complex128)
    phi = -0.5 * sigma**2 * T * (nodes * nodes + 1j * nodes)
    return CharFnTable(nodes, np.array([0.0, T]), np.stack([0 * phi, phi], axis=1), params,
                       "bm", tuple("ok" for _ in nodes))
