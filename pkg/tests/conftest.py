import numpy as np
import pytest

from prqc import fermion, spin


def random_quadratic(n, rng, real=False, offset=0.0):
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, n))
    if not real:
        A = A + 1j * rng.normal(size=(n, n))
        B = B + 1j * rng.normal(size=(n, n))
    return fermion.QuadraticHamiltonian(0.5 * (A + A.conj().T), 0.5 * (B - B.T), offset)


def random_state(n, rng, local_dim=2):
    psi = rng.normal(size=local_dim**n) + 1j * rng.normal(size=local_dim**n)
    return spin.DenseState(psi / np.linalg.norm(psi), n, local_dim)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance reporting -----------------------------------------------------------

VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        VERDICTS[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
