"""Shared fixtures and the acceptance summary."""

import numpy as np
import pytest

from symbeltrami.catalog import catalog_get
from symbeltrami.chartcalc import FlatTorus3
from symbeltrami.scalar_eigen import ScalarEigenpair, beltrami_from_scalar, solve_constrained_laplacian

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    """Store one acceptance line; the session summary prints all of them."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def torus():
    return FlatTorus3()


@pytest.fixture(scope="session")
def golden():
    """The 2.5D field ``X = (0, -2pi sin 2pi x, -2pi cos 2pi x)`` built from ``f = cos 2pi x``."""
    entry = catalog_get("t3_e3")
    pair = solve_constrained_laplacian(entry.direction, 4)
    pair = ScalarEigenpair(pair.f / 2.0, pair.lam, pair.symmetry, True, pair.wavevector)
    return beltrami_from_scalar(pair.symmetry, pair)


@pytest.fixture(scope="session")
def golden_first_integral(golden):
    """``g(X, e3) / mu = -cos 2pi x``."""
    from symbeltrami.structure import first_integral_of_pair

    return first_integral_of_pair(FlatTorus3(), golden.X, np.array([0.0, 0.0, 1.0]), golden.mu)
