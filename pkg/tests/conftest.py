import numpy as np
import pytest

from tubegeo.base_geometry import Ball, Ellipsoid, IntervalProduct, PolytopeBase, Superellipse, sample_interior


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ball2():
    return Ball(2)


@pytest.fixture
def square():
    return IntervalProduct([0.0, 0.0], [1.0, 1.0])


@pytest.fixture
def triangle():
    return PolytopeBase([[0.0, -1.0], [-1.0, 0.0], [1.0, 1.0]], [0.0, 0.0, 1.0])


SMOOTH_BASES = {
    "ball2": lambda: Ball(2),
    "ball3": lambda: Ball(3),
    "ellipsoid2": lambda: Ellipsoid([1.0, 0.5]),
    "ellipsoid3": lambda: Ellipsoid([1.0, 0.7, 0.5]),
    "superellipse2": lambda: Superellipse([1.0, 1.0], 4),
}


def tube_pair(domain, rng, shrink=0.7, imag=0.5):
    """Two tube points with real parts in a shrunk copy of the base."""
    re = sample_interior(domain, 2, rng, shrink=shrink)
    return re + 1j * rng.uniform(-imag, imag, size=re.shape)


ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record one pass/fail line, echoed in the terminal summary."""

    def record(number, ok, detail):
        ACCEPTANCE_LINES.append((number, f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"))

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda item: str(item[0])):
            terminalreporter.write_line(line)
