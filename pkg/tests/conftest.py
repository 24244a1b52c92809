"""Shared fixtures: the five reference graphs and their spectra.

Decompositions are session-scoped because ``eigh`` on sym(4) and J(6,3) is
the slowest step shared by many tests.
"""

import numpy as np
import pytest

from noiselab import boolfn, graphs, spectral

GRAPH_BUILDERS = {
    "torus24": lambda: graphs.build_torus(2, 4),
    "torus32": lambda: graphs.build_torus(3, 2),
    "j52": lambda: graphs.build_johnson(5, 2),
    "j63": lambda: graphs.build_johnson(6, 3),
    "sym4": lambda: graphs.build_transposition_cayley(4),
}


@pytest.fixture(scope="session")
def graph_suite():
    return {name: build() for name, build in GRAPH_BUILDERS.items()}


@pytest.fixture(scope="session")
def spectrum_suite(graph_suite):
    return {name: spectral.decompose(g) for name, g in graph_suite.items()}


@pytest.fixture(scope="session")
def torus24(graph_suite):
    return graph_suite["torus24"]


@pytest.fixture(scope="session")
def sym4(graph_suite):
    return graph_suite["sym4"]


def random_boolean(rng: np.random.Generator, size: int) -> boolfn.BooleanFunction:
    """Uniform random 0/1 function on ``size`` states."""
    return boolfn.BooleanFunction(values=rng.integers(0, 2, size=size).astype(np.int8))


#: One line per acceptance criterion, echoed into the terminal summary so the
#: verdicts are visible even when output capture is on.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
