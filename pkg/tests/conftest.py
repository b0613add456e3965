import math

import numpy as np
import pytest

from coopamc.channel import AmcMode, ModeTable, load_table

ACCEPTANCE_LINES: list[str] = []


def random_table(rng: np.random.Generator, n_modes: int = 4) -> ModeTable:
    """Random mode table whose fit reaches 1 exactly at each cutoff."""
    rates = np.cumsum(rng.uniform(0.3, 1.5, n_modes))
    modes = []
    for k in range(n_modes):
        a = 10 ** rng.uniform(0.5, 2.5)
        g = 10 ** rng.uniform(-1.5, 0.5)
        modes.append(AmcMode(k + 1, float(rates[k]), a, g, math.log(a) / g))
    return ModeTable(tuple(modes), packet_bits=1080)


@pytest.fixture(scope="session")
def table():
    return load_table()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
