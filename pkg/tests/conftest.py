import numpy as np
import pytest

from gprtopo import GrayImage


@pytest.fixture
def ring():
    px = np.full((3, 3), 0.1)
    px[1, 1] = 1.0
    return GrayImage(px)


def write_ring_pgm(path, maxval=10):
    # border 1, centre 10 at maxval 10 -> 0.1 / 1.0
    rows = ["1 1 1", "1 10 1", "1 1 1"]
    path.write_text(f"P2\n3 3\n{maxval}\n" + "\n".join(rows) + "\n")
    return path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
