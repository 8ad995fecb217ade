import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

sys.path.insert(0, str(Path(__file__).parent))

from opequiv.invariants import regularity_report  # noqa: E402
from opequiv.samples import random_gl, random_symbol  # noqa: E402

ACCEPTANCE_LINES = []


def draw_symbol(m, n, rng, gate="regular", budget=200):
    """Random symbol passing ``gate`` ('regular' or 'admissible')."""
    for _ in range(budget):
        s = random_symbol(m, n, rng)
        rep = regularity_report(s)
        if rep.overall if gate == "regular" else rep.admissible:
            return s
    raise RuntimeError(f"no {gate} symbol at (m, n) = ({m}, {n}) in {budget} draws")


def draw_pair(m, n, rng, max_cond=30.0):
    return random_gl(m, rng, max_cond), random_gl(n, rng, max_cond)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
