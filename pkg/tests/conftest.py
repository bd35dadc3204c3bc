import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SQRT3 = np.sqrt(3.0)


@pytest.fixture
def unit_square():
    from densepack.torus import Basis

    return Basis(np.eye(2))


@pytest.fixture
def hexagonal():
    from densepack.torus import Basis

    return Basis([[1.0, 0.0], [0.5, SQRT3 / 2]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
