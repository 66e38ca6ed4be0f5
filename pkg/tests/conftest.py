import sys

import numpy as np
import pytest
from hypothesis import settings

from voleta.meshkit import box, concatenate

settings.register_profile("ci", deadline=None, max_examples=100)
settings.load_profile("ci")


@pytest.fixture
def cube_with_satellite():
    """Unit cube plus a 0.01-edge cube sitting just beside it."""
    return concatenate([box(), box((0.01, 0.01, 0.01), origin=(1.2, 0.0, 0.0))], name="cube+sat")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
