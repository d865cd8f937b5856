import numpy as np
import pytest
from hypothesis import settings

from ndmss.ansatz import NdmParameters

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_params(rng, n, nh, na, scale=0.5) -> NdmParameters:
    P = 2 * (n + nh + n * nh + n * na) + na
    return NdmParameters.from_vector(scale * rng.standard_normal(P), n, nh, na)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
