import numpy as np
import pytest

from tlsgn.probgen import SpectrumSpec, gapped_spectrum, generate
from tlsgn.variational import ProblemData

GOLDEN = (1 + np.sqrt(5)) / 2


@pytest.fixture
def golden():
    return ProblemData([[1.0], [0.0]], [1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_problem(rng, m, n):
    return ProblemData(rng.standard_normal((m, n)), rng.standard_normal(m))


def gapped_problem(seed, gap=4.0, m=100, n=10, sub_gap=1.0):
    sig = gapped_spectrum(n, gap, rng=np.random.default_rng(seed), sub_gap=sub_gap)
    return generate(SpectrumSpec(m, n, sig, seed))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
