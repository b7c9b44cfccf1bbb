import numpy as np
import pytest

from bobbm.gaussian import GaussianSpec, sample_batch
from bobbm.rng import Stream
from bobbm.spectral import FourierField


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_field(rng, N, decay=1.0):
    n = np.arange(1, N + 1)
    c = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) * n ** (-decay)
    return FourierField(c)


def gaussian_fields(s, N, count, seed=0, tag=99):
    return [FourierField(c) for c in sample_batch(GaussianSpec(s, N), Stream(seed, tag), 0, count)]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def emit(label, ok, detail):
        ACCEPTANCE_LINES.append(f"{label:<14} {'PASS' if ok else 'FAIL'}  {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
