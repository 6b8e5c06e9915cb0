import numpy as np
import pytest

from agentinvite.core import ModelParams
from agentinvite.harness.presets import EXAMPLE1, EXAMPLE2, EXAMPLE4


def random_params(rng: np.random.Generator, lam: float = 2.0, r: int = 1000) -> ModelParams:
    """Log-uniform rates in [0.01, 10], alpha uniform in [0, 0.99]."""
    rate = lambda: float(10 ** rng.uniform(-2, 1))  # noqa: E731
    return ModelParams(
        lam=lam, r=r, alpha=float(rng.uniform(0, 0.99)), beta=rate(), mu=rate(),
        delta=rate(), theta=rate(), gamma=rate(), epsilon=rate(),
    )


@pytest.fixture
def ex1():
    return EXAMPLE1


@pytest.fixture
def ex2():
    return EXAMPLE2


@pytest.fixture
def ex4():
    return EXAMPLE4


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
