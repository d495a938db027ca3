import numpy as np
import pytest
from hypothesis import settings

from spinmarket import ModelParams, RunConfig, SpinSpace, build_custom, build_fcc

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fcc4():
    return build_fcc(4)


@pytest.fixture(scope="session")
def ring4():
    return build_custom([(0, 1), (1, 2), (2, 3), (3, 0)], 4)


@pytest.fixture
def small_config(fcc4):
    params = ModelParams(SpinSpace.discrete(1), J=1.0, a=3.0, A=3.0, T=6.0)
    return RunConfig(fcc4, params, n_sweeps=50, seed=11)


def random_spins(rng: np.random.Generator, n: int, space: SpinSpace) -> np.ndarray:
    if space.is_continuous:
        return rng.uniform(-1, 1, n)
    return rng.integers(-space.S, space.S + 1, n).astype(float)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
