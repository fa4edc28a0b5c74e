import numpy as np
import pytest
from hypothesis import settings

from lvprecision import LatentDistribution, LinearFactorModel, TwoPLModel, load_fixture

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def factor_model():
    return LinearFactorModel([0, 0, 0], [0.3, 0.5, 0.7], [0.91, 0.75, 0.51], LatentDistribution.standard())


@pytest.fixture(scope="session")
def twopl_model():
    return TwoPLModel([1, 0, -2], [1, 1.5, 2], LatentDistribution.standard())


@pytest.fixture(scope="session")
def hurdle_model():
    return load_fixture("mhgrm_synthetic")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


MC_N = 10**6
MC_SEEDS = (1, 2, 3, 4, 5)


@pytest.fixture(scope="session")
def mc_samples(factor_model, twopl_model):
    """Five 10^6-row samples per example model, shared by the slow tests."""
    from lvprecision.simulation import simulate

    return {
        "factor": [simulate(factor_model, MC_N, s) for s in MC_SEEDS],
        "2pl": [simulate(twopl_model, MC_N, s) for s in MC_SEEDS],
    }
