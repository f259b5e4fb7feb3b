import numpy as np
import pytest

from common.grid import Lattice
from common.prox import MagnitudeData
from common.sim import Phantom, make_phantom, oversample, simulate_magnitudes


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help="Lance aussi les tests marqués slow")

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason="test long : relancer avec --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope='session')
def vesicle() -> Phantom:
    return make_phantom('vesicle', Lattice(16, 16), seed=3)

@pytest.fixture(scope='session')
def oversampled(vesicle) -> tuple[np.ndarray, np.ndarray]:
    return oversample(vesicle, 2.0)

@pytest.fixture(scope='session')
def truth_density(oversampled) -> np.ndarray:
    return oversampled[0].real.copy()

@pytest.fixture(scope='session')
def support(oversampled) -> np.ndarray:
    return oversampled[1]

@pytest.fixture(scope='session')
def noiseless(truth_density) -> MagnitudeData:
    return simulate_magnitudes(truth_density)

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
