import math

import numpy as np
import pytest

from gfra import SystemConfig
from gfra.model import EXAMPLE_SELECTIONS


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run slow Monte Carlo tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long Monte Carlo run')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def noise_free(**changes) -> SystemConfig:
    """A short-payload noise-free configuration."""
    base = dict(m=400, na=5, tau_p=3, l=2, n_pd=128, snr_db=math.inf)
    base.update(changes)
    return SystemConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def example_cfg():
    return noise_free()


@pytest.fixture
def example_selections():
    return EXAMPLE_SELECTIONS


@pytest.fixture
def small_cfg():
    return SystemConfig(m=32, na=3, tau_p=4, l=2, n_pd=64, n_i=3,
                        snr_db=20.0, seed=7)
