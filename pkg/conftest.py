import logging
import os

import numpy as np
import pytest

from config import FIXTURES_DIR
from objectives.design import Timing
from storage.files import load_design, load_points

logger = logging.getLogger(__name__)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long stochastic synthesis runs (set RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.getenv('RUN_SLOW') == '1':
        return
    skip_slow = pytest.mark.skip(reason="set RUN_SLOW=1 to run")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR


@pytest.fixture
def target_path():
    """The 64 published target points"""
    return load_points(FIXTURES_DIR / "target_path_64.csv")


@pytest.fixture
def prescribed_design():
    """Published prescribed-timing optimum"""
    return load_design(FIXTURES_DIR / "prescribed_optimum.env")


@pytest.fixture
def free_design():
    """Published free-timing optimum"""
    return load_design(FIXTURES_DIR / "free_timing_optimum.env")


@pytest.fixture
def uniform_timing():
    return Timing.uniform(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
