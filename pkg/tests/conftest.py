import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from allocgen.reproduce import bernoulli_pool_risks, small_pool_risks  # noqa: E402

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def small_pool():
    return small_pool_risks()


@pytest.fixture
def bernoulli_pool():
    return bernoulli_pool_risks()


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR
