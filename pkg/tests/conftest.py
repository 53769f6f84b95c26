import numpy as np
import pytest

from oectlink.config import baseline_scenario, loads_scenario

# Small operating point for functional tests: T_min clamps the symbol
# period to 5 s (500 steps) and the seed schedule is shortened.
FAST_OVERRIDES = """
[medium]
r = 10e-6

[montecarlo]
symbols_per_seed = 400
min_seeds = 2
max_seeds = 6
cal_symbols_per_class = 120
"""


@pytest.fixture(scope="session")
def baseline():
    return baseline_scenario()


@pytest.fixture(scope="session")
def fast_scenario():
    return loads_scenario(FAST_OVERRIDES, source="fast")


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(12345))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long Monte Carlo acceptance runs")
