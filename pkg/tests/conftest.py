import pytest

from core_count import APParams
from decomp import sigma_table
from lattice import build_lattice_model

def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")

def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)

@pytest.fixture(scope="session")
def sigma101():
    return sigma_table(APParams(101, 3), 0.5)

@pytest.fixture(scope="session")
def model101(sigma101):
    return build_lattice_model(101, 3, 0.5, sigma101)

@pytest.fixture(scope="session")
def model1001():
    return build_lattice_model(1001, 3, 0.5, sigma_table(APParams(1001, 3), 0.5))
