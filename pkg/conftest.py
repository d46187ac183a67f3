import pytest

pytest_plugins = ["distributed.utils_test", "tests.integration.fixtures"]


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run the heavy acceptance tests")


def pytest_runtest_setup(item):
    if "slow" in item.keywords and not item.config.getoption("--runslow"):
        pytest.skip("need --runslow option to run")
