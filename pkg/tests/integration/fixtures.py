import os

import pytest
from dask.distributed import Client

from torsion_landscape.analytic.field import RadialTorsionField, RootConfig
from torsion_landscape.geometry.domain import extract_domain
from torsion_landscape.geometry.window import GridWindow

K2_ROOTS = (-2.0, -1.0, 1.0, 2.0)


@pytest.fixture()
def c():
    # Lazy import, otherwise the pytest framework has problems
    from torsion_landscape.context import Context

    yield Context()


@pytest.fixture(scope="session")
def k2_config():
    return RootConfig(k=2, roots=K2_ROOTS, epsilon=1e-3)


@pytest.fixture(scope="session")
def k2_construction(k2_config):
    from torsion_landscape.context import Context

    return Context().construct(k2_config)


@pytest.fixture(scope="session")
def k2_report(k2_config, k2_construction):
    from torsion_landscape.context import Context

    return Context().verify(k2_config, construction=k2_construction)


@pytest.fixture(scope="session")
def disk_field():
    return RadialTorsionField(radius=1.0)


@pytest.fixture(scope="session")
def disk_window():
    return GridWindow(-1.25, 1.25, -1.25, 1.25, nx=160, ny=160)


@pytest.fixture(scope="session")
def disk_domain(disk_field):
    return extract_domain(disk_field, GridWindow(-1.25, 1.25, -1.25, 1.25, nx=256, ny=256))


@pytest.fixture(scope="session", autouse=True)
def setup_dask_client():
    """Setup a dask client if requested"""
    address = os.getenv("TORSION_LANDSCAPE_TEST_SCHEDULER", None)
    if address:
        client = Client(address)

