import pytest
from hypothesis import HealthCheck, settings

from services.catalog_service import CatalogService

settings.register_profile(
    "ci",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
    print_blob=True,
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def catalog():
    return CatalogService()


@pytest.fixture(scope="session")
def cp1(catalog):
    return catalog.get_polytope("cp1")


@pytest.fixture(scope="session")
def cp2(catalog):
    return catalog.get_polytope("cp2")


@pytest.fixture(scope="session")
def bl1cp2(catalog):
    return catalog.get_polytope("bl1cp2")


@pytest.fixture(scope="session")
def p1xp1(catalog):
    return catalog.get_polytope("p1xp1")


@pytest.fixture(scope="session")
def interval(catalog):
    return catalog.get_polytope("interval")
