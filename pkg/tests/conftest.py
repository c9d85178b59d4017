from __future__ import annotations

from pathlib import Path

import pytest

from patternforge.catalog import Catalog, load_catalog_file
from patternforge.network import Network, load_network_file

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(*parts: str) -> Path:
    return FIXTURES.joinpath(*parts)


@pytest.fixture(scope="session")
def basic_catalog() -> Catalog:
    return load_catalog_file(fixture_path("requirements_basic", "catalog.json"))


@pytest.fixture(scope="session")
def basic_network(basic_catalog) -> Network:
    return load_network_file(fixture_path("requirements_basic", "network.json"),
                             basic_catalog)


@pytest.fixture(scope="session")
def requirements_catalog() -> Catalog:
    return load_catalog_file(fixture_path("requirements", "catalog.json"))


@pytest.fixture(scope="session")
def requirements_network(requirements_catalog) -> Network:
    return load_network_file(fixture_path("requirements", "network.json"),
                             requirements_catalog)


@pytest.fixture(scope="session")
def automation_catalog() -> Catalog:
    return load_catalog_file(fixture_path("automation", "catalog.json"))
