"""Shared test fixtures: reference elements and small meshes."""

from pathlib import Path

import pytest

from app.core.config import get_settings
from app.services.mesh import Region, uniform_square_mesh
from app.services.refelem import build_reference_element
from app.services.scenarios import half_plane_regions

FIXTURES = Path(__file__).parent / "fixtures"


def all_acoustic(x: float, y: float) -> Region:
    return Region.ACOUSTIC


def all_elastic(x: float, y: float) -> Region:
    return Region.ELASTIC


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are re-read from the environment in every test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def ref1():
    return build_reference_element(1)


@pytest.fixture(scope="session")
def ref2():
    return build_reference_element(2)


@pytest.fixture(scope="session")
def ref3():
    return build_reference_element(3)


@pytest.fixture(scope="session")
def acoustic_mesh(ref2):
    """2 x 2 all-acoustic mesh of [-1, 1]^2, N = 2."""
    return uniform_square_mesh(2, all_acoustic, ref2)


@pytest.fixture(scope="session")
def elastic_mesh(ref2):
    return uniform_square_mesh(2, all_elastic, ref2)


@pytest.fixture(scope="session")
def coupled_mesh(ref2):
    """4 x 4 mesh, acoustic above y = 0 and elastic below, N = 2."""
    return uniform_square_mesh(4, half_plane_regions(acoustic_below=False), ref2)


@pytest.fixture
def fixture_path():
    def resolve(name: str) -> Path:
        return FIXTURES / name
    return resolve
