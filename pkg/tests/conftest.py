from pathlib import Path

import pytest

from garagewatch.garage import load_scenario
from garagewatch.registry import load_registry

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(__file__).parents[1] / "src" / "garagewatch" / "data"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture(scope="session")
def demo_paths():
    return {
        "scenario": DATA / "demo_scenario.json",
        "registry": DATA / "demo_registry.csv",
        "owners": DATA / "demo_owners.json",
    }


@pytest.fixture(scope="session")
def demo_scenario(demo_paths):
    return load_scenario(demo_paths["scenario"])


@pytest.fixture(scope="session")
def demo_registry(demo_paths):
    return load_registry(demo_paths["registry"])
