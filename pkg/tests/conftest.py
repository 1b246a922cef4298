from pathlib import Path

import pytest

from eprsim.scenario import load_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenario_dir():
    return SCENARIOS


@pytest.fixture
def fig2():
    return load_scenario(SCENARIOS / "fig2.epr")


@pytest.fixture
def fig1():
    return load_scenario(SCENARIOS / "fig1.epr")


@pytest.fixture
def beamsplitter():
    return load_scenario(SCENARIOS / "beamsplitter.epr")


@pytest.fixture
def locus():
    return load_scenario(SCENARIOS / "locus.epr")
