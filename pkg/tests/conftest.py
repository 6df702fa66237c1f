from pathlib import Path

import pytest

from ladderphase import InterferometerModel, VapourCell, rubidium87, velocity_grid

HOT_T = 370.75  # 97.6 C


@pytest.fixture(scope="session")
def atom():
    return rubidium87()


@pytest.fixture(scope="session")
def hot_cell():
    return VapourCell(length=0.07, temperature=HOT_T, insertion_loss=0.045)


@pytest.fixture(scope="session")
def grid(atom):
    return velocity_grid(HOT_T, atom.mass)


@pytest.fixture(scope="session")
def readout():
    return InterferometerModel(tau=5e-9)


@pytest.fixture(scope="session")
def repo_root():
    return Path(__file__).resolve().parents[1]
