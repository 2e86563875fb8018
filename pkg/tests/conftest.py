import os
from pathlib import Path

import numpy as np
import pytest

from src.analysis.datagen import generate_scene, make_rng, paper_scene
from src.core.dataset import Dataset


@pytest.fixture(scope="session")
def scene() -> Dataset:
    return generate_scene(paper_scene())


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240601)


@pytest.fixture
def cloud(rng) -> Dataset:
    """60 points of a lumpy 3-D cloud with a few exact duplicates."""
    points = rng.normal(size=(60, 3))
    points[10] = points[11]
    points[20] = points[21] = points[22]
    return Dataset(points, name="cloud")


def _uci_path(variable: str) -> Path:
    value = os.environ.get(variable)
    if not value or not Path(value).is_file():
        pytest.skip(f"{variable} does not point at a file")
    return Path(value)


@pytest.fixture(scope="session")
def wdbc_path() -> Path:
    return _uci_path("LDOF_WDBC_PATH")


@pytest.fixture(scope="session")
def shuttle_path() -> Path:
    return _uci_path("LDOF_SHUTTLE_PATH")
