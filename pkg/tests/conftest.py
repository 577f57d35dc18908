from pathlib import Path

import pytest

from gols.data import load_dataset

REPO_ROOT = Path(__file__).resolve().parents[1]
DATASETS = REPO_ROOT / "datasets"


@pytest.fixture(scope="session")
def datasets_dir():
    return DATASETS


@pytest.fixture(scope="session")
def iris_path():
    return DATASETS / "iris.csv"


@pytest.fixture(scope="session")
def iris_dataset():
    ds, schema = load_dataset(DATASETS / "iris.csv")
    return ds


@pytest.fixture(scope="session")
def iris_reference_path():
    return DATASETS / "iris_scan_reference.csv"
