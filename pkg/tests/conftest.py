import pathlib

import pytest

from soundlaw.phonology import default_inventory

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def inv():
    return default_inventory()


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR
