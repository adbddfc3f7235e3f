import importlib.resources

import pytest


@pytest.fixture(scope="session")
def data_dir():
    return importlib.resources.files("eongp") / "data"
