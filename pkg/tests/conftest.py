import json
import os

import pytest
from pathlib import Path

HERE = os.path.dirname(__file__)
ROOT = os.path.dirname(HERE)


@pytest.fixture(scope="session")
def oracles():
    with open(os.path.join(HERE, "oracles.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def config_dir():
    return Path(ROOT) / "configs"
