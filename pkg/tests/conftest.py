from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def experiment_1_path():
    return FIXTURES / "experiment_1.json"


@pytest.fixture
def experiment_2_path():
    return FIXTURES / "experiment_2.json"
