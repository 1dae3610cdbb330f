import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import happy_mock_script, make_dataset, make_head


@pytest.fixture
def dataset(tmp_path):
    return make_dataset(tmp_path)


@pytest.fixture
def head():
    return make_head()


@pytest.fixture
def mock_backend():
    from masqrad.backends import MockBackend

    return MockBackend(happy_mock_script())
