import pytest

from livetune.clock import FakeClock, SequentialIds

DATA = __file__.rsplit("/", 1)[0] + "/data"


@pytest.fixture
def fake_clock():
    return FakeClock()


@pytest.fixture
def seq_ids():
    return SequentialIds()


@pytest.fixture
def data_dir():
    return DATA
