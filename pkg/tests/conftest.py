import pytest

from reachmap.config import Config
from reachmap.engine import run_protocol
from reachmap.task import SyntheticUser

PROTOCOL_SEED = 11


@pytest.fixture(scope="session")
def identity_protocol():
    return run_protocol(SyntheticUser.preset("identity"), Config(), seed=PROTOCOL_SEED)


@pytest.fixture(scope="session")
def contraction_protocol():
    return run_protocol(SyntheticUser.preset("contraction"), Config(), seed=PROTOCOL_SEED)
