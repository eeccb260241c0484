import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ionlgt.coupling import ChainSetup  # noqa: E402


@pytest.fixture(scope="session")
def setup4():
    return ChainSetup.default(4)


@pytest.fixture(scope="session")
def setup8():
    return ChainSetup.default(8)
