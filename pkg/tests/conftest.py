import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scver import corpus  # noqa: E402
from scver.frontend import load  # noqa: E402


@pytest.fixture
def design_of():
    def make(name_or_source):
        if name_or_source.endswith(".scl"):
            return load(corpus.read(name_or_source))
        return load(name_or_source)
    return make
