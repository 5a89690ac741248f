import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sturmband import SpectralParams, parse_cf  # noqa: E402
from sturmband.bandtree import enumerate_bands  # noqa: E402


@pytest.fixture(scope="session")
def golden():
    return parse_cf("per:1")


@pytest.fixture(scope="session")
def golden_tree(golden):
    """Golden mean, V = 24, orders 0..12."""
    return enumerate_bands(golden, SpectralParams(24), 12)


@pytest.fixture(scope="session")
def silver_tree():
    """Period [2], V = 24, orders 0..5."""
    return enumerate_bands(parse_cf("per:2"), SpectralParams(24), 5)


@pytest.fixture(scope="session")
def mixed_tree():
    """Preperiod plus a two-quotient period with a = 3, 4; V = 30."""
    return enumerate_bands(parse_cf("[0;1,2,(3,4)]"), SpectralParams(30), 5)
