import numpy as np
import pytest

from bctree import TimeSeries


def random_series(rng, m, depth, n):
    return TimeSeries(rng.integers(0, m, depth), rng.integers(0, m, n), m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def toy():
    """Body 0101 after context 1, m=2: the hand-worked example used throughout."""
    return TimeSeries([1], [0, 1, 0, 1], 2)
