import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_symmetric_bits(rng, n, p=0.4, loi=True):
    upper = rng.random((n, n)) < p
    bits = np.triu(upper, 1)
    bits = bits | bits.T
    if loi:
        np.fill_diagonal(bits, True)
    return bits
