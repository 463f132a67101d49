import numpy as np
import pytest

from polypgan.core_types import SamplePair, Tensor


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_pair(rng, h=64, w=64, pid="p0", dtype=np.float32):
    image = rng.uniform(-1, 1, (3, h, w)).astype(dtype)
    mask = rng.choice([-1.0, 1.0], (1, h, w)).astype(dtype)
    return SamplePair(image=Tensor(image), mask=Tensor(mask), id=pid)
