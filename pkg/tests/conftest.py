import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

INV_SQRT2 = 1 / math.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_observable(rng, d):
    """Random +-1 observable: a random unitary applied to a random sign diagonal."""
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(m)
    signs = rng.choice([-1.0, 1.0], size=d)
    return (q * signs) @ q.conj().T


def random_unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
