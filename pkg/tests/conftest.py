import numpy as np
import pytest

SMALL_PRIMES = (2, 3, 5, 7)
ODD_PRIMES = (3, 5, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(n, d, rng):
    from qshuffle.statevec import StateVector

    amps = rng.normal(size=d**n) + 1j * rng.normal(size=d**n)
    return StateVector(amps / np.linalg.norm(amps), n, d)
