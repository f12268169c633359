import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "twistlab", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("twistlab")

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.diag([1.0, -1.0]).astype(complex)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng, dim):
    q, r = np.linalg.qr(random_complex(rng, (dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, dim):
    x = random_complex(rng, (dim, dim))
    return 0.5 * (x + x.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
